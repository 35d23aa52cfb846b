#pragma once

#include <stdexcept>
#include <string>

#include "cscmppi/sim.hpp"

namespace cscmppi {

// Parse/validation failure with file and line context in what().
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses the sectioned key/value scenario format. Unknown sections or keys
// are rejected; every diagnostic carries <source>:<line>.
Scenario parse_scenario(const std::string& text, const std::string& source_name);
Scenario load_scenario(const std::string& path);

// Canonical serialization; parse_scenario(save_scenario(sc)) round-trips.
std::string save_scenario(const Scenario& scenario);

}  // namespace cscmppi
