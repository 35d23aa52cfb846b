#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cscmppi/scenario_io.hpp"
#include "cscmppi/sim.hpp"

namespace cscmppi {

struct RunConfig {
  std::string scenario;  // builtin id ("env1"/"env2") or a file path
  std::vector<ControllerKind> controllers{ControllerKind::kCscMppi};
  std::vector<int> sample_counts;  // empty keeps the scenario's K
  int episodes = 10;
  std::optional<std::uint64_t> seed;  // overrides scenario seed_base
  std::string out_dir;
  bool trace = false;
  bool strict = false;
  int verbosity = 1;
  int threads = 0;  // 0 = hardware default
};

// Deterministic metrics document: identical (config, seed) inputs yield
// byte-identical text. Measured times are deliberately left out; they go to
// the separate timing document.
std::string summary_json(const Scenario& scenario, ControllerKind controller,
                         const BenchmarkSummary& summary, std::uint64_t seed_base);

std::string timing_json(ControllerKind controller, const BenchmarkSummary& summary);

// Line-delimited per-step records, one file per episode, ending with a
// final_state record. Replaying the logged controls from the logged states
// reproduces the episode exactly.
std::string episode_log_lines(const EpisodeResult& episode);

// Line-delimited per-step sampled rollouts + cluster labels (noise = -1).
std::string trace_lines(const EpisodeResult& episode);

// One Table-2-style row per (controller, K) combination.
std::string table_csv(const std::vector<std::string>& rows);
std::string table_row(const Scenario& scenario, ControllerKind controller,
                      const BenchmarkSummary& summary);

// Resolves a builtin id or loads a scenario file.
Scenario resolve_scenario(const std::string& source);

// Executes the configured benchmark grid and writes all artifacts under
// config.out_dir. Returns the process exit code (0 ok, 1 usage/config
// error, 2 episode failure under strict).
int run_command(const RunConfig& config);

}  // namespace cscmppi
