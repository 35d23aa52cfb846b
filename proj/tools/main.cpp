#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cscmppi/bench_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sampling-based MPC benchmark: standard MPPI and CSC-MPPI"};

  cscmppi::RunConfig config;
  std::string scenario;
  std::vector<std::string> controllers{"csc"};
  std::uint64_t seed = 0;
  bool seed_given = false;

  const char* env_out = std::getenv("CSCMPPI_OUT");
  config.out_dir = env_out != nullptr ? env_out : "out";

  app.add_option("--scenario", scenario, "builtin id (env1|env2) or scenario file path")
      ->required();
  app.add_option("--controller", controllers,
                 "controllers to run: standard|csc|csc-no-dbscan")
      ->delimiter(',');
  app.add_option("--episodes", config.episodes, "episodes per combination")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "base seed (default: scenario seed)")
      ->each([&seed_given](const std::string&) { seed_given = true; });
  app.add_option("--samples", config.sample_counts,
                 "sample-count overrides, e.g. 20,50,300")
      ->delimiter(',');
  app.add_option("--out", config.out_dir, "output directory (env: CSCMPPI_OUT)");
  app.add_flag("--trace", config.trace, "write per-step rollout/cluster traces");
  app.add_flag("--strict", config.strict, "exit 2 if any episode fails");
  app.add_option("--threads", config.threads, "worker threads (0 = hardware)");
  app.add_flag("-v,--verbose", config.verbosity, "increase log verbosity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  config.scenario = scenario;
  if (seed_given) {
    config.seed = seed;
  }
  config.controllers.clear();
  try {
    for (const std::string& name : controllers) {
      config.controllers.push_back(cscmppi::controller_from_name(name));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  for (int k : config.sample_counts) {
    if (k < 1) {
      std::fprintf(stderr, "error: --samples entries must be >= 1\n");
      return 1;
    }
  }
  return cscmppi::run_command(config);
}
