#include "cscmppi/bench_io.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "cscmppi/parallel.hpp"

namespace cscmppi {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

const char* outcome_name(EpisodeOutcome o) {
  switch (o) {
    case EpisodeOutcome::kReached:
      return "reached";
    case EpisodeOutcome::kCollided:
      return "collided";
    case EpisodeOutcome::kTimeout:
      return "timeout";
    case EpisodeOutcome::kError:
      return "error";
  }
  return "unknown";
}

ordered_json state_json(const State& s) {
  return ordered_json{s.x, s.y, s.theta};
}

ordered_json finite_or_null(double v) {
  if (std::isfinite(v)) {
    return v;
  }
  return nullptr;
}

}  // namespace

std::string summary_json(const Scenario& scenario, ControllerKind controller,
                         const BenchmarkSummary& summary, std::uint64_t seed_base) {
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["scenario"] = scenario.name;
  doc["controller"] = controller_name(controller);
  doc["samples"] = scenario.mppi.samples;
  doc["episodes"] = summary.episodes;
  doc["seed"] = seed_base;

  ordered_json metrics;
  metrics["collision_rate"] = summary.collision_rate;
  metrics["success_rate"] = summary.success_rate;
  metrics["timeout_count"] = summary.timed_out;
  metrics["error_count"] = summary.errored;
  metrics["mean_path_length_m"] = finite_or_null(summary.mean_path_length);
  metrics["constraint_satisfaction_rate"] = summary.constraint_satisfaction_rate;
  metrics["total_control_steps"] = summary.total_steps;
  doc["metrics"] = metrics;

  ordered_json episodes = ordered_json::array();
  for (const EpisodeResult& ep : summary.results) {
    int infeasible = 0;
    for (const StepRecord& r : ep.records) {
      infeasible += r.selected_feasible ? 0 : 1;
    }
    ordered_json e;
    e["seed"] = ep.seed;
    e["outcome"] = outcome_name(ep.outcome);
    e["steps"] = ep.steps;
    e["path_length_m"] = ep.path_length;
    e["infeasible_selected_steps"] = infeasible;
    e["final_state"] = state_json(ep.trajectory.back());
    if (!ep.error.empty()) {
      e["error"] = ep.error;
    }
    episodes.push_back(std::move(e));
  }
  doc["per_episode"] = episodes;

  // Canonical scenario text so results stay attributable to exact settings.
  doc["scenario_config"] = save_scenario(scenario);
  return doc.dump(2) + "\n";
}

std::string timing_json(ControllerKind controller, const BenchmarkSummary& summary) {
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["controller"] = controller_name(controller);
  doc["mean_step_time_ms"] = summary.mean_step_time_s * 1e3;
  doc["max_step_time_ms"] = summary.max_step_time_s * 1e3;
  doc["note"] = "measured on this host over successful episodes; not a reproducible metric";
  return doc.dump(2) + "\n";
}

std::string episode_log_lines(const EpisodeResult& episode) {
  std::ostringstream out;
  for (const StepRecord& r : episode.records) {
    ordered_json rec;
    rec["step"] = r.step;
    rec["sim_time"] = r.sim_time;
    rec["state"] = state_json(r.state);
    rec["control"] = ordered_json{r.applied.v, r.applied.w};
    rec["selected_cost"] = r.selected_cost;
    rec["clusters"] = r.cluster_count;
    rec["noise"] = r.noise_count;
    rec["projection_sweeps"] = r.projection_mean_sweeps;
    rec["selected_feasible"] = r.selected_feasible;
    rec["compute_time_s"] = r.compute_time_s;
    out << rec.dump() << "\n";
  }
  ordered_json footer;
  footer["final_state"] = state_json(episode.trajectory.back());
  footer["outcome"] = outcome_name(episode.outcome);
  footer["path_length_m"] = episode.path_length;
  out << footer.dump() << "\n";
  return out.str();
}

std::string trace_lines(const EpisodeResult& episode) {
  std::ostringstream out;
  for (const StepRecord& r : episode.records) {
    if (!r.trace) {
      continue;
    }
    ordered_json rec;
    rec["step"] = r.step;
    rec["labels"] = r.trace->cluster_labels;
    auto pack = [](const StateTrajectory& traj) {
      ordered_json arr = ordered_json::array();
      for (const State& s : traj) {
        // Plot-ready precision; the replay-grade states live in the episode log.
        arr.push_back(ordered_json{std::round(s.x * 1e6) / 1e6,
                                   std::round(s.y * 1e6) / 1e6,
                                   std::round(s.theta * 1e6) / 1e6});
      }
      return arr;
    };
    ordered_json rollouts = ordered_json::array();
    for (const StateTrajectory& traj : r.trace->rollouts) {
      rollouts.push_back(pack(traj));
    }
    rec["rollouts"] = rollouts;
    rec["selected_rollout"] = pack(r.trace->selected_rollout);
    out << rec.dump() << "\n";
  }
  return out.str();
}

std::string table_row(const Scenario& scenario, ControllerKind controller,
                      const BenchmarkSummary& summary) {
  std::ostringstream row;
  row << scenario.name << "," << controller_name(controller) << ","
      << scenario.mppi.samples << "," << summary.episodes << ","
      << summary.collision_rate << ",";
  if (std::isfinite(summary.mean_path_length)) {
    row << summary.mean_path_length;
  }
  row << "," << summary.constraint_satisfaction_rate << ","
      << summary.mean_step_time_s * 1e3 << "," << summary.max_step_time_s * 1e3;
  return row.str();
}

std::string table_csv(const std::vector<std::string>& rows) {
  std::string out =
      "scenario,controller,samples,episodes,collision_rate,mean_path_length_m,"
      "constraint_satisfaction_rate,avg_step_time_ms,max_step_time_ms\n";
  for (const std::string& r : rows) {
    out += r + "\n";
  }
  return out;
}

Scenario resolve_scenario(const std::string& source) {
  if (source == "env1" || source == "env2") {
    return builtin_environment(source);
  }
  return load_scenario(source);
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  }
  out << content;
  if (!out) {
    throw std::runtime_error("write failed for '" + path.string() + "'");
  }
}

}  // namespace

int run_command(const RunConfig& config) {
  namespace fs = std::filesystem;
  try {
    if (config.episodes < 1) {
      std::cerr << "error: --episodes must be >= 1\n";
      return 1;
    }
    util::set_max_threads(config.threads);
    const Scenario base = resolve_scenario(config.scenario);
    const std::uint64_t seed = config.seed.value_or(base.seed_base);

    fs::path out_root(config.out_dir.empty() ? "out" : config.out_dir);
    fs::create_directories(out_root);

    std::vector<int> k_values = config.sample_counts;
    if (k_values.empty()) {
      k_values.push_back(base.mppi.samples);
    }

    bool any_failure = false;
    std::vector<std::string> rows;
    for (ControllerKind controller : config.controllers) {
      for (int k : k_values) {
        Scenario scenario = base;
        scenario.mppi.samples = k;
        const std::string label =
            std::string(controller_name(controller)) + "-K" + std::to_string(k);
        if (config.verbosity >= 1) {
          std::cerr << "running " << scenario.name << " " << label << " ("
                    << config.episodes << " episodes, seed " << seed << ")\n";
        }
        const BenchmarkSummary summary =
            run_benchmark(scenario, controller, config.episodes, seed, config.trace);

        const fs::path combo_dir = out_root / label;
        fs::create_directories(combo_dir / "episodes");
        write_file(combo_dir / "summary.json",
                   summary_json(scenario, controller, summary, seed));
        write_file(combo_dir / "timing.json", timing_json(controller, summary));
        write_file(combo_dir / "scenario.txt", save_scenario(scenario));
        for (std::size_t i = 0; i < summary.results.size(); ++i) {
          char name[32];
          std::snprintf(name, sizeof(name), "episode_%03zu.jsonl", i);
          write_file(combo_dir / "episodes" / name,
                     episode_log_lines(summary.results[i]));
          if (config.trace) {
            std::snprintf(name, sizeof(name), "trace_%03zu.jsonl", i);
            write_file(combo_dir / "episodes" / name,
                       trace_lines(summary.results[i]));
          }
        }
        rows.push_back(table_row(scenario, controller, summary));

        if (config.verbosity >= 1) {
          std::cerr << "  collision_rate=" << summary.collision_rate
                    << " satisfaction=" << summary.constraint_satisfaction_rate
                    << " mean_path=" << summary.mean_path_length << "\n";
        }
        any_failure = any_failure || summary.collided > 0 || summary.timed_out > 0 ||
                      summary.errored > 0;
      }
    }
    write_file(out_root / "table.csv", table_csv(rows));
    if (config.strict && any_failure) {
      return 2;
    }
    return 0;
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace cscmppi
