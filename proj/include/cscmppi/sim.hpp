#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cscmppi/clustering.hpp"
#include "cscmppi/costs.hpp"
#include "cscmppi/dynamics.hpp"
#include "cscmppi/mppi.hpp"
#include "cscmppi/projection.hpp"

namespace cscmppi {

enum class ControllerKind { kStandardMppi, kCscMppi, kCscNoDbscan };

enum class ObstacleEndBehavior { kStop, kContinue, kReverse };

// A scenario obstacle: the initial snapshot plus what happens when its
// travel time runs out. The controller only ever sees current snapshots and
// extrapolates them at constant velocity.
struct MovingObstacle {
  Obstacle shape;
  double travel_time = std::numeric_limits<double>::infinity();
  ObstacleEndBehavior end_behavior = ObstacleEndBehavior::kStop;
};

struct Scenario {
  std::string name;
  State start;
  State goal;
  double goal_tol_pos = 0.15;
  double goal_tol_theta = 0.25;
  std::vector<MovingObstacle> obstacles;
  double robot_radius = 0.15;
  // Extra planning margin on top of the footprint: the constraint boundary
  // sits at radius + robot_radius + safety_margin while collisions trigger
  // at radius + robot_radius, so tolerance-level grazing never collides.
  double safety_margin = 0.05;
  int max_steps = 1000;
  std::uint64_t seed_base = 0;

  MppiParams mppi;
  CostConfig costs;
  ProjectionParams projection;
  ClusterParams clustering;

  Scenario(const MppiParams& mppi_, const CostConfig& costs_)
      : mppi(mppi_), costs(costs_) {}

  double inflation() const { return robot_radius + safety_margin; }

  // Throws when an invariant is broken (start/goal inside an inflated
  // obstacle, non-positive tolerances, ...). The optional field prefix ends
  // up in the message so file loaders can point at the culprit.
  void validate() const;
};

enum class EpisodeOutcome { kReached, kCollided, kTimeout, kError };

// One closed-loop control step, as written to the trajectory logs.
struct StepRecord {
  int step = 0;
  double sim_time = 0.0;
  State state;  // state the controller planned from
  Control applied;
  double selected_cost = 0.0;
  int cluster_count = 0;
  int noise_count = 0;
  double projection_mean_sweeps = 0.0;
  int projection_converged = 0;
  int projection_samples = 0;
  bool selected_feasible = true;
  bool fallback_used = false;
  double compute_time_s = 0.0;  // measured, excluded from deterministic outputs
  std::shared_ptr<StepTrace> trace;
};

struct EpisodeResult {
  EpisodeOutcome outcome = EpisodeOutcome::kTimeout;
  double path_length = 0.0;
  int steps = 0;
  std::vector<State> trajectory;  // executed states, steps + 1 entries
  std::vector<Control> applied_controls;
  std::vector<StepRecord> records;
  std::uint64_t seed = 0;
  std::string error;  // set when outcome == kError
};

struct BenchmarkSummary {
  int episodes = 0;
  int collided = 0;
  int reached = 0;
  int timed_out = 0;
  int errored = 0;
  double collision_rate = 0.0;
  double success_rate = 0.0;
  // Mean over successful episodes; NaN when none succeeded.
  double mean_path_length = 0.0;
  // Fraction of control steps (all episodes) whose selected sequence's
  // predicted rollout stayed feasible.
  double constraint_satisfaction_rate = 0.0;
  long total_steps = 0;
  // Timing over successful episodes only; measured, not asserted.
  double mean_step_time_s = 0.0;
  double max_step_time_s = 0.0;
  std::vector<EpisodeResult> results;
};

EpisodeResult run_episode(const Scenario& scenario, ControllerKind controller,
                          std::uint64_t episode_seed, bool capture_trace = false);

// Episodes i = 0..n-1 run with seeds seed_base + i.
BenchmarkSummary run_benchmark(const Scenario& scenario, ControllerKind controller,
                               int n_episodes, std::uint64_t seed_base,
                               bool capture_trace = false);

// "env1": three-obstacle (one dynamic) diagonal course; "env2": single
// static disc between start and goal.
Scenario builtin_environment(const std::string& id);

const char* controller_name(ControllerKind kind);
ControllerKind controller_from_name(const std::string& name);

}  // namespace cscmppi
