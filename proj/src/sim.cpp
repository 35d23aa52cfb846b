#include "cscmppi/sim.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "cscmppi/rng.hpp"

namespace cscmppi {

void Scenario::validate() const {
  if (max_steps < 1) {
    throw std::invalid_argument("scenario: max_steps must be >= 1");
  }
  if (!(goal_tol_pos > 0.0) || !(goal_tol_theta > 0.0)) {
    throw std::invalid_argument("scenario: goal tolerances must be positive");
  }
  if (robot_radius < 0.0) {
    throw std::invalid_argument("scenario: robot_radius must be >= 0");
  }
  if (safety_margin < 0.0) {
    throw std::invalid_argument("scenario: safety_margin must be >= 0");
  }
  projection.validate();
  clustering.validate();
  for (const MovingObstacle& mo : obstacles) {
    if (!(mo.travel_time > 0.0)) {
      throw std::invalid_argument("obstacle: travel_time must be positive");
    }
    const Obstacle& o = mo.shape;
    auto inside = [&](const State& s, const Obstacle& obs) {
      return obstacle_constraint(s, obs, inflation()) > 0.0;
    };
    if (inside(start, o)) {
      throw std::invalid_argument("scenario: start lies inside an inflated obstacle");
    }
    bool goal_blocked = inside(goal, o);
    if (mo.end_behavior == ObstacleEndBehavior::kStop &&
        std::isfinite(mo.travel_time)) {
      goal_blocked = goal_blocked || inside(goal, predict_obstacle(o, mo.travel_time));
    }
    if (goal_blocked) {
      throw std::invalid_argument("scenario: goal lies inside an inflated obstacle");
    }
  }
}

namespace {

// True obstacle state owned by the simulator. The controller receives
// snapshots of it and extrapolates them at constant velocity.
struct ObstacleSim {
  Obstacle current;
  double remaining;  // travel time left before end_behavior applies
  double leg_time;   // full leg duration, used by kReverse
  ObstacleEndBehavior behavior;

  void advance(double dt) {
    double left = dt;
    while (left > 0.0 && (current.vx != 0.0 || current.vy != 0.0)) {
      const double hop = std::min(left, remaining);
      current.cx += current.vx * hop;
      current.cy += current.vy * hop;
      remaining -= hop;
      left -= hop;
      if (remaining <= 0.0) {
        switch (behavior) {
          case ObstacleEndBehavior::kStop:
            current.vx = 0.0;
            current.vy = 0.0;
            break;
          case ObstacleEndBehavior::kContinue:
            remaining = std::numeric_limits<double>::infinity();
            break;
          case ObstacleEndBehavior::kReverse:
            current.vx = -current.vx;
            current.vy = -current.vy;
            remaining = leg_time;
            break;
        }
      }
    }
  }
};

bool goal_reached(const State& s, const Scenario& sc) {
  const double dx = s.x - sc.goal.x;
  const double dy = s.y - sc.goal.y;
  return std::sqrt(dx * dx + dy * dy) <= sc.goal_tol_pos &&
         std::abs(wrap_angle(s.theta - sc.goal.theta)) <= sc.goal_tol_theta;
}

bool in_collision(const State& s, const std::vector<ObstacleSim>& obstacles,
                  double robot_radius) {
  for (const ObstacleSim& o : obstacles) {
    const double dx = s.x - o.current.cx;
    const double dy = s.y - o.current.cy;
    const double reach = robot_radius + o.current.radius;
    if (dx * dx + dy * dy < reach * reach) {
      return true;
    }
  }
  return false;
}

std::uint64_t step_seed(std::uint64_t episode_seed, int step) {
  return mix64(mix64(episode_seed) + static_cast<std::uint64_t>(step));
}

}  // namespace

EpisodeResult run_episode(const Scenario& scenario, ControllerKind controller,
                          std::uint64_t episode_seed, bool capture_trace) {
  scenario.validate();
  const DiffDriveModel model(scenario.mppi.dt);
  const CscParams csc{scenario.mppi, scenario.projection, scenario.clustering};

  std::vector<ObstacleSim> obstacles;
  obstacles.reserve(scenario.obstacles.size());
  for (const MovingObstacle& mo : scenario.obstacles) {
    obstacles.push_back({mo.shape, mo.travel_time, mo.travel_time, mo.end_behavior});
  }

  EpisodeResult result;
  result.seed = episode_seed;
  State state = scenario.start;
  result.trajectory.push_back(state);
  ControlSequence nominal(static_cast<std::size_t>(scenario.mppi.horizon), Control{});

  for (int step = 0; step < scenario.max_steps; ++step) {
    if (goal_reached(state, scenario)) {
      result.outcome = EpisodeOutcome::kReached;
      result.steps = step;
      return result;
    }

    ConstraintSet constraints{{}, scenario.mppi.bounds, scenario.inflation(),
                              scenario.robot_radius};
    constraints.obstacles.reserve(obstacles.size());
    for (const ObstacleSim& o : obstacles) {
      constraints.obstacles.push_back(o.current);
    }

    StepResult sr;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      switch (controller) {
        case ControllerKind::kStandardMppi:
          sr = standard_mppi_step(state, nominal, scenario.mppi, model,
                                  scenario.costs, constraints,
                                  step_seed(episode_seed, step), capture_trace);
          break;
        case ControllerKind::kCscMppi:
          sr = csc_mppi_step(state, nominal, csc, model, scenario.costs, constraints,
                             step_seed(episode_seed, step), capture_trace);
          break;
        case ControllerKind::kCscNoDbscan:
          sr = csc_no_dbscan_step(state, nominal, csc, model, scenario.costs,
                                  constraints, step_seed(episode_seed, step),
                                  capture_trace);
          break;
      }
    } catch (const std::exception& e) {
      result.outcome = EpisodeOutcome::kError;
      result.error = e.what();
      result.steps = step;
      return result;
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const Control applied = sr.sequence.front();
    const State prev = state;
    state = model.step(state, applied);
    for (ObstacleSim& o : obstacles) {
      o.advance(scenario.mppi.dt);
    }

    result.path_length += std::hypot(state.x - prev.x, state.y - prev.y);
    result.trajectory.push_back(state);
    result.applied_controls.push_back(applied);

    StepRecord rec;
    rec.step = step;
    rec.sim_time = static_cast<double>(step) * scenario.mppi.dt;
    rec.state = prev;
    rec.applied = applied;
    rec.selected_cost = sr.diagnostics.selected_cost;
    rec.cluster_count = sr.diagnostics.cluster_count;
    rec.noise_count = sr.diagnostics.noise_count;
    rec.projection_mean_sweeps = sr.diagnostics.projection_mean_sweeps;
    rec.projection_converged = sr.diagnostics.projection_converged;
    rec.projection_samples = sr.diagnostics.projection_samples;
    rec.selected_feasible = sr.diagnostics.selected_feasible;
    rec.fallback_used = sr.diagnostics.fallback_used;
    rec.compute_time_s = elapsed;
    rec.trace = sr.diagnostics.trace;
    result.records.push_back(std::move(rec));

    result.steps = step + 1;
    if (in_collision(state, obstacles, scenario.robot_radius)) {
      result.outcome = EpisodeOutcome::kCollided;
      return result;
    }
    nominal = shift_sequence(sr.sequence);
  }
  result.outcome = EpisodeOutcome::kTimeout;
  return result;
}

BenchmarkSummary run_benchmark(const Scenario& scenario, ControllerKind controller,
                               int n_episodes, std::uint64_t seed_base,
                               bool capture_trace) {
  if (n_episodes < 1) {
    throw std::invalid_argument("run_benchmark: n_episodes must be >= 1");
  }
  BenchmarkSummary summary;
  summary.episodes = n_episodes;
  double path_sum = 0.0;
  long feasible_steps = 0;
  double time_sum = 0.0;
  long timed_steps = 0;

  for (int i = 0; i < n_episodes; ++i) {
    EpisodeResult ep =
        run_episode(scenario, controller, seed_base + static_cast<std::uint64_t>(i),
                    capture_trace);
    switch (ep.outcome) {
      case EpisodeOutcome::kReached:
        ++summary.reached;
        path_sum += ep.path_length;
        for (const StepRecord& r : ep.records) {
          time_sum += r.compute_time_s;
          summary.max_step_time_s = std::max(summary.max_step_time_s, r.compute_time_s);
          ++timed_steps;
        }
        break;
      case EpisodeOutcome::kCollided:
        ++summary.collided;
        break;
      case EpisodeOutcome::kTimeout:
        ++summary.timed_out;
        break;
      case EpisodeOutcome::kError:
        ++summary.errored;
        break;
    }
    for (const StepRecord& r : ep.records) {
      feasible_steps += r.selected_feasible ? 1 : 0;
    }
    summary.total_steps += ep.steps;
    summary.results.push_back(std::move(ep));
  }

  const double n = static_cast<double>(n_episodes);
  summary.collision_rate = summary.collided / n;
  summary.success_rate = summary.reached / n;
  summary.mean_path_length = summary.reached > 0
                                 ? path_sum / summary.reached
                                 : std::numeric_limits<double>::quiet_NaN();
  long recorded_steps = 0;
  for (const EpisodeResult& ep : summary.results) {
    recorded_steps += static_cast<long>(ep.records.size());
  }
  summary.constraint_satisfaction_rate =
      recorded_steps > 0 ? static_cast<double>(feasible_steps) / recorded_steps : 1.0;
  summary.mean_step_time_s = timed_steps > 0 ? time_sum / timed_steps : 0.0;
  return summary;
}

Scenario builtin_environment(const std::string& id) {
  const NoiseCovariance cov{0.1, 1.0};
  const ControlBounds bounds{{0.0, -3.0}, {0.5, 3.0}};
  const QuadraticWeights weights{{10.0, 10.0, 0.0}, {50.0, 50.0, 50.0}};

  if (id == "env1") {
    const State goal{2.0, 2.0, kPi / 2.0};
    Scenario sc{MppiParams(300, 30, 0.03, 0.01, cov, bounds),
                CostConfig(weights, goal, 0.01)};
    sc.name = "env1";
    sc.start = State(-1.0, -1.0, kPi / 2.0);
    sc.goal = goal;
    // Dynamic obstacle crosses from (-1, 0) to (0.5, 0) and parks there.
    const double speed = 0.53;
    const double distance = 1.5;
    sc.obstacles.push_back({Obstacle(-1.0, 0.0, 0.3, speed, 0.0), distance / speed,
                            ObstacleEndBehavior::kStop});
    sc.obstacles.push_back({Obstacle(0.0, 1.0, 0.4)});
    sc.obstacles.push_back({Obstacle(1.5, 0.7, 0.5)});
    return sc;
  }
  if (id == "env2") {
    const State goal{1.0, 0.0, 0.0};
    Scenario sc{MppiParams(300, 30, 0.03, 0.7, cov, bounds),
                CostConfig(weights, goal, 0.7)};
    sc.name = "env2";
    sc.start = State(-1.0, 0.0, 0.0);
    sc.goal = goal;
    sc.obstacles.push_back({Obstacle(0.0, 0.0, 0.5)});
    return sc;
  }
  throw std::invalid_argument("builtin_environment: unknown id '" + id + "'");
}

const char* controller_name(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kStandardMppi:
      return "standard";
    case ControllerKind::kCscMppi:
      return "csc";
    case ControllerKind::kCscNoDbscan:
      return "csc-no-dbscan";
  }
  return "unknown";
}

ControllerKind controller_from_name(const std::string& name) {
  if (name == "standard") {
    return ControllerKind::kStandardMppi;
  }
  if (name == "csc") {
    return ControllerKind::kCscMppi;
  }
  if (name == "csc-no-dbscan") {
    return ControllerKind::kCscNoDbscan;
  }
  throw std::invalid_argument("unknown controller '" + name +
                              "' (expected standard|csc|csc-no-dbscan)");
}

}  // namespace cscmppi
