#include "cscmppi/scenario_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

namespace cscmppi {

namespace {

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

// One parsed section instance; [obstacle] may repeat, the others may not.
struct Section {
  std::string name;
  int line = 0;
  std::map<std::string, Entry> entries;
};

[[noreturn]] void fail(const std::string& source, int line, const std::string& msg) {
  throw ScenarioError(source + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) {
    return "";
  }
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<Section> tokenize(const std::string& text, const std::string& source) {
  std::vector<Section> sections;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  Section* current = nullptr;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        fail(source, line_no, "malformed section header '" + line + "'");
      }
      sections.push_back({trim(line.substr(1, line.size() - 2)), line_no, {}});
      current = &sections.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(source, line_no, "expected 'key = value', got '" + line + "'");
    }
    if (current == nullptr) {
      fail(source, line_no, "key/value pair before any [section]");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      fail(source, line_no, "empty key or value");
    }
    if (current->entries.count(key) != 0) {
      fail(source, line_no, "duplicate key '" + key + "' in [" + current->name + "]");
    }
    current->entries[key] = {value, line_no, false};
  }
  return sections;
}

// Typed accessors over one section.
class Fields {
 public:
  Fields(Section& section, const std::string& source)
      : section_(section), source_(source) {}

  bool has(const std::string& key) const { return section_.entries.count(key) != 0; }

  std::string str(const std::string& key) {
    Entry& e = require(key);
    return e.value;
  }

  std::string str_or(const std::string& key, const std::string& fallback) {
    return has(key) ? str(key) : fallback;
  }

  double number(const std::string& key) {
    Entry& e = require(key);
    return parse_double(e.value, e.line, key);
  }

  double number_or(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  long integer(const std::string& key) {
    Entry& e = require(key);
    const double d = parse_double(e.value, e.line, key);
    if (d != std::floor(d)) {
      fail(source_, e.line, "key '" + key + "' must be an integer");
    }
    return static_cast<long>(d);
  }

  long integer_or(const std::string& key, long fallback) {
    return has(key) ? integer(key) : fallback;
  }

  bool flag_or(const std::string& key, bool fallback) {
    if (!has(key)) {
      return fallback;
    }
    Entry& e = require(key);
    if (e.value == "true") {
      return true;
    }
    if (e.value == "false") {
      return false;
    }
    fail(source_, e.line, "key '" + key + "' must be true or false");
  }

  std::vector<double> numbers(const std::string& key, std::size_t count) {
    Entry& e = require(key);
    std::istringstream in(e.value);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
      out.push_back(parse_double(tok, e.line, key));
    }
    if (out.size() != count) {
      fail(source_, e.line,
           "key '" + key + "' expects " + std::to_string(count) + " numbers");
    }
    return out;
  }

  int line(const std::string& key) { return require(key).line; }

  void finish() const {
    for (const auto& [key, entry] : section_.entries) {
      if (!entry.used) {
        fail(source_, entry.line, "unknown key '" + key + "' in [" + section_.name + "]");
      }
    }
  }

 private:
  Entry& require(const std::string& key) {
    auto it = section_.entries.find(key);
    if (it == section_.entries.end()) {
      fail(source_, section_.line,
           "missing required key '" + key + "' in [" + section_.name + "]");
    }
    it->second.used = true;
    return it->second;
  }

  double parse_double(const std::string& text, int line, const std::string& key) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
      fail(source_, line, "key '" + key + "' has a malformed number '" + text + "'");
    }
    return value;
  }

  Section& section_;
  const std::string& source_;
};

ObstacleEndBehavior behavior_from(const std::string& name, const std::string& source,
                                  int line) {
  if (name == "stop") {
    return ObstacleEndBehavior::kStop;
  }
  if (name == "continue") {
    return ObstacleEndBehavior::kContinue;
  }
  if (name == "reverse") {
    return ObstacleEndBehavior::kReverse;
  }
  fail(source, line, "end_behavior must be stop|continue|reverse");
}

const char* behavior_name(ObstacleEndBehavior b) {
  switch (b) {
    case ObstacleEndBehavior::kStop:
      return "stop";
    case ObstacleEndBehavior::kContinue:
      return "continue";
    case ObstacleEndBehavior::kReverse:
      return "reverse";
  }
  return "stop";
}

std::string format_number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& source) {
  std::vector<Section> sections = tokenize(text, source);

  Section* scenario_sec = nullptr;
  Section* mppi_sec = nullptr;
  Section* costs_sec = nullptr;
  Section* projection_sec = nullptr;
  Section* clustering_sec = nullptr;
  std::vector<Section*> obstacle_secs;
  for (Section& s : sections) {
    auto bind_unique = [&](Section*& slot) {
      if (slot != nullptr) {
        fail(source, s.line, "section [" + s.name + "] appears twice");
      }
      slot = &s;
    };
    if (s.name == "scenario") {
      bind_unique(scenario_sec);
    } else if (s.name == "mppi") {
      bind_unique(mppi_sec);
    } else if (s.name == "costs") {
      bind_unique(costs_sec);
    } else if (s.name == "projection") {
      bind_unique(projection_sec);
    } else if (s.name == "clustering") {
      bind_unique(clustering_sec);
    } else if (s.name == "obstacle") {
      obstacle_secs.push_back(&s);
    } else {
      fail(source, s.line, "unknown section [" + s.name + "]");
    }
  }
  if (scenario_sec == nullptr) {
    fail(source, 1, "missing [scenario] section");
  }
  if (mppi_sec == nullptr) {
    fail(source, 1, "missing [mppi] section");
  }
  if (costs_sec == nullptr) {
    fail(source, 1, "missing [costs] section");
  }

  try {
    Fields mppi(*mppi_sec, source);
    const int samples = static_cast<int>(mppi.integer("samples"));
    const int horizon = static_cast<int>(mppi.integer("horizon"));
    const double dt = mppi.number("dt");
    const double lambda = mppi.number("lambda");
    const NoiseCovariance cov{mppi.number("sigma_v"), mppi.number("sigma_w")};
    const ControlBounds bounds{{mppi.number("v_min"), mppi.number("w_min")},
                               {mppi.number("v_max"), mppi.number("w_max")}};
    MppiParams mppi_params(samples, horizon, dt, lambda, cov, bounds);
    mppi_params.clamp_samples = mppi.flag_or("clamp_samples", false);
    mppi.finish();

    Fields sc_fields(*scenario_sec, source);
    const auto start_v = sc_fields.numbers("start", 3);
    const auto goal_v = sc_fields.numbers("goal", 3);
    const State start{start_v[0], start_v[1], start_v[2]};
    const State goal{goal_v[0], goal_v[1], goal_v[2]};

    Fields costs(*costs_sec, source);
    const auto q = costs.numbers("q_diag", 3);
    const auto h = costs.numbers("h_diag", 3);
    CostConfig cost_cfg{QuadraticWeights{{q[0], q[1], q[2]}, {h[0], h[1], h[2]}},
                        goal, lambda, costs.number_or("collision_penalty", 1e4)};
    const std::string penalty_mode = costs.str_or("control_penalty", "algorithm_form");
    if (penalty_mode == "quadratic_r") {
      cost_cfg.penalty_mode = ControlPenaltyMode::kQuadraticR;
    } else if (penalty_mode != "algorithm_form") {
      fail(source, costs.line("control_penalty"),
           "control_penalty must be algorithm_form|quadratic_r");
    }
    if (costs.has("r_diag")) {
      const auto r = costs.numbers("r_diag", 2);
      cost_cfg.r_diag = {r[0], r[1]};
    }
    costs.finish();

    Scenario scenario{mppi_params, cost_cfg};
    scenario.name = sc_fields.str_or("name", "scenario");
    scenario.start = start;
    scenario.goal = goal;
    scenario.goal_tol_pos = sc_fields.number_or("goal_tol_pos", 0.15);
    scenario.goal_tol_theta = sc_fields.number_or("goal_tol_theta", 0.25);
    scenario.robot_radius = sc_fields.number_or("robot_radius", 0.15);
    scenario.safety_margin = sc_fields.number_or("safety_margin", 0.05);
    scenario.max_steps = static_cast<int>(sc_fields.integer_or("max_steps", 1000));
    scenario.seed_base =
        static_cast<std::uint64_t>(sc_fields.integer_or("seed", 0));
    sc_fields.finish();

    if (projection_sec != nullptr) {
      Fields proj(*projection_sec, source);
      const std::string mode = proj.str_or("mode", "primal_dual");
      if (mode == "clamp_only") {
        scenario.projection.mode = ProjectionMode::kClampOnly;
      } else if (mode != "primal_dual") {
        fail(source, proj.line("mode"), "mode must be primal_dual|clamp_only");
      }
      if (proj.has("alpha")) {
        const auto a = proj.numbers("alpha", 2);
        scenario.projection.alpha = {a[0], a[1]};
      }
      if (proj.has("beta_lower")) {
        const auto b = proj.numbers("beta_lower", 2);
        scenario.projection.beta_lower = {b[0], b[1]};
      }
      if (proj.has("beta_upper")) {
        const auto b = proj.numbers("beta_upper", 2);
        scenario.projection.beta_upper = {b[0], b[1]};
      }
      scenario.projection.max_iters =
          static_cast<int>(proj.integer_or("max_iters", scenario.projection.max_iters));
      scenario.projection.tol_violation =
          proj.number_or("tol_violation", scenario.projection.tol_violation);
      scenario.projection.tol_stationarity =
          proj.number_or("tol_stationarity", scenario.projection.tol_stationarity);
      proj.finish();
    }

    if (clustering_sec != nullptr) {
      Fields cl(*clustering_sec, source);
      const std::string eps = cl.str_or("eps", "adaptive");
      if (eps != "adaptive") {
        scenario.clustering.eps = cl.number("eps");
      }
      scenario.clustering.min_pts =
          static_cast<int>(cl.integer_or("min_pts", scenario.clustering.min_pts));
      const std::string scale = cl.str_or("cost_scale", "auto");
      if (scale != "auto") {
        scenario.clustering.cost_scale = cl.number("cost_scale");
      }
      const std::string fallback = cl.str_or("fallback", "all_samples");
      if (fallback == "best_singleton") {
        scenario.clustering.fallback = ClusterFallback::kBestSingleton;
      } else if (fallback != "all_samples") {
        fail(source, cl.line("fallback"), "fallback must be all_samples|best_singleton");
      }
      const std::string selection = cl.str_or("selection", "evaluated_rollout");
      if (selection == "cluster_min_cost") {
        scenario.clustering.selection = SelectionMode::kClusterMinCost;
      } else if (selection != "evaluated_rollout") {
        fail(source, cl.line("selection"),
             "selection must be evaluated_rollout|cluster_min_cost");
      }
      scenario.clustering.violation_cost_weight = cl.number_or(
          "violation_cost_weight", scenario.clustering.violation_cost_weight);
      cl.finish();
    }

    for (Section* osec : obstacle_secs) {
      Fields of(*osec, source);
      const auto center = of.numbers("center", 2);
      const double radius = of.number("radius");
      if (!(radius > 0.0)) {
        fail(source, of.line("radius"), "key 'radius' must be positive");
      }
      double vx = 0.0;
      double vy = 0.0;
      if (of.has("velocity")) {
        const auto vel = of.numbers("velocity", 2);
        vx = vel[0];
        vy = vel[1];
      }
      MovingObstacle mo{Obstacle{center[0], center[1], radius, vx, vy}};
      if (of.has("end")) {
        if (of.has("travel_time")) {
          fail(source, of.line("end"), "give either 'end' or 'travel_time', not both");
        }
        const auto end = of.numbers("end", 2);
        const double speed = std::hypot(vx, vy);
        if (speed <= 0.0) {
          fail(source, of.line("end"), "'end' requires a nonzero velocity");
        }
        mo.travel_time = std::hypot(end[0] - center[0], end[1] - center[1]) / speed;
      } else if (of.has("travel_time")) {
        mo.travel_time = of.number("travel_time");
        if (!(mo.travel_time > 0.0)) {
          fail(source, of.line("travel_time"), "key 'travel_time' must be positive");
        }
      }
      if (of.has("end_behavior")) {
        mo.end_behavior =
            behavior_from(of.str("end_behavior"), source, of.line("end_behavior"));
      }
      of.finish();
      scenario.obstacles.push_back(mo);
    }

    scenario.validate();
    return scenario;
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioError(source + ": " + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ScenarioError(path + ": cannot open scenario file");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

std::string save_scenario(const Scenario& sc) {
  std::ostringstream out;
  const auto num = [](double v) { return format_number(v); };
  out << "[scenario]\n";
  out << "name = " << sc.name << "\n";
  out << "start = " << num(sc.start.x) << " " << num(sc.start.y) << " "
      << num(sc.start.theta) << "\n";
  out << "goal = " << num(sc.goal.x) << " " << num(sc.goal.y) << " "
      << num(sc.goal.theta) << "\n";
  out << "goal_tol_pos = " << num(sc.goal_tol_pos) << "\n";
  out << "goal_tol_theta = " << num(sc.goal_tol_theta) << "\n";
  out << "robot_radius = " << num(sc.robot_radius) << "\n";
  out << "safety_margin = " << num(sc.safety_margin) << "\n";
  out << "max_steps = " << sc.max_steps << "\n";
  out << "seed = " << sc.seed_base << "\n";

  for (const MovingObstacle& mo : sc.obstacles) {
    out << "\n[obstacle]\n";
    out << "center = " << num(mo.shape.cx) << " " << num(mo.shape.cy) << "\n";
    out << "radius = " << num(mo.shape.radius) << "\n";
    if (mo.shape.vx != 0.0 || mo.shape.vy != 0.0) {
      out << "velocity = " << num(mo.shape.vx) << " " << num(mo.shape.vy) << "\n";
      if (std::isfinite(mo.travel_time)) {
        out << "travel_time = " << num(mo.travel_time) << "\n";
      }
      out << "end_behavior = " << behavior_name(mo.end_behavior) << "\n";
    }
  }

  out << "\n[mppi]\n";
  out << "samples = " << sc.mppi.samples << "\n";
  out << "horizon = " << sc.mppi.horizon << "\n";
  out << "dt = " << num(sc.mppi.dt) << "\n";
  out << "lambda = " << num(sc.mppi.lambda) << "\n";
  out << "sigma_v = " << num(sc.mppi.cov.sigma_v) << "\n";
  out << "sigma_w = " << num(sc.mppi.cov.sigma_w) << "\n";
  out << "v_min = " << num(sc.mppi.bounds.lower.v) << "\n";
  out << "v_max = " << num(sc.mppi.bounds.upper.v) << "\n";
  out << "w_min = " << num(sc.mppi.bounds.lower.w) << "\n";
  out << "w_max = " << num(sc.mppi.bounds.upper.w) << "\n";
  if (sc.mppi.clamp_samples) {
    out << "clamp_samples = true\n";
  }

  out << "\n[costs]\n";
  out << "q_diag = " << num(sc.costs.weights.q_diag[0]) << " "
      << num(sc.costs.weights.q_diag[1]) << " " << num(sc.costs.weights.q_diag[2])
      << "\n";
  out << "h_diag = " << num(sc.costs.weights.h_diag[0]) << " "
      << num(sc.costs.weights.h_diag[1]) << " " << num(sc.costs.weights.h_diag[2])
      << "\n";
  out << "collision_penalty = " << num(sc.costs.collision_penalty) << "\n";
  if (sc.costs.penalty_mode == ControlPenaltyMode::kQuadraticR) {
    out << "control_penalty = quadratic_r\n";
    out << "r_diag = " << num(sc.costs.r_diag[0]) << " " << num(sc.costs.r_diag[1])
        << "\n";
  }

  out << "\n[projection]\n";
  out << "mode = "
      << (sc.projection.mode == ProjectionMode::kClampOnly ? "clamp_only"
                                                           : "primal_dual")
      << "\n";
  out << "alpha = " << num(sc.projection.alpha.v) << " " << num(sc.projection.alpha.w)
      << "\n";
  out << "beta_lower = " << num(sc.projection.beta_lower.v) << " "
      << num(sc.projection.beta_lower.w) << "\n";
  out << "beta_upper = " << num(sc.projection.beta_upper.v) << " "
      << num(sc.projection.beta_upper.w) << "\n";
  out << "max_iters = " << sc.projection.max_iters << "\n";
  out << "tol_violation = " << num(sc.projection.tol_violation) << "\n";
  out << "tol_stationarity = " << num(sc.projection.tol_stationarity) << "\n";

  out << "\n[clustering]\n";
  out << "eps = " << (sc.clustering.eps ? num(*sc.clustering.eps) : "adaptive") << "\n";
  out << "min_pts = " << sc.clustering.min_pts << "\n";
  out << "cost_scale = "
      << (sc.clustering.cost_scale ? num(*sc.clustering.cost_scale) : "auto") << "\n";
  out << "fallback = "
      << (sc.clustering.fallback == ClusterFallback::kBestSingleton ? "best_singleton"
                                                                    : "all_samples")
      << "\n";
  out << "selection = "
      << (sc.clustering.selection == SelectionMode::kClusterMinCost
              ? "cluster_min_cost"
              : "evaluated_rollout")
      << "\n";
  out << "violation_cost_weight = " << num(sc.clustering.violation_cost_weight) << "\n";
  return out.str();
}

}  // namespace cscmppi
