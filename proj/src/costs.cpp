#include "cscmppi/costs.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cscmppi {

QuadraticWeights::QuadraticWeights(const std::array<double, 3>& q,
                                   const std::array<double, 3>& h)
    : q_diag(q), h_diag(h) {
  for (double v : q_diag) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("QuadraticWeights: Q entries must be >= 0");
    }
  }
  for (double v : h_diag) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("QuadraticWeights: H entries must be >= 0");
    }
  }
}

CostConfig::CostConfig(const QuadraticWeights& w, const State& goal_, double lambda_,
                       double collision_penalty_)
    : weights(w), goal(goal_), lambda(lambda_), collision_penalty(collision_penalty_) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("CostConfig: lambda must be positive");
  }
  if (collision_penalty < 0.0 || !std::isfinite(collision_penalty)) {
    throw std::invalid_argument("CostConfig: collision_penalty must be >= 0");
  }
}

namespace {

double quadratic_error(const State& x, const State& goal, const std::array<double, 3>& diag) {
  const double ex = x.x - goal.x;
  const double ey = x.y - goal.y;
  const double et = wrap_angle(x.theta - goal.theta);
  return diag[0] * ex * ex + diag[1] * ey * ey + diag[2] * et * et;
}

}  // namespace

double running_cost(const State& x, const CostConfig& cfg) {
  return quadratic_error(x, cfg.goal, cfg.weights.q_diag);
}

double terminal_cost(const State& x, const CostConfig& cfg) {
  return quadratic_error(x, cfg.goal, cfg.weights.h_diag);
}

double obstacle_constraint(const State& x, const Obstacle& obs, double inflation) {
  const double r_eff = obs.radius + inflation;
  const double dx = x.x - obs.cx;
  const double dy = x.y - obs.cy;
  return r_eff * r_eff - dx * dx - dy * dy;
}

Eigen::Vector3d obstacle_constraint_gradient(const State& x, const Obstacle& obs,
                                             double /*inflation*/) {
  return {-2.0 * (x.x - obs.cx), -2.0 * (x.y - obs.cy), 0.0};
}

double soft_collision_penalty(const StateTrajectory& traj,
                              const ConstraintSet& constraints,
                              const CostConfig& cfg, double dt) {
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = static_cast<double>(i) * dt;
    for (const Obstacle& obs : constraints.obstacles) {
      if (obstacle_constraint(traj[i], predict_obstacle(obs, t),
                              constraints.soft_inflation) > 0.0) {
        return cfg.collision_penalty;
      }
    }
  }
  return 0.0;
}

double trajectory_cost(const StateTrajectory& traj, const ControlSequence& nominal,
                       const ControlSequence& perturbed, const CostConfig& cfg,
                       const NoiseCovariance& cov, bool soft_constraints,
                       const ConstraintSet& constraints, double dt) {
  const std::size_t n = nominal.size();
  if (perturbed.size() != n || traj.size() != n + 1) {
    throw std::invalid_argument("trajectory_cost: inconsistent horizon lengths");
  }
  const double inv_var_v = 1.0 / (cov.sigma_v * cov.sigma_v);
  const double inv_var_w = 1.0 / (cov.sigma_w * cov.sigma_w);

  double cost = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    cost += running_cost(traj[t], cfg);
    if (cfg.penalty_mode == ControlPenaltyMode::kAlgorithmForm) {
      // The importance-sampling correction enters the weight exponent
      // outside the 1/lambda factor, so folded into S it carries lambda.
      cost += cfg.lambda * (nominal[t].v * inv_var_v * perturbed[t].v +
                            nominal[t].w * inv_var_w * perturbed[t].w);
    } else {
      cost += 0.5 * (cfg.r_diag[0] * nominal[t].v * nominal[t].v +
                     cfg.r_diag[1] * nominal[t].w * nominal[t].w);
    }
  }
  cost += terminal_cost(traj[n], cfg);
  if (soft_constraints) {
    cost += soft_collision_penalty(traj, constraints, cfg, dt);
  }
  return cost;
}

double max_constraint_violation(const StateTrajectory& traj,
                                const ConstraintSet& constraints, double dt) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = static_cast<double>(i) * dt;
    for (const Obstacle& obs : constraints.obstacles) {
      worst = std::max(worst, obstacle_constraint(traj[i], predict_obstacle(obs, t),
                                                  constraints.inflation));
    }
  }
  return worst;
}

}  // namespace cscmppi
