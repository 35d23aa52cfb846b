#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "cscmppi/dynamics.hpp"
#include "cscmppi/types.hpp"

namespace cscmppi {

// Diagonal weights of the quadratic running and terminal state costs.
struct QuadraticWeights {
  std::array<double, 3> q_diag;
  std::array<double, 3> h_diag;

  QuadraticWeights(const std::array<double, 3>& q, const std::array<double, 3>& h);
};

enum class ControlPenaltyMode {
  kAlgorithmForm,  // u_t^T Sigma^-1 v_t, accumulated with the running cost
  kQuadraticR,     // 1/2 u_t^T R u_t
};

struct CostConfig {
  QuadraticWeights weights;
  State goal;
  double lambda;                    // softmax temperature
  double collision_penalty = 1e4;   // soft-constraint mode only
  ControlPenaltyMode penalty_mode = ControlPenaltyMode::kAlgorithmForm;
  std::array<double, 2> r_diag{1.0, 1.0};  // read only in kQuadraticR mode

  CostConfig(const QuadraticWeights& w, const State& goal_, double lambda_,
             double collision_penalty_ = 1e4);
};

// Obstacles plus control bounds. `inflation` widens the hard constraint g
// (footprint plus safety margin); `soft_inflation` is the radius the soft
// collision penalty tests against (footprint only, since it models actual
// contact).
struct ConstraintSet {
  std::vector<Obstacle> obstacles;
  ControlBounds bounds;
  double inflation = 0.0;
  double soft_inflation = 0.0;
};

double running_cost(const State& x, const CostConfig& cfg);
double terminal_cost(const State& x, const CostConfig& cfg);

// g(x) = r_eff^2 - (x - cx)^2 - (y - cy)^2 with r_eff = radius + inflation.
// Positive inside the inflated disc, zero on its boundary, negative outside.
double obstacle_constraint(const State& x, const Obstacle& obs, double inflation);

// d g / d state = (-2(x - cx), -2(y - cy), 0).
Eigen::Vector3d obstacle_constraint_gradient(const State& x, const Obstacle& obs,
                                             double inflation);

// Flat penalty if any trajectory state lies inside any inflated obstacle,
// with obstacle centers advanced to the state's time offset (i * dt).
double soft_collision_penalty(const StateTrajectory& traj,
                              const ConstraintSet& constraints,
                              const CostConfig& cfg, double dt);

// Sample cost: sum_t [ l(x_t) + control penalty term ] + phi(x_N), plus the
// soft collision penalty when soft_constraints is set.
double trajectory_cost(const StateTrajectory& traj, const ControlSequence& nominal,
                       const ControlSequence& perturbed, const CostConfig& cfg,
                       const NoiseCovariance& cov, bool soft_constraints,
                       const ConstraintSet& constraints, double dt);

// Largest g over every trajectory state and time-advanced obstacle;
// -inf when there are no obstacles.
double max_constraint_violation(const StateTrajectory& traj,
                                const ConstraintSet& constraints, double dt);

}  // namespace cscmppi
