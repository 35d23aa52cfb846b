#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cscmppi/costs.hpp"
#include "cscmppi/dynamics.hpp"
#include "cscmppi/mppi.hpp"
#include "cscmppi/types.hpp"

namespace cscmppi {

enum class ProjectionMode {
  kPrimalDual,  // iterative primal-dual gradient sweeps with a KKT stop rule
  kClampOnly,   // element-wise clamp to control bounds; obstacles untouched
};

// Per-channel (v, w) step sizes for the primal and dual updates.
struct StepSizes {
  double v;
  double w;
};

struct ProjectionParams {
  // alpha.v sets the braking rate against obstacles (per-sweep velocity kick
  // is alpha.v * |J^T grad g| with |J^T grad g| ~ 2 r dt); the default clears
  // a full-speed stop within the sweep budget.
  StepSizes alpha{0.5, 0.2};
  StepSizes beta_lower{1.0, 1.0};
  StepSizes beta_upper{1.0, 1.0};
  int max_iters = 50;           // sweeps over the horizon
  double tol_violation = 1e-3;  // bound on g; also the bound/slackness residual tolerance
  // The constant-step primal-dual iteration orbits rather than settles where
  // an obstacle pushes against a control bound, so the stationarity
  // tolerance sits just above the single-obstacle gradient scale.
  double tol_stationarity = 0.05;
  ProjectionMode mode = ProjectionMode::kPrimalDual;

  void validate() const;
};

// Multipliers for the control-bound constraints, one (v, w) row per step.
// Entries never go negative: every update is projected onto the
// non-negative orthant.
struct DualState {
  Eigen::ArrayX2d mu_lower;
  Eigen::ArrayX2d mu_upper;

  explicit DualState(int horizon)
      : mu_lower(Eigen::ArrayX2d::Zero(horizon, 2)),
        mu_upper(Eigen::ArrayX2d::Zero(horizon, 2)) {}
};

struct ProjectionReport {
  int sweeps = 0;  // primal-dual sweeps executed (0 if already feasible)
  double max_violation = 0.0;        // largest obstacle g after projection
  double max_bound_violation = 0.0;  // largest bound excess after projection
  bool converged = false;
  ProjectionMode mode = ProjectionMode::kPrimalDual;
};

// Gradient of the per-step Lagrangian with respect to the control input:
// the obstacle-constraint chain through the one-step dynamics (active only
// where g > 0 at the successor state) minus/plus the bound multipliers.
// Obstacle centers are advanced to t_next_seconds before evaluation.
Eigen::Vector2d lagrangian_gradient(const State& x_t, const Control& v_t,
                                    const Eigen::Array2d& mu_lower_t,
                                    const Eigen::Array2d& mu_upper_t,
                                    const ConstraintSet& constraints,
                                    const Dynamics& model, double t_next_seconds);

// Projected gradient ascent on the bound multipliers; clamped at zero.
std::pair<Eigen::Array2d, Eigen::Array2d> dual_update(
    const Eigen::Array2d& mu_lower_t, const Eigen::Array2d& mu_upper_t,
    const Control& v_t, const ControlBounds& bounds, const StepSizes& beta_lower,
    const StepSizes& beta_upper);

// Gradient-descent step on the control input.
Control primal_update(const Control& v_t, const Eigen::Vector2d& grad,
                      const StepSizes& alpha);

struct ProjectionResult {
  ControlSequence sequence;
  ProjectionReport report;
};

// Shifts one sampled sequence toward the feasible set. Sweeps the horizon
// front to back, re-rolling the successor state after each primal step, and
// stops once the KKT conditions hold within tolerance or max_iters sweeps
// elapse. Non-convergence is not an error: the sequence is returned as-is
// with converged=false.
ProjectionResult project_sample(const State& x0, const ControlSequence& v_seq,
                                const ConstraintSet& constraints,
                                const Dynamics& model,
                                const ProjectionParams& params);

// Projects every sample independently, then restores the batch invariant
// (perturbations = perturbed - nominal) and re-rolls the trajectories.
std::vector<ProjectionReport> project_batch(SampleBatch& batch,
                                            const ControlSequence& nominal,
                                            const State& x0,
                                            const ConstraintSet& constraints,
                                            const Dynamics& model,
                                            const ProjectionParams& params);

}  // namespace cscmppi
