#include "cscmppi/projection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cscmppi/parallel.hpp"

namespace cscmppi {

void ProjectionParams::validate() const {
  if (!(alpha.v > 0.0) || !(alpha.w > 0.0) || !(beta_lower.v > 0.0) ||
      !(beta_lower.w > 0.0) || !(beta_upper.v > 0.0) || !(beta_upper.w > 0.0)) {
    throw std::invalid_argument("ProjectionParams: step sizes must be positive");
  }
  if (max_iters < 1) {
    throw std::invalid_argument("ProjectionParams: max_iters must be >= 1");
  }
  if (!(tol_violation > 0.0) || !(tol_stationarity > 0.0)) {
    throw std::invalid_argument("ProjectionParams: tolerances must be positive");
  }
}

Eigen::Vector2d lagrangian_gradient(const State& x_t, const Control& v_t,
                                    const Eigen::Array2d& mu_lower_t,
                                    const Eigen::Array2d& mu_upper_t,
                                    const ConstraintSet& constraints,
                                    const Dynamics& model, double t_next_seconds) {
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  const State x_next = model.step(x_t, v_t);
  bool jac_ready = false;
  Eigen::Matrix<double, 3, 2> jac;
  for (const Obstacle& obs : constraints.obstacles) {
    const Obstacle pred = predict_obstacle(obs, t_next_seconds);
    if (obstacle_constraint(x_next, pred, constraints.inflation) > 0.0) {
      if (!jac_ready) {
        jac = model.control_jacobian(x_t, v_t);
        jac_ready = true;
      }
      grad += jac.transpose() *
              obstacle_constraint_gradient(x_next, pred, constraints.inflation);
    }
  }
  grad[0] += mu_upper_t[0] - mu_lower_t[0];
  grad[1] += mu_upper_t[1] - mu_lower_t[1];
  return grad;
}

std::pair<Eigen::Array2d, Eigen::Array2d> dual_update(
    const Eigen::Array2d& mu_lower_t, const Eigen::Array2d& mu_upper_t,
    const Control& v_t, const ControlBounds& bounds, const StepSizes& beta_lower,
    const StepSizes& beta_upper) {
  Eigen::Array2d lo;
  Eigen::Array2d up;
  lo[0] = std::max(0.0, mu_lower_t[0] + beta_lower.v * (bounds.lower.v - v_t.v));
  lo[1] = std::max(0.0, mu_lower_t[1] + beta_lower.w * (bounds.lower.w - v_t.w));
  up[0] = std::max(0.0, mu_upper_t[0] + beta_upper.v * (v_t.v - bounds.upper.v));
  up[1] = std::max(0.0, mu_upper_t[1] + beta_upper.w * (v_t.w - bounds.upper.w));
  return {lo, up};
}

Control primal_update(const Control& v_t, const Eigen::Vector2d& grad,
                      const StepSizes& alpha) {
  return {v_t.v - alpha.v * grad[0], v_t.w - alpha.w * grad[1]};
}

namespace {

// Obstacle snapshots advanced to each successor-state time, shared by every
// sweep of one projection call. predictions[t] holds the obstacles at time
// (t + 1) * dt.
std::vector<std::vector<Obstacle>> predict_horizon(const ConstraintSet& constraints,
                                                   int horizon, double dt) {
  std::vector<std::vector<Obstacle>> predictions(horizon);
  for (int t = 0; t < horizon; ++t) {
    predictions[t].reserve(constraints.obstacles.size());
    for (const Obstacle& obs : constraints.obstacles) {
      predictions[t].push_back(
          predict_obstacle(obs, static_cast<double>(t + 1) * dt));
    }
  }
  return predictions;
}

Eigen::Vector2d gradient_with_predictions(const State& x_t, const Control& v_t,
                                          const Eigen::Array2d& mu_lower_t,
                                          const Eigen::Array2d& mu_upper_t,
                                          const std::vector<Obstacle>& predicted,
                                          double inflation, const Dynamics& model) {
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  const State x_next = model.step(x_t, v_t);
  bool jac_ready = false;
  Eigen::Matrix<double, 3, 2> jac;
  for (const Obstacle& obs : predicted) {
    if (obstacle_constraint(x_next, obs, inflation) > 0.0) {
      if (!jac_ready) {
        jac = model.control_jacobian(x_t, v_t);
        jac_ready = true;
      }
      grad += jac.transpose() * obstacle_constraint_gradient(x_next, obs, inflation);
    }
  }
  grad[0] += mu_upper_t[0] - mu_lower_t[0];
  grad[1] += mu_upper_t[1] - mu_lower_t[1];
  return grad;
}

bool kkt_satisfied(const ControlSequence& seq, const StateTrajectory& traj,
                   const DualState& duals,
                   const std::vector<std::vector<Obstacle>>& predictions,
                   const ConstraintSet& constraints, const Dynamics& model,
                   const ProjectionParams& params) {
  const double tol = params.tol_violation;
  const ControlBounds& b = constraints.bounds;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const Control& v = seq[t];
    // Primal feasibility: control bounds.
    if (!b.contains(v, tol)) {
      return false;
    }
    // Primal feasibility: obstacle constraints at the successor state.
    for (const Obstacle& obs : predictions[t]) {
      if (obstacle_constraint(traj[t + 1], obs, constraints.inflation) > tol) {
        return false;
      }
    }
    // Stationarity of the per-step Lagrangian.
    const Eigen::Array2d mu_lo = duals.mu_lower.row(t).transpose();
    const Eigen::Array2d mu_up = duals.mu_upper.row(t).transpose();
    if (gradient_with_predictions(traj[t], v, mu_lo, mu_up, predictions[t],
                                  constraints.inflation, model)
            .norm() > params.tol_stationarity) {
      return false;
    }
    // Complementary slackness for the bound multipliers.
    if (std::abs(mu_lo[0] * (b.lower.v - v.v)) > tol ||
        std::abs(mu_lo[1] * (b.lower.w - v.w)) > tol ||
        std::abs(mu_up[0] * (v.v - b.upper.v)) > tol ||
        std::abs(mu_up[1] * (v.w - b.upper.w)) > tol) {
      return false;
    }
  }
  return true;
}

double bound_excess(const ControlSequence& seq, const ControlBounds& b) {
  double worst = 0.0;
  for (const Control& v : seq) {
    worst = std::max({worst, b.lower.v - v.v, v.v - b.upper.v, b.lower.w - v.w,
                      v.w - b.upper.w});
  }
  return worst;
}

}  // namespace

namespace {

// Scalar-math sweep specialized for the differential drive. The generic
// interface costs two virtual calls plus Eigen temporaries per (t, sweep);
// this path shares one cos/sin per step and runs the post-update KKT checks
// inline. Must stay semantically identical to the generic ops (covered by an
// equivalence test).
struct DiffDriveSweeper {
  const ConstraintSet& constraints;
  const std::vector<std::vector<Obstacle>>& predictions;
  const ProjectionParams& params;
  double dt;

  // Executes one full sweep; returns true when every step satisfied the KKT
  // conditions at its post-update values, i.e. the state the next sweep
  // would re-check.
  bool sweep(ControlSequence& seq, StateTrajectory& traj, DualState& duals) const {
    const ControlBounds& b = constraints.bounds;
    const double tol = params.tol_violation;
    const double tol_st_sq = params.tol_stationarity * params.tol_stationarity;
    bool all_ok = true;
    const int n = static_cast<int>(seq.size());
    for (int t = 0; t < n; ++t) {
      const State& x = traj[t];
      const double c = std::cos(x.theta);
      const double s = std::sin(x.theta);
      double v = seq[t].v;
      double w = seq[t].w;

      // Eq 13 dual ascent, clamped at zero.
      double mu_lo_v = std::max(0.0, duals.mu_lower(t, 0) + params.beta_lower.v * (b.lower.v - v));
      double mu_lo_w = std::max(0.0, duals.mu_lower(t, 1) + params.beta_lower.w * (b.lower.w - w));
      double mu_up_v = std::max(0.0, duals.mu_upper(t, 0) + params.beta_upper.v * (v - b.upper.v));
      double mu_up_w = std::max(0.0, duals.mu_upper(t, 1) + params.beta_upper.w * (w - b.upper.w));
      duals.mu_lower(t, 0) = mu_lo_v;
      duals.mu_lower(t, 1) = mu_lo_w;
      duals.mu_upper(t, 0) = mu_up_v;
      duals.mu_upper(t, 1) = mu_up_w;

      // Obstacle chain term: d g / d v = dt * (c, s) . grad_xy g; the
      // heading column never receives an obstacle component.
      auto obstacle_grad_v = [&](double px, double py) {
        double gv = 0.0;
        for (const Obstacle& obs : predictions[t]) {
          const double r = obs.radius + constraints.inflation;
          const double dx = px - obs.cx;
          const double dy = py - obs.cy;
          if (r * r - dx * dx - dy * dy > 0.0) {
            gv += dt * (c * -2.0 * dx + s * -2.0 * dy);
          }
        }
        return gv;
      };

      double nx = x.x + v * c * dt;
      double ny = x.y + v * s * dt;
      const double grad_v = obstacle_grad_v(nx, ny) + mu_up_v - mu_lo_v;
      const double grad_w = mu_up_w - mu_lo_w;
      v -= params.alpha.v * grad_v;
      w -= params.alpha.w * grad_w;
      seq[t] = Control{v, w};
      nx = x.x + v * c * dt;
      ny = x.y + v * s * dt;
      traj[t + 1] = State{nx, ny, x.theta + w * dt};

      if (!all_ok) {
        continue;
      }
      // Post-update KKT conditions for this step.
      if (v < b.lower.v - tol || v > b.upper.v + tol || w < b.lower.w - tol ||
          w > b.upper.w + tol) {
        all_ok = false;
        continue;
      }
      bool feasible = true;
      for (const Obstacle& obs : predictions[t]) {
        const double r = obs.radius + constraints.inflation;
        const double dx = nx - obs.cx;
        const double dy = ny - obs.cy;
        if (r * r - dx * dx - dy * dy > tol) {
          feasible = false;
          break;
        }
      }
      if (!feasible) {
        all_ok = false;
        continue;
      }
      const double g2v = obstacle_grad_v(nx, ny) + mu_up_v - mu_lo_v;
      const double g2w = mu_up_w - mu_lo_w;
      if (g2v * g2v + g2w * g2w > tol_st_sq) {
        all_ok = false;
        continue;
      }
      if (std::abs(mu_lo_v * (b.lower.v - v)) > tol ||
          std::abs(mu_lo_w * (b.lower.w - w)) > tol ||
          std::abs(mu_up_v * (v - b.upper.v)) > tol ||
          std::abs(mu_up_w * (w - b.upper.w)) > tol) {
        all_ok = false;
      }
    }
    return all_ok;
  }
};

void generic_sweep(ControlSequence& seq, StateTrajectory& traj, DualState& duals,
                   const std::vector<std::vector<Obstacle>>& predictions,
                   const ConstraintSet& constraints, const Dynamics& model,
                   const ProjectionParams& params) {
  const int n = static_cast<int>(seq.size());
  for (int t = 0; t < n; ++t) {
    auto [mu_lo, mu_up] =
        dual_update(duals.mu_lower.row(t).transpose(),
                    duals.mu_upper.row(t).transpose(), seq[t], constraints.bounds,
                    params.beta_lower, params.beta_upper);
    duals.mu_lower.row(t) = mu_lo.transpose();
    duals.mu_upper.row(t) = mu_up.transpose();
    const Eigen::Vector2d grad = gradient_with_predictions(
        traj[t], seq[t], mu_lo, mu_up, predictions[t], constraints.inflation, model);
    seq[t] = primal_update(seq[t], grad, params.alpha);
    traj[t + 1] = model.step(traj[t], seq[t]);
  }
}

}  // namespace

ProjectionResult project_sample(const State& x0, const ControlSequence& v_seq,
                                const ConstraintSet& constraints,
                                const Dynamics& model,
                                const ProjectionParams& params) {
  params.validate();
  ProjectionResult res{v_seq, {}};
  res.report.mode = params.mode;

  if (params.mode == ProjectionMode::kClampOnly) {
    for (Control& v : res.sequence) {
      v = constraints.bounds.clamp(v);
    }
    const StateTrajectory traj = rollout(model, x0, res.sequence);
    res.report.max_violation = max_constraint_violation(traj, constraints, model.dt());
    res.report.max_bound_violation = 0.0;
    res.report.converged = true;
    return res;
  }

  const int n = static_cast<int>(v_seq.size());
  StateTrajectory traj = rollout(model, x0, res.sequence);
  DualState duals(n);
  const double dt = model.dt();
  const auto predictions = predict_horizon(constraints, n, dt);

  auto finalize = [&](bool converged, int sweeps) {
    res.report.converged = converged;
    res.report.sweeps = sweeps;
    res.report.max_violation = max_constraint_violation(traj, constraints, dt);
    res.report.max_bound_violation = bound_excess(res.sequence, constraints.bounds);
  };

  // Feasible inputs exit before any sweep runs.
  if (kkt_satisfied(res.sequence, traj, duals, predictions, constraints, model,
                    params)) {
    finalize(true, 0);
    return res;
  }

  const auto* diff_drive = dynamic_cast<const DiffDriveModel*>(&model);
  const DiffDriveSweeper sweeper{constraints, predictions, params, dt};
  for (int sweep = 1; sweep <= params.max_iters; ++sweep) {
    bool ok;
    if (diff_drive != nullptr) {
      ok = sweeper.sweep(res.sequence, traj, duals);
    } else {
      generic_sweep(res.sequence, traj, duals, predictions, constraints, model,
                    params);
      ok = kkt_satisfied(res.sequence, traj, duals, predictions, constraints, model,
                         params);
    }
    if (ok) {
      finalize(true, sweep);
      return res;
    }
  }
  finalize(false, params.max_iters);
  return res;
}

std::vector<ProjectionReport> project_batch(SampleBatch& batch,
                                            const ControlSequence& nominal,
                                            const State& x0,
                                            const ConstraintSet& constraints,
                                            const Dynamics& model,
                                            const ProjectionParams& params) {
  const std::size_t k_count = batch.perturbed.size();
  std::vector<ProjectionReport> reports(k_count);
  util::parallel_for(k_count, [&](std::size_t k) {
    ProjectionResult res =
        project_sample(x0, batch.perturbed[k], constraints, model, params);
    batch.perturbed[k] = std::move(res.sequence);
    for (std::size_t t = 0; t < nominal.size(); ++t) {
      batch.perturbations[k][t] = {batch.perturbed[k][t].v - nominal[t].v,
                                   batch.perturbed[k][t].w - nominal[t].w};
    }
    batch.rollouts[k] = rollout(model, x0, batch.perturbed[k]);
    reports[k] = res.report;
  });
  return reports;
}

}  // namespace cscmppi
