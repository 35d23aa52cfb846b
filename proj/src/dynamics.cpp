#include "cscmppi/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace cscmppi {

DiffDriveModel::DiffDriveModel(double dt) : dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("DiffDriveModel: dt must be positive");
  }
}

State DiffDriveModel::step(const State& x, const Control& u) const {
  return {x.x + u.v * std::cos(x.theta) * dt_,
          x.y + u.v * std::sin(x.theta) * dt_,
          wrap_angle(x.theta + u.w * dt_)};
}

Eigen::Matrix<double, 3, 2> DiffDriveModel::control_jacobian(const State& x,
                                                             const Control&) const {
  Eigen::Matrix<double, 3, 2> jac;
  jac << std::cos(x.theta) * dt_, 0.0,
         std::sin(x.theta) * dt_, 0.0,
         0.0, dt_;
  return jac;
}

StateTrajectory rollout(const Dynamics& model, const State& x0,
                        const ControlSequence& seq) {
  StateTrajectory traj;
  traj.reserve(seq.size() + 1);
  traj.push_back(x0);
  for (const Control& u : seq) {
    traj.push_back(model.step(traj.back(), u));
  }
  return traj;
}

Obstacle predict_obstacle(const Obstacle& obs, double t_ahead) {
  if (t_ahead < 0.0) {
    throw std::invalid_argument("predict_obstacle: t_ahead must be non-negative");
  }
  return {obs.cx + obs.vx * t_ahead, obs.cy + obs.vy * t_ahead, obs.radius,
          obs.vx, obs.vy};
}

}  // namespace cscmppi
