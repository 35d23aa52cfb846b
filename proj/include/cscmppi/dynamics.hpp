#pragma once

#include <Eigen/Dense>

#include "cscmppi/types.hpp"

namespace cscmppi {

// One-step transition interface. Implementations must be stateless and
// safe to call concurrently.
class Dynamics {
 public:
  virtual ~Dynamics() = default;
  virtual State step(const State& x, const Control& u) const = 0;
  // d(next state)/d(control input), holding the current state fixed.
  virtual Eigen::Matrix<double, 3, 2> control_jacobian(const State& x,
                                                       const Control& u) const = 0;
  virtual double dt() const = 0;
};

// Differential-drive kinematics:
//   x'     = x + v cos(theta) dt
//   y'     = y + v sin(theta) dt
//   theta' = theta + w dt
class DiffDriveModel final : public Dynamics {
 public:
  explicit DiffDriveModel(double dt);

  State step(const State& x, const Control& u) const override;
  Eigen::Matrix<double, 3, 2> control_jacobian(const State& x,
                                               const Control& u) const override;
  double dt() const override { return dt_; }

 private:
  double dt_;
};

// Applies seq step by step from x0; result has length seq.size() + 1 and
// starts with x0 itself.
StateTrajectory rollout(const Dynamics& model, const State& x0,
                        const ControlSequence& seq);

// Circular obstacle with an optional constant drift velocity.
struct Obstacle {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
  double vx = 0.0;
  double vy = 0.0;

  Obstacle(double cx_, double cy_, double radius_, double vx_ = 0.0, double vy_ = 0.0)
      : cx(cx_), cy(cy_), radius(radius_), vx(vx_), vy(vy_) {
    if (!(radius > 0.0)) {
      throw std::invalid_argument("Obstacle: radius must be positive");
    }
  }
};

// Constant-velocity extrapolation used inside predicted rollouts.
Obstacle predict_obstacle(const Obstacle& obs, double t_ahead);

}  // namespace cscmppi
