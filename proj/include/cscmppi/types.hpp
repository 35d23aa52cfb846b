#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace cscmppi {

inline constexpr double kPi = 3.14159265358979323846;

// Maps any finite angle to the half-open interval (-pi, pi].
inline double wrap_angle(double a) {
  if (!std::isfinite(a)) {
    throw std::invalid_argument("wrap_angle: non-finite input");
  }
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) {
    r = kPi;
  }
  return r;
}

// Robot pose. Heading is kept in (-pi, pi]; construct through the
// wrapping constructor instead of mutating theta directly.
struct State {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  State() = default;
  State(double x_, double y_, double theta_) : x(x_), y(y_), theta(wrap_angle(theta_)) {
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw std::invalid_argument("State: non-finite coordinate");
    }
  }
};

// Velocity command: linear (m/s) and angular (rad/s).
struct Control {
  double v = 0.0;
  double w = 0.0;

  Control() = default;
  Control(double v_, double w_) : v(v_), w(w_) {
    if (!std::isfinite(v) || !std::isfinite(w)) {
      throw std::invalid_argument("Control: non-finite component");
    }
  }
};

struct ControlBounds {
  Control lower;
  Control upper;

  ControlBounds(const Control& lo, const Control& hi) : lower(lo), upper(hi) {
    if (lower.v > upper.v || lower.w > upper.w) {
      throw std::invalid_argument("ControlBounds: lower bound exceeds upper bound");
    }
  }

  Control clamp(const Control& c) const {
    return {std::min(std::max(c.v, lower.v), upper.v),
            std::min(std::max(c.w, lower.w), upper.w)};
  }

  bool contains(const Control& c, double tol = 0.0) const {
    return c.v >= lower.v - tol && c.v <= upper.v + tol &&
           c.w >= lower.w - tol && c.w <= upper.w + tol;
  }
};

// U over the horizon (length N) and the matching rollout (length N+1).
using ControlSequence = std::vector<Control>;
using StateTrajectory = std::vector<State>;

// Diagonal control-noise covariance, stored as per-channel standard deviations.
struct NoiseCovariance {
  double sigma_v;
  double sigma_w;

  NoiseCovariance(double sv, double sw) : sigma_v(sv), sigma_w(sw) {
    if (!std::isfinite(sv) || !std::isfinite(sw) || sv <= 0.0 || sw <= 0.0) {
      throw std::invalid_argument("NoiseCovariance: standard deviations must be positive");
    }
  }
};

}  // namespace cscmppi
