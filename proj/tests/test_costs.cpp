#include <cmath>
#include <random>

#include <doctest.h>

#include "cscmppi/costs.hpp"
#include "cscmppi/dynamics.hpp"

using namespace cscmppi;

namespace {

CostConfig paper_costs(const State& goal, double lambda = 0.7) {
  return CostConfig{QuadraticWeights{{10, 10, 0}, {50, 50, 50}}, goal, lambda};
}

const ControlBounds kBounds{{0.0, -3.0}, {0.5, 3.0}};

}  // namespace

TEST_CASE("running cost is the weighted squared goal error") {
  const CostConfig cfg = paper_costs({0, 0, 0});
  CHECK(running_cost({0, 0, 0}, cfg) == 0.0);

  const CostConfig cfg_goal1 = paper_costs({1, 0, 0});
  CHECK(running_cost({0, 0, 0}, cfg_goal1) == doctest::Approx(10.0));
  // Heading error carries zero weight in Q.
  CHECK(running_cost({0, 1, kPi}, cfg) == doctest::Approx(10.0));
}

TEST_CASE("terminal cost uses H and wrapped heading error") {
  const CostConfig cfg = paper_costs({0, 0, 0});
  CHECK(terminal_cost({0, 0, 0}, cfg) == 0.0);
  CHECK(terminal_cost({0, 0, kPi / 2}, cfg) ==
        doctest::Approx(50.0 * (kPi / 2) * (kPi / 2)));
  CHECK(terminal_cost({1, 1, 0}, cfg) == doctest::Approx(100.0));
  // Wrapping keeps the heading error continuous across +-pi.
  const double near_pi = terminal_cost({0, 0, kPi - 0.01}, paper_costs({0, 0, -kPi + 0.01}));
  CHECK(near_pi == doctest::Approx(50.0 * 0.02 * 0.02).epsilon(1e-9));
}

TEST_CASE("state costs are non-negative") {
  const CostConfig cfg = paper_costs({0.3, -0.7, 1.1});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 500; ++i) {
    const State x{u(rng), u(rng), wrap_angle(u(rng))};
    CHECK(running_cost(x, cfg) >= 0.0);
    CHECK(terminal_cost(x, cfg) >= 0.0);
  }
}

TEST_CASE("obstacle constraint sign convention") {
  const Obstacle obs{0, 0, 0.4};
  const double inflation = 0.1;  // r_eff = 0.5
  CHECK(obstacle_constraint({0, 0, 0}, obs, inflation) == doctest::Approx(0.25));
  CHECK(obstacle_constraint({1, 0, 0}, obs, inflation) == doctest::Approx(-0.75));
  // Sign flips exactly on the inflated boundary.
  for (int deg = 0; deg < 360; ++deg) {
    const double a = deg * kPi / 180.0;
    const State on_boundary{0.5 * std::cos(a), 0.5 * std::sin(a), 0};
    CHECK(std::abs(obstacle_constraint(on_boundary, obs, inflation)) < 1e-12);
    const State inside{0.499 * std::cos(a), 0.499 * std::sin(a), 0};
    const State outside{0.501 * std::cos(a), 0.501 * std::sin(a), 0};
    CHECK(obstacle_constraint(inside, obs, inflation) > 0.0);
    CHECK(obstacle_constraint(outside, obs, inflation) < 0.0);
  }
}

TEST_CASE("obstacle constraint gradient") {
  const Obstacle obs{0, 0, 0.5};
  SUBCASE("stationary at the center") {
    const Eigen::Vector3d g = obstacle_constraint_gradient({0, 0, 0}, obs, 0.0);
    CHECK(g.norm() == 0.0);
  }
  SUBCASE("analytic value") {
    const Eigen::Vector3d g = obstacle_constraint_gradient({1, 0, 0}, obs, 0.0);
    CHECK(g[0] == doctest::Approx(-2.0));
    CHECK(g[1] == 0.0);
    CHECK(g[2] == 0.0);
  }
  SUBCASE("matches finite differences") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const double h = 1e-6;
    for (int i = 0; i < 200; ++i) {
      const State x{u(rng), u(rng), 0.0};
      const Eigen::Vector3d g = obstacle_constraint_gradient(x, obs, 0.2);
      const double gx = (obstacle_constraint({x.x + h, x.y, 0}, obs, 0.2) -
                         obstacle_constraint({x.x - h, x.y, 0}, obs, 0.2)) /
                        (2 * h);
      const double gy = (obstacle_constraint({x.x, x.y + h, 0}, obs, 0.2) -
                         obstacle_constraint({x.x, x.y - h, 0}, obs, 0.2)) /
                        (2 * h);
      CHECK(std::abs(g[0] - gx) / std::max(std::abs(gx), 1e-6) < 1e-6);
      CHECK(std::abs(g[1] - gy) / std::max(std::abs(gy), 1e-6) < 1e-6);
    }
  }
}

TEST_CASE("soft collision penalty") {
  const CostConfig cfg = paper_costs({1, 0, 0});
  const DiffDriveModel model(0.03);
  SUBCASE("clear trajectory costs nothing") {
    const ConstraintSet cs{{Obstacle{0, 5, 0.5}}, kBounds, 0.1, 0.1};
    const auto traj = rollout(model, {0, 0, 0}, ControlSequence(30, {0.5, 0}));
    CHECK(soft_collision_penalty(traj, cs, cfg, model.dt()) == 0.0);
  }
  SUBCASE("one violating state costs the full penalty") {
    const ConstraintSet cs{{Obstacle{0.2, 0, 0.5}}, kBounds, 0.0, 0.0};
    const auto traj = rollout(model, {0, 0, 0}, ControlSequence(30, {0.5, 0}));
    CHECK(soft_collision_penalty(traj, cs, cfg, model.dt()) == doctest::Approx(1e4));
  }
  SUBCASE("no obstacles, no penalty") {
    const ConstraintSet cs{{}, kBounds, 0.0};
    const auto traj = rollout(model, {0, 0, 0}, ControlSequence(5, {0.5, 0}));
    CHECK(soft_collision_penalty(traj, cs, cfg, model.dt()) == 0.0);
  }
  SUBCASE("moving obstacle is evaluated at the predicted time") {
    // Obstacle reaches the robot's neighborhood only after ~0.5 s; a short
    // trajectory that idles at the origin is hit once the prediction horizon
    // covers it.
    const ConstraintSet cs{{Obstacle{-1.0, 0, 0.3, 2.0, 0.0}}, kBounds, 0.0, 0.0};
    const auto idle = rollout(model, {0, 0, 0}, ControlSequence(30, {0, 0}));
    CHECK(soft_collision_penalty(idle, cs, cfg, model.dt()) == doctest::Approx(1e4));
    const auto shorter = rollout(model, {0, 0, 0}, ControlSequence(5, {0, 0}));
    CHECK(soft_collision_penalty(shorter, cs, cfg, model.dt()) == 0.0);
  }
}

TEST_CASE("trajectory cost accumulates the per-step terms") {
  const DiffDriveModel model(0.03);
  const NoiseCovariance cov{0.1, 1.0};
  const ConstraintSet none{{}, kBounds, 0.0};

  SUBCASE("at the goal with zero controls the cost vanishes") {
    const CostConfig cfg = paper_costs({0, 0, 0});
    const ControlSequence zeros(10, Control{});
    const auto traj = rollout(model, {0, 0, 0}, zeros);
    CHECK(trajectory_cost(traj, zeros, zeros, cfg, cov, false, none, model.dt()) == 0.0);
  }

  SUBCASE("single-step control term is lambda * u^T Sigma^-1 v") {
    // l vanishes with Q = 0; phi(x_1) remains. The raw inner product is
    // 0.1 * (1/0.01) * 0.2 = 2.0, scaled by the temperature when folded
    // into the sample cost.
    CostConfig cfg{QuadraticWeights{{0, 0, 0}, {50, 50, 50}}, State{0, 0, 0}, 0.7};
    const ControlSequence nominal{{0.1, 0.0}};
    const ControlSequence perturbed{{0.2, 0.0}};
    const auto traj = rollout(model, {0, 0, 0}, perturbed);
    const double phi = terminal_cost(traj.back(), cfg);
    const double cost =
        trajectory_cost(traj, nominal, perturbed, cfg, cov, false, none, model.dt());
    CHECK(cost - phi == doctest::Approx(cfg.lambda * 2.0).epsilon(1e-12));
  }

  SUBCASE("soft mode adds exactly the collision penalty") {
    const CostConfig cfg = paper_costs({1, 0, 0});
    const ConstraintSet blocked{{Obstacle{0.2, 0, 0.5}}, kBounds, 0.0, 0.0};
    const ControlSequence seq(30, {0.5, 0.0});
    const auto traj = rollout(model, {0, 0, 0}, seq);
    const double hard =
        trajectory_cost(traj, seq, seq, cfg, cov, false, blocked, model.dt());
    const double soft =
        trajectory_cost(traj, seq, seq, cfg, cov, true, blocked, model.dt());
    CHECK(soft - hard == doctest::Approx(1e4));
  }

  SUBCASE("hard mode ignores the obstacle set") {
    const CostConfig cfg = paper_costs({1, 0, 0});
    const ConstraintSet blocked{{Obstacle{0.2, 0, 0.5}}, kBounds, 0.0, 0.0};
    const ControlSequence seq(30, {0.5, 0.0});
    const auto traj = rollout(model, {0, 0, 0}, seq);
    CHECK(trajectory_cost(traj, seq, seq, cfg, cov, false, blocked, model.dt()) ==
          trajectory_cost(traj, seq, seq, cfg, cov, false, none, model.dt()));
  }

  SUBCASE("cost is additive over time steps") {
    const CostConfig cfg = paper_costs({1, 0.5, 0});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    ControlSequence nominal;
    ControlSequence perturbed;
    for (int t = 0; t < 12; ++t) {
      nominal.push_back({u(rng), u(rng)});
      perturbed.push_back({u(rng), u(rng)});
    }
    const auto traj = rollout(model, {0, 0, 0.2}, perturbed);
    double manual = 0.0;
    for (int t = 0; t < 12; ++t) {
      manual += running_cost(traj[t], cfg);
      manual += cfg.lambda *
                (nominal[t].v * 100.0 * perturbed[t].v + nominal[t].w * perturbed[t].w);
    }
    manual += terminal_cost(traj.back(), cfg);
    CHECK(trajectory_cost(traj, nominal, perturbed, cfg, cov, false, none,
                          model.dt()) == doctest::Approx(manual).epsilon(1e-12));
  }

  SUBCASE("optional quadratic control penalty mode") {
    CostConfig cfg = paper_costs({0, 0, 0});
    cfg.penalty_mode = ControlPenaltyMode::kQuadraticR;
    cfg.r_diag = {2.0, 4.0};
    const ControlSequence nominal{{0.3, 1.0}};
    const ControlSequence perturbed{{0.0, 0.0}};
    const auto traj = rollout(model, {0, 0, 0}, perturbed);
    const double phi = terminal_cost(traj.back(), cfg);
    const double cost =
        trajectory_cost(traj, nominal, perturbed, cfg, cov, false, none, model.dt());
    CHECK(cost - phi ==
          doctest::Approx(0.5 * (2.0 * 0.09 + 4.0 * 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("weight and config validation") {
  CHECK_THROWS_AS(QuadraticWeights({-1, 0, 0}, {0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(CostConfig(QuadraticWeights{{1, 1, 1}, {1, 1, 1}}, State{}, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      CostConfig(QuadraticWeights{{1, 1, 1}, {1, 1, 1}}, State{}, 1.0, -1.0),
      std::invalid_argument);
}
