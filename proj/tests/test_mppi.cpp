#include <cmath>
#include <random>

#include <doctest.h>

#include "cscmppi/mppi.hpp"
#include "cscmppi/parallel.hpp"
#include "cscmppi/projection.hpp"

using namespace cscmppi;

namespace {

MppiParams small_params(int k = 16, int n = 10) {
  return MppiParams(k, n, 0.03, 0.7, NoiseCovariance{0.1, 1.0},
                    ControlBounds{{0.0, -3.0}, {0.5, 3.0}});
}

CostConfig goal_costs(const State& goal) {
  return CostConfig{QuadraticWeights{{10, 10, 0}, {50, 50, 50}}, goal, 0.7};
}

const ConstraintSet kNoObstacles{{}, ControlBounds{{0.0, -3.0}, {0.5, 3.0}}, 0.0};

}  // namespace

TEST_CASE("softmax weights") {
  SUBCASE("single sample gets weight one") {
    const auto w = softmax_weights({42.0}, 0.5);
    REQUIRE(w.size() == 1);
    CHECK(w[0] == 1.0);
  }
  SUBCASE("equal costs split evenly") {
    const auto w = softmax_weights({3.0, 3.0, 3.0, 3.0}, 0.01);
    for (double wi : w) {
      CHECK(wi == doctest::Approx(0.25));
    }
  }
  SUBCASE("closed form for costs {0, lambda}") {
    const double lambda = 0.7;
    const auto w = softmax_weights({0.0, lambda}, lambda);
    const double e1 = std::exp(-1.0);
    CHECK(w[0] == doctest::Approx(1.0 / (1.0 + e1)).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(e1 / (1.0 + e1)).epsilon(1e-12));
    CHECK(w[0] == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(w[1] == doctest::Approx(0.2689).epsilon(1e-4));
  }
  SUBCASE("invariant to a constant cost shift") {
    const std::vector<double> base{1.0, 5.0, 2.5, 9.0};
    std::vector<double> shifted;
    for (double c : base) {
      shifted.push_back(c + 1234.5);
    }
    const auto w0 = softmax_weights(base, 0.3);
    const auto w1 = softmax_weights(shifted, 0.3);
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(w0[i] == doctest::Approx(w1[i]).epsilon(1e-12));
    }
  }
  SUBCASE("rejects non-finite costs") {
    CHECK_THROWS_AS(softmax_weights({1.0, std::nan("")}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(
        softmax_weights({1.0, std::numeric_limits<double>::infinity()}, 0.5),
        std::invalid_argument);
    CHECK_THROWS_AS(softmax_weights({}, 0.5), std::invalid_argument);
  }
  SUBCASE("sums to one under extreme spreads; argmax tracks argmin") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 300; ++trial) {
      std::uniform_int_distribution<int> ksize(1, 1000);
      std::uniform_real_distribution<double> spread(0.0, 1e6);
      std::uniform_real_distribution<double> lam(1e-3, 10.0);
      const int k = ksize(rng);
      std::vector<double> costs(k);
      for (double& c : costs) {
        c = spread(rng);
      }
      const auto w = softmax_weights(costs, lam(rng));
      double sum = 0.0;
      std::size_t argmax = 0;
      std::size_t argmin = 0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(w[i] >= 0.0);
        sum += w[i];
        if (w[i] > w[argmax]) {
          argmax = i;
        }
        if (costs[i] < costs[argmin]) {
          argmin = i;
        }
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      CHECK(argmax == argmin);
    }
  }
}

TEST_CASE("weighted update") {
  const ControlSequence nominal{{0.1, 0.2}, {0.3, -0.4}};
  SUBCASE("zero perturbations return the nominal") {
    const std::vector<ControlSequence> deltas{{{0, 0}, {0, 0}}, {{0, 0}, {0, 0}}};
    const auto out = weighted_update(nominal, deltas, {0.5, 0.5});
    CHECK(out[0].v == nominal[0].v);
    CHECK(out[1].w == nominal[1].w);
  }
  SUBCASE("a unit-weight sample is added verbatim") {
    const std::vector<ControlSequence> deltas{{{0.05, -0.1}, {0.02, 0.3}}};
    const auto out = weighted_update(nominal, deltas, {1.0});
    CHECK(out[0].v == doctest::Approx(0.15));
    CHECK(out[1].w == doctest::Approx(-0.1));
  }
  SUBCASE("opposite perturbations cancel") {
    const std::vector<ControlSequence> deltas{{{0.05, -0.1}, {0.02, 0.3}},
                                              {{-0.05, 0.1}, {-0.02, -0.3}}};
    const auto out = weighted_update(nominal, deltas, {0.5, 0.5});
    CHECK(out[0].v == doctest::Approx(nominal[0].v));
    CHECK(out[1].w == doctest::Approx(nominal[1].w));
  }
  SUBCASE("linearity in the perturbations") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<ControlSequence> deltas(3, ControlSequence(2));
    std::vector<ControlSequence> scaled(3, ControlSequence(2));
    const double c = 2.5;
    for (int i = 0; i < 3; ++i) {
      for (int t = 0; t < 2; ++t) {
        deltas[i][t] = {u(rng), u(rng)};
        scaled[i][t] = {c * deltas[i][t].v, c * deltas[i][t].w};
      }
    }
    const std::vector<double> w{0.2, 0.5, 0.3};
    const auto a = weighted_update(nominal, deltas, w);
    const auto b = weighted_update(nominal, scaled, w);
    for (int t = 0; t < 2; ++t) {
      CHECK(b[t].v - nominal[t].v == doctest::Approx(c * (a[t].v - nominal[t].v)));
      CHECK(b[t].w - nominal[t].w == doctest::Approx(c * (a[t].w - nominal[t].w)));
    }
  }
}

TEST_CASE("shift_sequence") {
  SUBCASE("drops the head and repeats the tail") {
    const ControlSequence seq{{1, 1}, {2, 2}, {3, 3}};
    const auto out = shift_sequence(seq);
    REQUIRE(out.size() == 3);
    CHECK(out[0].v == 2);
    CHECK(out[1].v == 3);
    CHECK(out[2].v == 3);
  }
  SUBCASE("constant sequences are fixed points") {
    const ControlSequence seq(5, {0.4, -1.0});
    const auto out = shift_sequence(seq);
    for (const Control& c : out) {
      CHECK(c.v == 0.4);
      CHECK(c.w == -1.0);
    }
  }
  SUBCASE("single-element sequence") {
    const ControlSequence seq{{0.2, 0.1}};
    const auto out = shift_sequence(seq);
    REQUIRE(out.size() == 1);
    CHECK(out[0].v == 0.2);
  }
}

TEST_CASE("generate_batch shapes, determinism, vanishing noise") {
  const DiffDriveModel model(0.03);
  SUBCASE("paper-scale shapes") {
    const auto params = MppiParams(300, 30, 0.03, 0.7, NoiseCovariance{0.1, 1.0},
                                   ControlBounds{{0.0, -3.0}, {0.5, 3.0}});
    const ControlSequence nominal(30, Control{});
    const auto batch = generate_batch(nominal, params, model, {0, 0, 0}, 1);
    CHECK(batch.perturbations.size() == 300);
    CHECK(batch.perturbed.size() == 300);
    CHECK(batch.rollouts.size() == 300);
    CHECK(batch.costs.size() == 300);
    CHECK(batch.perturbed[0].size() == 30);
    CHECK(batch.rollouts[0].size() == 31);
  }
  SUBCASE("same seed, same batch, any worker count") {
    const auto params = small_params(64, 12);
    const ControlSequence nominal(12, {0.2, 0.0});
    util::set_max_threads(1);
    const auto a = generate_batch(nominal, params, model, {0, 0, 0}, 99);
    util::set_max_threads(4);
    const auto b = generate_batch(nominal, params, model, {0, 0, 0}, 99);
    util::set_max_threads(0);
    for (int k = 0; k < 64; ++k) {
      for (int t = 0; t < 12; ++t) {
        CHECK(a.perturbed[k][t].v == b.perturbed[k][t].v);
        CHECK(a.perturbed[k][t].w == b.perturbed[k][t].w);
      }
      CHECK(a.rollouts[k].back().x == b.rollouts[k].back().x);
    }
  }
  SUBCASE("tiny covariance collapses onto the nominal") {
    auto params = MppiParams(8, 10, 0.03, 0.7, NoiseCovariance{1e-9, 1e-9},
                             ControlBounds{{-1.0, -3.0}, {1.0, 3.0}});
    const ControlSequence nominal(10, {0.3, 0.5});
    const auto batch = generate_batch(nominal, params, model, {0, 0, 0}, 5);
    const auto ref = rollout(model, {0, 0, 0}, nominal);
    for (int k = 0; k < 8; ++k) {
      for (int t = 0; t < 10; ++t) {
        CHECK(batch.perturbed[k][t].v == doctest::Approx(0.3).epsilon(1e-6));
      }
      CHECK(batch.rollouts[k].back().x == doctest::Approx(ref.back().x).epsilon(1e-9));
    }
  }
  SUBCASE("nominal length must match the horizon") {
    CHECK_THROWS_AS(
        generate_batch(ControlSequence(3), small_params(4, 10), model, {0, 0, 0}, 1),
        std::invalid_argument);
  }
}

TEST_CASE("standard MPPI step") {
  const DiffDriveModel model(0.03);
  SUBCASE("already at the goal with tiny noise keeps controls near zero") {
    auto params = MppiParams(32, 10, 0.03, 0.7, NoiseCovariance{1e-6, 1e-6},
                             ControlBounds{{-0.5, -3.0}, {0.5, 3.0}});
    const CostConfig cfg = goal_costs({0, 0, 0});
    const ControlSequence nominal(10, Control{});
    const auto res = standard_mppi_step({0, 0, 0}, nominal, params, model, cfg,
                                        kNoObstacles, 3);
    CHECK(std::abs(res.sequence[0].v) < 1e-5);
    CHECK(std::abs(res.sequence[0].w) < 1e-5);
    CHECK(res.diagnostics.effective_sample_size > 1.0);
  }
  SUBCASE("deterministic for a fixed seed") {
    const auto params = small_params();
    const CostConfig cfg = goal_costs({1, 0, 0});
    const ControlSequence nominal(10, Control{});
    const auto a =
        standard_mppi_step({0, 0, 0}, nominal, params, model, cfg, kNoObstacles, 11);
    const auto b =
        standard_mppi_step({0, 0, 0}, nominal, params, model, cfg, kNoObstacles, 11);
    for (int t = 0; t < 10; ++t) {
      CHECK(a.sequence[t].v == b.sequence[t].v);
      CHECK(a.sequence[t].w == b.sequence[t].w);
    }
  }
  SUBCASE("K=1 returns nominal plus that sample's perturbation") {
    const auto params = small_params(1, 6);
    const CostConfig cfg = goal_costs({1, 0, 0});
    const ControlSequence nominal(6, {0.1, 0.0});
    const auto batch = generate_batch(nominal, params, model, {0, 0, 0}, 21);
    const auto res =
        standard_mppi_step({0, 0, 0}, nominal, params, model, cfg, kNoObstacles, 21);
    for (int t = 0; t < 6; ++t) {
      CHECK(res.sequence[t].v ==
            doctest::Approx(nominal[t].v + batch.perturbations[0][t].v).epsilon(1e-15));
      CHECK(res.sequence[t].w ==
            doctest::Approx(nominal[t].w + batch.perturbations[0][t].w).epsilon(1e-15));
    }
  }
  SUBCASE("clamp ablation keeps samples inside bounds") {
    auto params = small_params(16, 8);
    params.clamp_samples = true;
    const CostConfig cfg = goal_costs({1, 0, 0});
    const ControlSequence nominal(8, {0.45, 0.0});
    auto batch = generate_batch(nominal, params, model, {0, 0, 0}, 2);
    ProjectionParams clamp;
    clamp.mode = ProjectionMode::kClampOnly;
    project_batch(batch, nominal, {0, 0, 0}, kNoObstacles, model, clamp);
    for (const auto& seq : batch.perturbed) {
      for (const Control& c : seq) {
        CHECK(c.v >= 0.0);
        CHECK(c.v <= 0.5);
      }
    }
  }
}

TEST_CASE("evaluate_batch_costs fills per-sample trajectory costs") {
  const DiffDriveModel model(0.03);
  const auto params = small_params(8, 10);
  const CostConfig cfg = goal_costs({1, 0, 0});
  const ControlSequence nominal(10, {0.2, 0.0});
  auto batch = generate_batch(nominal, params, model, {0, 0, 0}, 13);
  evaluate_batch_costs(batch, nominal, cfg, params.cov, false, kNoObstacles, 0.03);
  for (int k = 0; k < 8; ++k) {
    const double expect = trajectory_cost(batch.rollouts[k], nominal, batch.perturbed[k],
                                          cfg, params.cov, false, kNoObstacles, 0.03);
    CHECK(batch.costs[k] == expect);
  }
}
