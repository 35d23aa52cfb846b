#include "cscmppi/mppi.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cscmppi/parallel.hpp"
#include "cscmppi/projection.hpp"

namespace cscmppi {

MppiParams::MppiParams(int samples_, int horizon_, double dt_, double lambda_,
                       const NoiseCovariance& cov_, const ControlBounds& bounds_)
    : samples(samples_), horizon(horizon_), dt(dt_), lambda(lambda_), cov(cov_),
      bounds(bounds_) {
  if (samples < 1 || horizon < 1) {
    throw std::invalid_argument("MppiParams: samples and horizon must be >= 1");
  }
  if (!(dt > 0.0) || !(lambda > 0.0)) {
    throw std::invalid_argument("MppiParams: dt and lambda must be positive");
  }
}

SampleBatch generate_batch(const ControlSequence& nominal, const MppiParams& params,
                           const Dynamics& model, const State& x0, std::uint64_t seed) {
  const std::size_t k_count = static_cast<std::size_t>(params.samples);
  const std::size_t n = static_cast<std::size_t>(params.horizon);
  if (nominal.size() != n) {
    throw std::invalid_argument("generate_batch: nominal length != horizon");
  }
  SampleBatch batch;
  batch.perturbations.resize(k_count);
  batch.perturbed.resize(k_count);
  batch.rollouts.resize(k_count);
  batch.costs.assign(k_count, 0.0);

  util::parallel_for(k_count, [&](std::size_t k) {
    batch.perturbations[k] =
        sample_gaussian_noise({seed, static_cast<std::uint64_t>(k)}, params.cov, n);
    ControlSequence& v = batch.perturbed[k];
    v.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      v[t] = {nominal[t].v + batch.perturbations[k][t].v,
              nominal[t].w + batch.perturbations[k][t].w};
    }
    batch.rollouts[k] = rollout(model, x0, v);
  });
  return batch;
}

void evaluate_batch_costs(SampleBatch& batch, const ControlSequence& nominal,
                          const CostConfig& cfg, const NoiseCovariance& cov,
                          bool soft_constraints, const ConstraintSet& constraints,
                          double dt) {
  util::parallel_for(batch.perturbed.size(), [&](std::size_t k) {
    batch.costs[k] = trajectory_cost(batch.rollouts[k], nominal, batch.perturbed[k],
                                     cfg, cov, soft_constraints, constraints, dt);
  });
}

std::vector<double> softmax_weights(const std::vector<double>& costs, double lambda) {
  if (costs.empty()) {
    throw std::invalid_argument("softmax_weights: empty cost list");
  }
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("softmax_weights: lambda must be positive");
  }
  double rho = std::numeric_limits<double>::infinity();
  for (double c : costs) {
    if (!std::isfinite(c)) {
      throw std::invalid_argument("softmax_weights: non-finite cost in batch");
    }
    rho = std::min(rho, c);
  }
  std::vector<double> weights(costs.size());
  double eta = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    weights[i] = std::exp(-(costs[i] - rho) / lambda);
    eta += weights[i];
  }
  for (double& w : weights) {
    w /= eta;
  }
  return weights;
}

ControlSequence weighted_update(const ControlSequence& nominal,
                                const std::vector<ControlSequence>& perturbations,
                                const std::vector<double>& weights) {
  if (perturbations.size() != weights.size()) {
    throw std::invalid_argument("weighted_update: weights/perturbations size mismatch");
  }
  ControlSequence out = nominal;
  for (std::size_t i = 0; i < perturbations.size(); ++i) {
    if (perturbations[i].size() != nominal.size()) {
      throw std::invalid_argument("weighted_update: perturbation length mismatch");
    }
    const double w = weights[i];
    for (std::size_t t = 0; t < out.size(); ++t) {
      out[t].v += w * perturbations[i][t].v;
      out[t].w += w * perturbations[i][t].w;
    }
  }
  return out;
}

ControlSequence shift_sequence(const ControlSequence& seq) {
  if (seq.empty()) {
    throw std::invalid_argument("shift_sequence: empty sequence");
  }
  ControlSequence out(seq.begin() + 1, seq.end());
  out.push_back(seq.back());
  return out;
}

StepResult standard_mppi_step(const State& x0, const ControlSequence& nominal,
                              const MppiParams& params, const Dynamics& model,
                              const CostConfig& cfg, const ConstraintSet& constraints,
                              std::uint64_t seed, bool capture_trace) {
  SampleBatch batch = generate_batch(nominal, params, model, x0, seed);
  if (params.clamp_samples) {
    ProjectionParams clamp;
    clamp.mode = ProjectionMode::kClampOnly;
    project_batch(batch, nominal, x0, constraints, model, clamp);
  }
  evaluate_batch_costs(batch, nominal, cfg, params.cov, /*soft_constraints=*/true,
                       constraints, params.dt);

  const std::vector<double> weights = softmax_weights(batch.costs, params.lambda);
  StepResult result;
  result.sequence = weighted_update(nominal, batch.perturbations, weights);

  StepDiagnostics& diag = result.diagnostics;
  diag.min_cost = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  double sum_sq_w = 0.0;
  for (std::size_t i = 0; i < batch.costs.size(); ++i) {
    diag.min_cost = std::min(diag.min_cost, batch.costs[i]);
    sum += batch.costs[i];
    sum_sq_w += weights[i] * weights[i];
  }
  diag.mean_cost = sum / static_cast<double>(batch.costs.size());
  diag.effective_sample_size = 1.0 / sum_sq_w;

  const StateTrajectory selected = rollout(model, x0, result.sequence);
  diag.selected_cost = trajectory_cost(selected, nominal, result.sequence, cfg,
                                       params.cov, true, constraints, params.dt);
  diag.selected_max_violation =
      max_constraint_violation(selected, constraints, params.dt);
  diag.selected_feasible =
      diag.selected_max_violation <= ProjectionParams{}.tol_violation + 1e-6;

  if (capture_trace) {
    auto trace = std::make_shared<StepTrace>();
    trace->rollouts = batch.rollouts;
    trace->cluster_labels.assign(batch.rollouts.size(), 0);
    trace->selected_rollout = selected;
    diag.trace = std::move(trace);
  }
  return result;
}

}  // namespace cscmppi
