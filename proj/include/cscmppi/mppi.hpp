#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "cscmppi/costs.hpp"
#include "cscmppi/dynamics.hpp"
#include "cscmppi/rng.hpp"
#include "cscmppi/types.hpp"

namespace cscmppi {

struct MppiParams {
  int samples;   // K
  int horizon;   // N
  double dt;
  double lambda;
  NoiseCovariance cov;
  ControlBounds bounds;
  // Ablation switch: clamp raw samples to bounds before costing. The
  // soft-constraint baseline keeps this off.
  bool clamp_samples = false;

  MppiParams(int samples_, int horizon_, double dt_, double lambda_,
             const NoiseCovariance& cov_, const ControlBounds& bounds_);
};

// Monte Carlo population of one control step. All four collections share
// the sample index k; perturbed[k][t] == nominal[t] + perturbations[k][t]
// is re-established after any projection pass rewrites the sequences.
struct SampleBatch {
  std::vector<ControlSequence> perturbations;
  std::vector<ControlSequence> perturbed;
  std::vector<StateTrajectory> rollouts;
  std::vector<double> costs;
};

// Optional per-step capture of everything a plotting pipeline needs.
struct StepTrace {
  std::vector<StateTrajectory> rollouts;
  std::vector<int> cluster_labels;  // -1 = noise
  StateTrajectory selected_rollout;
};

struct StepDiagnostics {
  double min_cost = 0.0;
  double mean_cost = 0.0;
  double effective_sample_size = 0.0;  // 1 / sum(w^2)
  double selected_cost = 0.0;          // evaluated cost of the returned sequence
  double selected_max_violation = 0.0;
  bool selected_feasible = true;

  int cluster_count = 0;
  int noise_count = 0;
  bool fallback_used = false;
  std::vector<int> cluster_sizes;
  std::vector<double> cluster_costs;

  int projection_converged = 0;  // samples whose projection converged
  int projection_samples = 0;
  int projection_max_sweeps = 0;
  double projection_mean_sweeps = 0.0;

  std::shared_ptr<StepTrace> trace;  // only set when tracing is requested
};

struct StepResult {
  ControlSequence sequence;
  StepDiagnostics diagnostics;
};

// Draws K perturbed sequences around the nominal (sample k uses stream
// (seed, k)) and rolls each one out. Costs are left at zero for a later
// cost pass.
SampleBatch generate_batch(const ControlSequence& nominal, const MppiParams& params,
                           const Dynamics& model, const State& x0, std::uint64_t seed);

void evaluate_batch_costs(SampleBatch& batch, const ControlSequence& nominal,
                          const CostConfig& cfg, const NoiseCovariance& cov,
                          bool soft_constraints, const ConstraintSet& constraints,
                          double dt);

// Baseline-subtracted exponential weights; positive, summing to one. The
// minimum-cost sample always carries the largest weight. Throws on a
// non-finite cost.
std::vector<double> softmax_weights(const std::vector<double>& costs, double lambda);

ControlSequence weighted_update(const ControlSequence& nominal,
                                const std::vector<ControlSequence>& perturbations,
                                const std::vector<double>& weights);

// Receding-horizon warm start: drop the first input, repeat the last.
ControlSequence shift_sequence(const ControlSequence& seq);

// Soft-constraint MPPI update over the whole batch.
StepResult standard_mppi_step(const State& x0, const ControlSequence& nominal,
                              const MppiParams& params, const Dynamics& model,
                              const CostConfig& cfg, const ConstraintSet& constraints,
                              std::uint64_t seed, bool capture_trace = false);

}  // namespace cscmppi
