#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cscmppi/mppi.hpp"
#include "cscmppi/projection.hpp"

namespace cscmppi {

enum class ClusterFallback {
  kAllSamples,     // treat the whole batch as one cluster
  kBestSingleton,  // return the single lowest-cost sample's sequence
};

enum class SelectionMode {
  kEvaluatedRollout,  // fresh rollout of each candidate, scored hard-constraint
  kClusterMinCost,    // ablation: rank candidates by their cluster's best sample
};

struct ClusterParams {
  // Neighborhood radius in feature space. Empty selects the adaptive rule:
  // median over the batch of each point's distance to its min_pts-th
  // nearest neighbor (self counts as the first).
  std::optional<double> eps;
  int min_pts = 5;
  // Weight of the cost coordinate. Empty selects sqrt(N * m) so cost and
  // geometry carry comparable influence.
  std::optional<double> cost_scale;
  ClusterFallback fallback = ClusterFallback::kAllSamples;
  SelectionMode selection = SelectionMode::kEvaluatedRollout;
  // Residual violation of non-converged samples is scaled by this and added
  // to their cost coordinate, pushing them toward the noise class.
  double violation_cost_weight = 1e4;

  void validate() const;
};

// Partition of sample indices: clusters are ordered by their smallest core
// index, indices within each set ascend, and clusters + noise cover
// every sample exactly once.
struct ClusterSet {
  std::vector<std::vector<int>> clusters;
  std::vector<int> noise;

  int cluster_count() const { return static_cast<int>(clusters.size()); }
};

struct CostStats {
  double min = 0.0;
  double max = 0.0;
};

// One DBSCAN input point: the noise-normalized perturbation followed by the
// min-max-normalized, scaled cost coordinate.
Eigen::VectorXd feature_vector(const ControlSequence& perturbation, double cost,
                               const CostStats& stats, double cost_scale,
                               const NoiseCovariance& cov);

// Feature matrix for a projected batch (one row per sample). Reports may be
// empty; otherwise non-converged samples get their cost coordinate inflated.
Eigen::MatrixXd build_feature_matrix(const SampleBatch& batch,
                                     const std::vector<ProjectionReport>& reports,
                                     const ClusterParams& params,
                                     const NoiseCovariance& cov);

// Adaptive eps (median k-distance) unless params.eps is set.
double resolve_eps(const Eigen::MatrixXd& points, const ClusterParams& params);

// Euclidean DBSCAN. A core point has at least min_pts neighbors within eps,
// itself included; clusters are the maximal sets of density-connected core
// points; border points join the cluster of their lowest-index core
// neighbor. Deterministic for a fixed input ordering.
ClusterSet dbscan(const Eigen::MatrixXd& points, double eps, int min_pts);
ClusterSet dbscan(const Eigen::MatrixXd& points, const ClusterParams& params);

struct ClusterUpdate {
  ControlSequence sequence;
  double cost = 0.0;
};

// Computes the candidate cost used for the final argmin selection.
using CandidateEvaluator =
    std::function<double(const ControlSequence&, const std::vector<int>&)>;

// Softmax-weighted update restricted to one cluster, with the baseline taken
// from the cluster's own minimum cost.
ClusterUpdate cluster_mppi_update(const ControlSequence& nominal,
                                  const SampleBatch& batch,
                                  const std::vector<int>& cluster, double lambda,
                                  const CandidateEvaluator& evaluate);

// Index of the lowest-cost update; ties go to the lowest index.
int select_optimal(const std::vector<ClusterUpdate>& updates);

struct CscParams {
  MppiParams mppi;
  ProjectionParams projection;
  ClusterParams clustering;
};

// Full pipeline: sample, project, cost, cluster, per-cluster update,
// lowest-cost selection.
StepResult csc_mppi_step(const State& x0, const ControlSequence& nominal,
                         const CscParams& params, const Dynamics& model,
                         const CostConfig& cfg, const ConstraintSet& constraints,
                         std::uint64_t seed, bool capture_trace = false);

// Ablation: projection followed by a single weighted update over the whole
// batch, skipping DBSCAN.
StepResult csc_no_dbscan_step(const State& x0, const ControlSequence& nominal,
                              const CscParams& params, const Dynamics& model,
                              const CostConfig& cfg, const ConstraintSet& constraints,
                              std::uint64_t seed, bool capture_trace = false);

}  // namespace cscmppi
