#include "cscmppi/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cscmppi {

void ClusterParams::validate() const {
  if (eps && !(*eps > 0.0)) {
    throw std::invalid_argument("ClusterParams: eps must be positive");
  }
  if (min_pts < 1) {
    throw std::invalid_argument("ClusterParams: min_pts must be >= 1");
  }
  if (cost_scale && *cost_scale < 0.0) {
    throw std::invalid_argument("ClusterParams: cost_scale must be >= 0");
  }
  if (violation_cost_weight < 0.0) {
    throw std::invalid_argument("ClusterParams: violation_cost_weight must be >= 0");
  }
}

Eigen::VectorXd feature_vector(const ControlSequence& perturbation, double cost,
                               const CostStats& stats, double cost_scale,
                               const NoiseCovariance& cov) {
  const std::size_t n = perturbation.size();
  Eigen::VectorXd f(2 * n + 1);
  for (std::size_t t = 0; t < n; ++t) {
    f[2 * t] = perturbation[t].v / cov.sigma_v;
    f[2 * t + 1] = perturbation[t].w / cov.sigma_w;
  }
  // The 1e-12 guard keeps degenerate equal-cost batches at coordinate zero.
  f[2 * n] = cost_scale * (cost - stats.min) / (stats.max - stats.min + 1e-12);
  return f;
}

Eigen::MatrixXd build_feature_matrix(const SampleBatch& batch,
                                     const std::vector<ProjectionReport>& reports,
                                     const ClusterParams& params,
                                     const NoiseCovariance& cov) {
  params.validate();
  const std::size_t k_count = batch.perturbations.size();
  if (k_count == 0) {
    return {};
  }
  std::vector<double> costs(batch.costs);
  if (!reports.empty()) {
    if (reports.size() != k_count) {
      throw std::invalid_argument("build_feature_matrix: report count mismatch");
    }
    for (std::size_t k = 0; k < k_count; ++k) {
      if (!reports[k].converged) {
        costs[k] += params.violation_cost_weight *
                    std::max(0.0, reports[k].max_violation);
      }
    }
  }
  CostStats stats{costs[0], costs[0]};
  for (double c : costs) {
    stats.min = std::min(stats.min, c);
    stats.max = std::max(stats.max, c);
  }
  const std::size_t n = batch.perturbations[0].size();
  const double scale =
      params.cost_scale ? *params.cost_scale : std::sqrt(static_cast<double>(2 * n));

  Eigen::MatrixXd points(k_count, 2 * n + 1);
  for (std::size_t k = 0; k < k_count; ++k) {
    points.row(k) =
        feature_vector(batch.perturbations[k], costs[k], stats, scale, cov).transpose();
  }
  return points;
}

double resolve_eps(const Eigen::MatrixXd& points, const ClusterParams& params) {
  params.validate();
  if (params.eps) {
    return *params.eps;
  }
  const int k_count = static_cast<int>(points.rows());
  if (k_count <= 1) {
    return 1.0;
  }
  // k-distance with self counted as the first neighbor: the min_pts-th
  // neighbor is the (min_pts - 1)-th closest other point.
  const int order = std::clamp(params.min_pts - 1, 1, k_count - 1);
  std::vector<double> kdist(k_count);
  std::vector<double> row(k_count - 1);
  for (int i = 0; i < k_count; ++i) {
    int m = 0;
    for (int j = 0; j < k_count; ++j) {
      if (j != i) {
        row[m++] = (points.row(i) - points.row(j)).norm();
      }
    }
    std::nth_element(row.begin(), row.begin() + (order - 1), row.end());
    kdist[i] = row[order - 1];
  }
  std::nth_element(kdist.begin(), kdist.begin() + k_count / 2, kdist.end());
  return kdist[k_count / 2];
}

ClusterSet dbscan(const Eigen::MatrixXd& points, double eps, int min_pts) {
  if (eps < 0.0 || min_pts < 1) {
    throw std::invalid_argument("dbscan: eps must be >= 0 and min_pts >= 1");
  }
  const int k_count = static_cast<int>(points.rows());
  ClusterSet out;
  if (k_count == 0) {
    return out;
  }

  // Neighbor lists in ascending index order (self included).
  const double eps_sq = eps * eps;
  std::vector<std::vector<int>> neighbors(k_count);
  for (int i = 0; i < k_count; ++i) {
    neighbors[i].push_back(i);
  }
  for (int i = 0; i < k_count; ++i) {
    for (int j = i + 1; j < k_count; ++j) {
      if ((points.row(i) - points.row(j)).squaredNorm() <= eps_sq) {
        neighbors[i].push_back(j);
        neighbors[j].push_back(i);
      }
    }
  }
  for (auto& list : neighbors) {
    std::sort(list.begin(), list.end());
  }

  std::vector<bool> core(k_count);
  for (int i = 0; i < k_count; ++i) {
    core[i] = static_cast<int>(neighbors[i].size()) >= min_pts;
  }

  // Density-connected components of the core points, discovered in index
  // order so cluster ids are canonical.
  constexpr int kUnlabeled = -2;
  constexpr int kNoise = -1;
  std::vector<int> label(k_count, kUnlabeled);
  int next_cluster = 0;
  for (int i = 0; i < k_count; ++i) {
    if (!core[i] || label[i] != kUnlabeled) {
      continue;
    }
    const int cluster_id = next_cluster++;
    std::deque<int> queue{i};
    label[i] = cluster_id;
    while (!queue.empty()) {
      const int p = queue.front();
      queue.pop_front();
      for (int q : neighbors[p]) {
        if (core[q] && label[q] == kUnlabeled) {
          label[q] = cluster_id;
          queue.push_back(q);
        }
      }
    }
  }

  // Border points attach to the cluster of their lowest-index core neighbor.
  for (int i = 0; i < k_count; ++i) {
    if (core[i]) {
      continue;
    }
    label[i] = kNoise;
    for (int q : neighbors[i]) {
      if (core[q]) {
        label[i] = label[q];
        break;
      }
    }
  }

  out.clusters.resize(next_cluster);
  for (int i = 0; i < k_count; ++i) {
    if (label[i] == kNoise) {
      out.noise.push_back(i);
    } else {
      out.clusters[label[i]].push_back(i);
    }
  }
  return out;
}

ClusterSet dbscan(const Eigen::MatrixXd& points, const ClusterParams& params) {
  return dbscan(points, resolve_eps(points, params), params.min_pts);
}

ClusterUpdate cluster_mppi_update(const ControlSequence& nominal,
                                  const SampleBatch& batch,
                                  const std::vector<int>& cluster, double lambda,
                                  const CandidateEvaluator& evaluate) {
  if (cluster.empty()) {
    throw std::invalid_argument("cluster_mppi_update: empty cluster");
  }
  std::vector<double> costs;
  costs.reserve(cluster.size());
  for (int k : cluster) {
    costs.push_back(batch.costs[static_cast<std::size_t>(k)]);
  }
  const std::vector<double> weights = softmax_weights(costs, lambda);

  ClusterUpdate update;
  update.sequence = nominal;
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    const ControlSequence& delta =
        batch.perturbations[static_cast<std::size_t>(cluster[i])];
    for (std::size_t t = 0; t < update.sequence.size(); ++t) {
      update.sequence[t].v += weights[i] * delta[t].v;
      update.sequence[t].w += weights[i] * delta[t].w;
    }
  }
  update.cost = evaluate(update.sequence, cluster);
  return update;
}

int select_optimal(const std::vector<ClusterUpdate>& updates) {
  if (updates.empty()) {
    throw std::invalid_argument("select_optimal: no cluster updates");
  }
  int best = 0;
  for (int i = 1; i < static_cast<int>(updates.size()); ++i) {
    if (updates[i].cost < updates[best].cost) {
      best = i;
    }
  }
  return best;
}

namespace {

struct PipelineOutcome {
  StepResult result;
  StateTrajectory selected_rollout;
};

void fill_projection_stats(StepDiagnostics& diag,
                           const std::vector<ProjectionReport>& reports) {
  diag.projection_samples = static_cast<int>(reports.size());
  double sweep_sum = 0.0;
  for (const ProjectionReport& r : reports) {
    diag.projection_converged += r.converged ? 1 : 0;
    diag.projection_max_sweeps = std::max(diag.projection_max_sweeps, r.sweeps);
    sweep_sum += r.sweeps;
  }
  if (!reports.empty()) {
    diag.projection_mean_sweeps = sweep_sum / static_cast<double>(reports.size());
  }
}

void fill_cost_stats(StepDiagnostics& diag, const std::vector<double>& costs) {
  diag.min_cost = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double c : costs) {
    diag.min_cost = std::min(diag.min_cost, c);
    sum += c;
  }
  diag.mean_cost = sum / static_cast<double>(costs.size());
}

PipelineOutcome run_projected_pipeline(const State& x0, const ControlSequence& nominal,
                                       const CscParams& params, const Dynamics& model,
                                       const CostConfig& cfg,
                                       const ConstraintSet& constraints,
                                       std::uint64_t seed, bool use_dbscan,
                                       bool capture_trace) {
  SampleBatch batch = generate_batch(nominal, params.mppi, model, x0, seed);
  const std::vector<ProjectionReport> reports =
      project_batch(batch, nominal, x0, constraints, model, params.projection);
  evaluate_batch_costs(batch, nominal, cfg, params.mppi.cov,
                       /*soft_constraints=*/false, constraints, params.mppi.dt);

  const CandidateEvaluator evaluate = [&](const ControlSequence& candidate,
                                          const std::vector<int>& cluster) {
    if (params.clustering.selection == SelectionMode::kClusterMinCost) {
      double best = std::numeric_limits<double>::infinity();
      for (int k : cluster) {
        best = std::min(best, batch.costs[static_cast<std::size_t>(k)]);
      }
      return best;
    }
    const StateTrajectory traj = rollout(model, x0, candidate);
    return trajectory_cost(traj, nominal, candidate, cfg, params.mppi.cov, false,
                           constraints, params.mppi.dt);
  };

  PipelineOutcome out;
  StepDiagnostics& diag = out.result.diagnostics;
  fill_projection_stats(diag, reports);
  fill_cost_stats(diag, batch.costs);

  std::vector<int> labels;
  std::vector<ClusterUpdate> updates;
  std::vector<std::vector<int>> groups;

  if (use_dbscan) {
    const Eigen::MatrixXd features =
        build_feature_matrix(batch, reports, params.clustering, params.mppi.cov);
    const ClusterSet clusters = dbscan(features, params.clustering);
    diag.cluster_count = clusters.cluster_count();
    diag.noise_count = static_cast<int>(clusters.noise.size());
    labels.assign(batch.perturbations.size(), -1);
    for (int m = 0; m < clusters.cluster_count(); ++m) {
      for (int k : clusters.clusters[m]) {
        labels[static_cast<std::size_t>(k)] = m;
      }
    }
    if (clusters.cluster_count() == 0) {
      diag.fallback_used = true;
      if (params.clustering.fallback == ClusterFallback::kBestSingleton) {
        int best = 0;
        for (int k = 1; k < static_cast<int>(batch.costs.size()); ++k) {
          if (batch.costs[k] < batch.costs[best]) {
            best = k;
          }
        }
        groups.push_back({best});
      } else {
        groups.emplace_back(batch.costs.size());
        std::iota(groups.back().begin(), groups.back().end(), 0);
      }
    } else {
      groups = clusters.clusters;
    }
  } else {
    // Ablation path: one weighted update over every projected sample.
    labels.assign(batch.perturbations.size(), 0);
    groups.emplace_back(batch.costs.size());
    std::iota(groups.back().begin(), groups.back().end(), 0);
    diag.cluster_count = 1;
  }

  updates.reserve(groups.size());
  for (const auto& group : groups) {
    updates.push_back(
        cluster_mppi_update(nominal, batch, group, params.mppi.lambda, evaluate));
    diag.cluster_sizes.push_back(static_cast<int>(group.size()));
    diag.cluster_costs.push_back(updates.back().cost);
  }

  const int chosen = select_optimal(updates);
  out.result.sequence = updates[static_cast<std::size_t>(chosen)].sequence;
  diag.selected_cost = updates[static_cast<std::size_t>(chosen)].cost;

  {
    const std::vector<double> w =
        softmax_weights([&] {
          std::vector<double> c;
          for (int k : groups[static_cast<std::size_t>(chosen)]) {
            c.push_back(batch.costs[static_cast<std::size_t>(k)]);
          }
          return c;
        }(), params.mppi.lambda);
    double sum_sq = 0.0;
    for (double wi : w) {
      sum_sq += wi * wi;
    }
    diag.effective_sample_size = 1.0 / sum_sq;
  }

  out.selected_rollout = rollout(model, x0, out.result.sequence);
  diag.selected_max_violation =
      max_constraint_violation(out.selected_rollout, constraints, params.mppi.dt);
  // 1e-6 slack absorbs re-rollout arithmetic on top of the projection tolerance.
  diag.selected_feasible =
      diag.selected_max_violation <= params.projection.tol_violation + 1e-6;

  if (capture_trace) {
    auto trace = std::make_shared<StepTrace>();
    trace->rollouts = batch.rollouts;
    trace->cluster_labels = labels;
    trace->selected_rollout = out.selected_rollout;
    diag.trace = std::move(trace);
  }
  return out;
}

}  // namespace

StepResult csc_mppi_step(const State& x0, const ControlSequence& nominal,
                         const CscParams& params, const Dynamics& model,
                         const CostConfig& cfg, const ConstraintSet& constraints,
                         std::uint64_t seed, bool capture_trace) {
  return run_projected_pipeline(x0, nominal, params, model, cfg, constraints, seed,
                                /*use_dbscan=*/true, capture_trace)
      .result;
}

StepResult csc_no_dbscan_step(const State& x0, const ControlSequence& nominal,
                              const CscParams& params, const Dynamics& model,
                              const CostConfig& cfg, const ConstraintSet& constraints,
                              std::uint64_t seed, bool capture_trace) {
  return run_projected_pipeline(x0, nominal, params, model, cfg, constraints, seed,
                                /*use_dbscan=*/false, capture_trace)
      .result;
}

}  // namespace cscmppi
