#include "csge/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace csge {

Index WeightingConfig::resolved_n_dim(Index n_features) const {
  return n_dim > 0 ? std::min(n_dim, n_features) : std::min<Index>(n_features, 3);
}

Index WeightingConfig::resolved_k_neighbors(Index n_rows) const {
  const Index k = k_neighbors > 0 ? k_neighbors
                                  : std::max<Index>(5, static_cast<Index>(std::ceil(0.05 * static_cast<double>(n_rows))));
  return std::min(k, n_rows);
}

namespace {

void check_alignment(const PredictionCube& cube, const Eigen::MatrixXd& targets) {
  if (cube.samples() != targets.rows() || cube.horizon() != targets.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "prediction cube and targets are not aligned");
  }
  if (cube.samples() < 1) throw Error(ErrorKind::ShapeMismatch, "empty prediction cube");
}

}  // namespace

Eigen::MatrixXd member_errors(const PredictionCube& cube, const Eigen::MatrixXd& targets, const Scorer& scorer,
                              Index t) {
  check_alignment(cube, targets);
  if (t < 0 || t >= cube.horizon()) throw Error(ErrorKind::LeadTimeOutOfRange, "lead time out of range");
  Eigen::MatrixXd e(cube.samples(), cube.members());
  for (Index n = 0; n < cube.samples(); ++n)
    for (Index j = 0; j < cube.members(); ++j) e(n, j) = score_output(scorer, cube.output(n, j, t), targets(n, t));
  return e;
}

GlobalScores fit_global(const PredictionCube& cube, const Eigen::MatrixXd& targets, const Scorer& scorer) {
  return {member_errors(cube, targets, scorer, 0).colwise().mean().transpose()};
}

Eigen::VectorXd global_weights(const GlobalScores& scores, double eta, const SoftGateConfig& cfg) {
  return soft_gate(scores.R, eta, cfg);
}

LocalMemory fit_local(const Eigen::MatrixXd& features, const Eigen::MatrixXd& errors, Index n_dim, Index k_neighbors) {
  if (features.rows() != errors.rows()) throw Error(ErrorKind::ShapeMismatch, "features and errors row counts differ");
  if (k_neighbors < 1 || k_neighbors > features.rows()) {
    throw Error(ErrorKind::InvalidHyperParams, "k_neighbors must lie in [1, N]");
  }
  LocalMemory memory;
  memory.pca = fit_pca(features, n_dim);
  memory.projected_training = memory.pca.project(features);
  memory.training_errors = errors;
  memory.k_neighbors = k_neighbors;
  return memory;
}

std::vector<Index> nearest_rows(const LocalMemory& memory, const Eigen::Ref<const Eigen::RowVectorXd>& projected,
                                Index c, Index exclude) {
  const Index n = memory.rows();
  const Index available = (exclude >= 0 && exclude < n) ? n - 1 : n;
  if (c < 1 || c > available) throw Error(ErrorKind::InvalidHyperParams, "neighbor count exceeds stored rows");
  if (projected.size() != memory.projected_training.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "projected query has wrong dimension");
  }

  std::vector<std::pair<double, Index>> dist;
  dist.reserve(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) {
    if (r == exclude) continue;
    dist.emplace_back((memory.projected_training.row(r) - projected).squaredNorm(), r);
  }
  std::partial_sort(dist.begin(), dist.begin() + c, dist.end());
  std::vector<Index> out(static_cast<std::size_t>(c));
  for (Index i = 0; i < c; ++i) out[static_cast<std::size_t>(i)] = dist[static_cast<std::size_t>(i)].second;
  return out;
}

Eigen::VectorXd local_errors(const LocalMemory& memory, const Eigen::Ref<const Eigen::RowVectorXd>& x, Index exclude) {
  if (x.size() != memory.pca.n_features()) throw Error(ErrorKind::ShapeMismatch, "query has wrong feature count");
  for (Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i])) throw Error(ErrorKind::NonFiniteValue, "query feature is not finite");
  const Eigen::RowVectorXd projected = memory.pca.project(x);
  const Index c = std::min(memory.k_neighbors, exclude >= 0 ? memory.rows() - 1 : memory.rows());
  // accumulate in row order so the result depends only on the neighbor set
  std::vector<Index> rows = nearest_rows(memory, projected, c, exclude);
  std::sort(rows.begin(), rows.end());
  Eigen::VectorXd q = Eigen::VectorXd::Zero(memory.members());
  for (Index r : rows) q += memory.training_errors.row(r).cwiseAbs().transpose();
  return q / static_cast<double>(c);
}

Eigen::VectorXd local_weights(const Eigen::Ref<const Eigen::VectorXd>& q, double eta, const SoftGateConfig& cfg) {
  return soft_gate(q, eta, cfg);
}

TimeScores fit_time(const PredictionCube& cube, const Eigen::MatrixXd& targets, const Scorer& scorer) {
  check_alignment(cube, targets);
  const Index horizon = cube.horizon();
  TimeScores s;
  s.R_t.resize(horizon, cube.members());
  for (Index t = 0; t < horizon; ++t) s.R_t.row(t) = member_errors(cube, targets, scorer, t).colwise().mean();

  s.r_t = Eigen::MatrixXd::Ones(horizon, cube.members());
  for (Index j = 0; j < cube.members(); ++j) {
    const double horizon_mean = s.R_t.col(j).mean();
    if (horizon_mean > 0) s.r_t.col(j) = s.R_t.col(j) / horizon_mean;
  }
  return s;
}

Eigen::VectorXd time_weights(const TimeScores& scores, Index t, double eta, const SoftGateConfig& cfg) {
  if (t < 0 || t >= scores.horizon()) throw Error(ErrorKind::LeadTimeOutOfRange, "lead time " + std::to_string(t));
  return soft_gate(scores.r_t.row(t).transpose(), eta, cfg);
}

}  // namespace csge
