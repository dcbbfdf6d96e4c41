#pragma once

// The three weighting aspects: global (constant after training), local
// (k nearest historical situations in PCA space) and time (lead-time profile).

#include "csge/core.hpp"
#include "csge/pca.hpp"
#include "csge/softgate.hpp"

namespace csge {

/// Mean error per member over the training data.
struct GlobalScores {
  Eigen::VectorXd R;
};

struct LocalMemory {
  PrincipalComponents<double> pca;
  Eigen::MatrixXd projected_training;  // N x n_dim
  Eigen::MatrixXd training_errors;     // N x J, t = 0
  Index k_neighbors = 5;

  Index rows() const { return projected_training.rows(); }
  Index members() const { return training_errors.cols(); }
};

struct TimeScores {
  Eigen::MatrixXd R_t;  // T x J mean errors per lead time
  Eigen::MatrixXd r_t;  // T x J relative to each member's horizon mean

  Index horizon() const { return r_t.rows(); }
};

struct WeightingConfig {
  Index n_dim = 0;        // 0: min(F, 3)
  Index k_neighbors = 0;  // 0: max(5, ceil(0.05 N))

  Index resolved_n_dim(Index n_features) const;
  Index resolved_k_neighbors(Index n_rows) const;
};

/// Per-sample, per-member errors of the cube at lead time t (N x J).
Eigen::MatrixXd member_errors(const PredictionCube& cube, const Eigen::MatrixXd& targets, const Scorer& scorer,
                              Index t = 0);

GlobalScores fit_global(const PredictionCube& cube, const Eigen::MatrixXd& targets, const Scorer& scorer);
Eigen::VectorXd global_weights(const GlobalScores& scores, double eta, const SoftGateConfig& cfg = {});

/// Builds the local-weighting memory from the ensemble-training features and
/// the cube's t = 0 errors.
LocalMemory fit_local(const Eigen::MatrixXd& features, const Eigen::MatrixXd& errors, Index n_dim, Index k_neighbors);

/// Indices of the c nearest stored rows to a projected query; ties broken by
/// lowest row index. `exclude` (if >= 0) removes one stored row from the scan.
std::vector<Index> nearest_rows(const LocalMemory& memory, const Eigen::Ref<const Eigen::RowVectorXd>& projected,
                                Index c, Index exclude = -1);

/// Mean absolute stored error of each member over the c nearest situations.
Eigen::VectorXd local_errors(const LocalMemory& memory, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                             Index exclude = -1);
Eigen::VectorXd local_weights(const Eigen::Ref<const Eigen::VectorXd>& q, double eta, const SoftGateConfig& cfg = {});

TimeScores fit_time(const PredictionCube& cube, const Eigen::MatrixXd& targets, const Scorer& scorer);
Eigen::VectorXd time_weights(const TimeScores& scores, Index t, double eta, const SoftGateConfig& cfg = {});

}  // namespace csge
