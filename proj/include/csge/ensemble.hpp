#pragma once

// The soft-gating ensemble: out-of-fold training protocol, eta fitting and
// prediction with per-member weight breakdowns.

#include "csge/core.hpp"
#include "csge/estimators.hpp"
#include "csge/optim.hpp"
#include "csge/weighting.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace csge {

enum class TrainingProtocol { KFold, Holdout };

/// Partition of sample indices into K nonempty folds.
struct FoldPlan {
  Index K = 5;
  std::vector<Index> assignments;
  std::uint64_t seed = 0;

  /// Seeded shuffle cut into contiguous blocks. With labels, each class is
  /// shuffled and dealt round-robin so folds are stratified.
  static FoldPlan make(Index n, Index k, std::uint64_t seed, const Eigen::VectorXd* labels = nullptr);

  void validate(Index n) const;
  std::vector<Index> train_rows(Index fold) const;
  std::vector<Index> test_rows(Index fold) const;
};

/// Deterministic permutation of 0..n-1 (Fisher-Yates over mt19937_64).
std::vector<Index> shuffled_indices(Index n, std::uint64_t seed);

struct EnsembleConfig {
  Scorer scorer = Scorer::squared_error();
  ObjectiveConfig objective;
  WeightingConfig weighting;
  double epsilon = 1e-9;
  TrainingProtocol protocol = TrainingProtocol::KFold;
  Index folds = 5;
  double holdout_fraction = 0.5;  // share of rows reserved for ensemble training
  std::uint64_t seed = 0;
  bool leave_one_out_local = true;
  // Optional grids; when non-empty, c_reg and the neighbor count are chosen by
  // cross-validating the fusion over the out-of-fold cube.
  std::vector<double> c_reg_grid;
  std::vector<Index> k_neighbors_grid;

  SoftGateConfig gate() const { return {epsilon, objective.eta_max}; }
};

struct CsgeModel {
  std::vector<FittedEstimator> members;
  std::vector<std::string> member_ids;
  EtaVector eta;
  GlobalScores global_scores;
  LocalMemory local_memory;
  TimeScores time_scores;
  Scorer scorer;
  EnsembleConfig config;
  Task task = Task::Regression;
  Index n_classes = 0;
  Index n_features = 0;
  std::vector<std::string> feature_names;
  double objective_value = 0.0;

  Index size() const { return static_cast<Index>(member_ids.size()); }
  Index horizon() const { return time_scores.horizon(); }
  Index outputs() const { return task == Task::Classification ? n_classes : 1; }
  bool has_external_members() const;
};

/// Observer for fold hygiene checks: (fold, member, training rows, predicted rows).
using FoldObserver =
    std::function<void(Index, Index, std::span<const Index>, std::span<const Index>)>;

/// Out-of-fold predictions: every sample is predicted by member copies trained
/// without its fold.
PredictionCube build_prediction_cube(const std::vector<EstimatorSpec>& specs, const Dataset& data, const FoldPlan& plan,
                                     const FoldObserver& observer = {});

/// Full protocol: cube, weighting structures, eta minimization, final member fits.
CsgeModel fit(const std::vector<EstimatorSpec>& specs, const Dataset& data, const EnsembleConfig& cfg);
CsgeModel fit(const std::vector<EstimatorSpec>& specs, const Dataset& data, const FoldPlan& plan,
              const EnsembleConfig& cfg);

/// Fits the fusion layer on externally produced out-of-fold predictions. The
/// resulting members are external: predictions must be supplied at query time.
CsgeModel fit_from_cube(const PredictionCube& cube, const Dataset& data, const EnsembleConfig& cfg);

struct Prediction {
  Eigen::VectorXd value;           // fused output (1 value or class probabilities)
  Index label = -1;                // argmax class for classification
  Eigen::MatrixXd member_outputs;  // D x J
  WeightBreakdown weights;

  double scalar() const { return value[0]; }
};

WeightBreakdown weights_at(const CsgeModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x, Index t);

Prediction predict(const CsgeModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x, Index t = 0);

/// Fuses supplied member outputs (D x J); used for external members.
Prediction predict_with_outputs(const CsgeModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x, Index t,
                                const Eigen::MatrixXd& member_outputs);

struct MetricRow {
  std::string name;
  std::vector<double> values;
  double mean = 0, stddev = 0, min = 0, max = 0;
};

/// RMSE for regression, error rate (1 - accuracy) for classification. Rows:
/// one per member, then "csge" and "averaging".
struct EvaluationReport {
  std::string metric;
  std::vector<MetricRow> rows;

  const MetricRow& row(const std::string& name) const;
  std::string to_csv() const;
  std::string to_markdown() const;
};

/// Scores a fitted model on a test set (one repetition per row).
EvaluationReport evaluate(const CsgeModel& model, const Dataset& test);

/// Repeated K-fold cross-validation over seeds; each outer fold contributes
/// one value per row.
EvaluationReport cross_validate(const std::vector<EstimatorSpec>& specs, const Dataset& data, const EnsembleConfig& cfg,
                                Index outer_folds, const std::vector<std::uint64_t>& seeds);

}  // namespace csge
