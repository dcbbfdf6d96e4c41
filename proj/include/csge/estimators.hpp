#pragma once

// Base estimators fused by the ensemble. The built-ins keep the library
// self-contained; any other learner can take part through imported
// prediction files (EstimatorKind::External).

#include "csge/core.hpp"
#include "csge/expression.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace csge {

enum class EstimatorKind { LinearLeastSquares, KnnRegressor, KnnClassifier, DecisionTree, AnalyticFunction, External };

const char* to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(const std::string& name);

struct EstimatorSpec {
  std::string name;
  EstimatorKind kind = EstimatorKind::LinearLeastSquares;
  std::map<std::string, double> hyper_params;
  std::string expression;  // analytic_function only
  std::uint64_t seed = 0;

  static EstimatorSpec analytic(std::string name, std::string expression);
  static EstimatorSpec linear(std::string name = "linear");
  static EstimatorSpec knn(std::string name, Index k, bool classifier = false);
  static EstimatorSpec tree(std::string name, Index max_depth = 5);

  double param(const std::string& key, double fallback) const;

  /// Rejects unknown keys and out-of-range values for the kind.
  void validate(Task task) const;
};

/// Smallest training set a spec can be fit on.
Index min_training_samples(const EstimatorSpec& spec);

struct LinearModel {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
};

struct KnnModel {
  Eigen::MatrixXd features;
  Eigen::VectorXd targets;
  Index k = 5;
  Index n_classes = 0;  // 0 for regression
};

struct TreeNode {
  Index feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  Index left = -1;
  Index right = -1;
  Eigen::VectorXd value;  // mean target, or class distribution
};

struct TreeModel {
  std::vector<TreeNode> nodes;
};

using HorizonModel = std::variant<LinearModel, KnnModel, TreeModel>;

class FittedEstimator {
public:
  FittedEstimator() = default;
  FittedEstimator(EstimatorSpec spec, Index n_features, Index outputs, std::vector<HorizonModel> models);

  /// Member output at (x, t): one value for regression, one probability per
  /// class for classification.
  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::RowVectorXd>& x, Index t = 0) const;

  const EstimatorSpec& spec() const { return spec_; }
  Index n_features() const { return n_features_; }
  Index outputs() const { return outputs_; }
  const std::vector<HorizonModel>& models() const { return models_; }
  bool is_fitted() const { return fitted_; }

private:
  EstimatorSpec spec_;
  Index n_features_ = 0;
  Index outputs_ = 1;
  std::vector<HorizonModel> models_;  // one per lead time for learned kinds
  std::optional<Expression> expression_;
  bool fitted_ = false;
};

/// Deterministic fit. Learned kinds fit one model per lead time; analytic
/// members ignore the data.
FittedEstimator fit(const EstimatorSpec& spec, const Dataset& train);

}  // namespace csge
