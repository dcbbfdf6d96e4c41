#include "csge/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace csge {

const char* to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::LinearLeastSquares: return "linear_least_squares";
    case EstimatorKind::KnnRegressor: return "knn_regressor";
    case EstimatorKind::KnnClassifier: return "knn_classifier";
    case EstimatorKind::DecisionTree: return "decision_tree";
    case EstimatorKind::AnalyticFunction: return "analytic_function";
    case EstimatorKind::External: return "external";
  }
  return "unknown";
}

EstimatorKind estimator_kind_from_string(const std::string& name) {
  for (auto k : {EstimatorKind::LinearLeastSquares, EstimatorKind::KnnRegressor, EstimatorKind::KnnClassifier,
                 EstimatorKind::DecisionTree, EstimatorKind::AnalyticFunction, EstimatorKind::External}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorKind::InvalidHyperParams, "unknown estimator kind '" + name + "'");
}

EstimatorSpec EstimatorSpec::analytic(std::string name, std::string expression) {
  EstimatorSpec s;
  s.name = std::move(name);
  s.kind = EstimatorKind::AnalyticFunction;
  s.expression = std::move(expression);
  return s;
}

EstimatorSpec EstimatorSpec::linear(std::string name) {
  EstimatorSpec s;
  s.name = std::move(name);
  s.kind = EstimatorKind::LinearLeastSquares;
  return s;
}

EstimatorSpec EstimatorSpec::knn(std::string name, Index k, bool classifier) {
  EstimatorSpec s;
  s.name = std::move(name);
  s.kind = classifier ? EstimatorKind::KnnClassifier : EstimatorKind::KnnRegressor;
  s.hyper_params["k"] = static_cast<double>(k);
  return s;
}

EstimatorSpec EstimatorSpec::tree(std::string name, Index max_depth) {
  EstimatorSpec s;
  s.name = std::move(name);
  s.kind = EstimatorKind::DecisionTree;
  s.hyper_params["max_depth"] = static_cast<double>(max_depth);
  return s;
}

double EstimatorSpec::param(const std::string& key, double fallback) const {
  auto it = hyper_params.find(key);
  return it == hyper_params.end() ? fallback : it->second;
}

namespace {

void require_int_at_least(const EstimatorSpec& s, const std::string& key, double fallback, double lo) {
  const double v = s.param(key, fallback);
  if (!(v >= lo) || v != std::floor(v)) {
    throw Error(ErrorKind::InvalidHyperParams, s.name + ": " + key + " must be an integer >= " + std::to_string(lo));
  }
}

}  // namespace

void EstimatorSpec::validate(Task task) const {
  std::vector<std::string> allowed;
  switch (kind) {
    case EstimatorKind::LinearLeastSquares:
      allowed = {"ridge", "fit_intercept"};
      if (task != Task::Regression) throw Error(ErrorKind::InvalidHyperParams, name + ": linear members need regression");
      if (!(param("ridge", 0.0) >= 0)) throw Error(ErrorKind::InvalidHyperParams, name + ": ridge must be >= 0");
      break;
    case EstimatorKind::KnnRegressor:
    case EstimatorKind::KnnClassifier:
      allowed = {"k"};
      require_int_at_least(*this, "k", 5, 1);
      if ((kind == EstimatorKind::KnnClassifier) != (task == Task::Classification)) {
        throw Error(ErrorKind::InvalidHyperParams, name + ": " + to_string(kind) + " does not match the task");
      }
      break;
    case EstimatorKind::DecisionTree:
      allowed = {"max_depth", "min_samples_leaf"};
      require_int_at_least(*this, "max_depth", 5, 1);
      require_int_at_least(*this, "min_samples_leaf", 1, 1);
      break;
    case EstimatorKind::AnalyticFunction:
      if (task != Task::Regression) throw Error(ErrorKind::InvalidHyperParams, name + ": analytic members need regression");
      Expression::parse(expression);
      break;
    case EstimatorKind::External: break;
  }
  for (const auto& [key, value] : hyper_params) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorKind::InvalidHyperParams, name + ": unknown hyper-parameter '" + key + "'");
    }
    if (!std::isfinite(value)) throw Error(ErrorKind::InvalidHyperParams, name + ": " + key + " is not finite");
  }
}

Index min_training_samples(const EstimatorSpec& spec) {
  switch (spec.kind) {
    case EstimatorKind::KnnRegressor:
    case EstimatorKind::KnnClassifier: return static_cast<Index>(spec.param("k", 5));
    case EstimatorKind::LinearLeastSquares:
    case EstimatorKind::DecisionTree: return 1;
    case EstimatorKind::AnalyticFunction:
    case EstimatorKind::External: return 0;
  }
  return 1;
}

namespace {

// ---- linear -----------------------------------------------------------------

LinearModel fit_linear(const EstimatorSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const bool intercept = spec.param("fit_intercept", 1.0) != 0.0;
  const Index p = x.cols() + (intercept ? 1 : 0);
  Eigen::MatrixXd a(x.rows(), p);
  a.leftCols(x.cols()) = x;
  if (intercept) a.col(p - 1).setOnes();

  Eigen::MatrixXd normal = a.transpose() * a;
  const Eigen::VectorXd rhs = a.transpose() * y;
  const double ridge = spec.param("ridge", 0.0);
  if (ridge > 0) normal.diagonal().array() += ridge;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normal);
  Eigen::VectorXd w;
  if (qr.rank() == p) {
    w = qr.solve(rhs);
  } else {
    normal.diagonal().array() += 1e-10;
    w = normal.ldlt().solve(rhs);
  }
  if (!w.allFinite()) throw Error(ErrorKind::DegenerateData, spec.name + ": least squares produced non-finite weights");

  LinearModel m;
  m.coefficients = w.head(x.cols());
  m.intercept = intercept ? w[p - 1] : 0.0;
  return m;
}

// ---- k nearest neighbors ----------------------------------------------------

std::vector<Index> knn_indices(const KnnModel& m, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(m.features.rows()));
  for (Index r = 0; r < m.features.rows(); ++r) dist[static_cast<std::size_t>(r)] = {(m.features.row(r) - x).squaredNorm(), r};
  const auto k = static_cast<std::size_t>(std::min<Index>(m.k, m.features.rows()));
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<Index> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::VectorXd predict_knn(const KnnModel& m, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const auto idx = knn_indices(m, x);
  if (m.n_classes == 0) {
    double sum = 0.0;
    for (Index r : idx) sum += m.targets[r];
    return Eigen::VectorXd::Constant(1, sum / static_cast<double>(idx.size()));
  }
  Eigen::VectorXd p = Eigen::VectorXd::Zero(m.n_classes);
  for (Index r : idx) p[static_cast<Index>(m.targets[r])] += 1.0;
  return p / static_cast<double>(idx.size());
}

// ---- CART -------------------------------------------------------------------

class TreeBuilder {
public:
  TreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Index n_classes, Index max_depth, Index min_leaf)
      : x_(x), y_(y), n_classes_(n_classes), max_depth_(max_depth), min_leaf_(min_leaf) {}

  TreeModel build() {
    std::vector<Index> all(static_cast<std::size_t>(x_.rows()));
    std::iota(all.begin(), all.end(), Index{0});
    grow(all, 0);
    return std::move(tree_);
  }

private:
  Eigen::VectorXd leaf_value(const std::vector<Index>& rows) const {
    if (n_classes_ == 0) {
      double sum = 0.0;
      for (Index r : rows) sum += y_[r];
      return Eigen::VectorXd::Constant(1, sum / static_cast<double>(rows.size()));
    }
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n_classes_);
    for (Index r : rows) p[static_cast<Index>(y_[r])] += 1.0;
    return p / static_cast<double>(rows.size());
  }

  // Impurity times sample count: SSE for regression, n * Gini for classes.
  struct Accumulator {
    double n = 0, sum = 0, sumsq = 0;
    Eigen::VectorXd counts;

    void add(double y, Index n_classes, double sign) {
      n += sign;
      if (n_classes == 0) {
        sum += sign * y;
        sumsq += sign * y * y;
      } else {
        counts[static_cast<Index>(y)] += sign;
      }
    }

    double impurity(Index n_classes) const {
      if (n <= 0) return 0.0;
      if (n_classes == 0) return std::max(0.0, sumsq - sum * sum / n);
      return n - counts.squaredNorm() / n;
    }
  };

  Index grow(const std::vector<Index>& rows, Index depth) {
    const Index id = static_cast<Index>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{-1, 0.0, -1, -1, leaf_value(rows)});
    const Index n = static_cast<Index>(rows.size());
    if (depth >= max_depth_ || n < 2 * min_leaf_) return id;

    Accumulator parent;
    parent.counts = Eigen::VectorXd::Zero(std::max<Index>(n_classes_, 1));
    for (Index r : rows) parent.add(y_[r], n_classes_, 1.0);
    const double parent_impurity = parent.impurity(n_classes_);
    if (parent_impurity <= 0) return id;

    double best_gain = 0.0;
    Index best_feature = -1;
    double best_threshold = 0.0;
    std::vector<Index> sorted = rows;
    for (Index f = 0; f < x_.cols(); ++f) {
      std::stable_sort(sorted.begin(), sorted.end(), [&](Index a, Index b) { return x_(a, f) < x_(b, f); });
      Accumulator left;
      left.counts = Eigen::VectorXd::Zero(parent.counts.size());
      Accumulator right = parent;
      for (Index i = 0; i + 1 < n; ++i) {
        const Index r = sorted[static_cast<std::size_t>(i)];
        left.add(y_[r], n_classes_, 1.0);
        right.add(y_[r], n_classes_, -1.0);
        const double lo = x_(r, f);
        const double hi = x_(sorted[static_cast<std::size_t>(i + 1)], f);
        if (!(lo < hi) || i + 1 < min_leaf_ || n - i - 1 < min_leaf_) continue;
        const double gain = parent_impurity - left.impurity(n_classes_) - right.impurity(n_classes_);
        const double tol = 1e-12 * std::max(1.0, parent_impurity);
        if (gain > best_gain + tol) {
          best_gain = gain;
          best_feature = f;
          best_threshold = lo + 0.5 * (hi - lo);
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<Index> left_rows, right_rows;
    for (Index r : rows) (x_(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
    const Index l = grow(left_rows, depth + 1);
    const Index rgt = grow(right_rows, depth + 1);
    tree_.nodes[static_cast<std::size_t>(id)].feature = best_feature;
    tree_.nodes[static_cast<std::size_t>(id)].threshold = best_threshold;
    tree_.nodes[static_cast<std::size_t>(id)].left = l;
    tree_.nodes[static_cast<std::size_t>(id)].right = rgt;
    return id;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  Index n_classes_;
  Index max_depth_;
  Index min_leaf_;
  TreeModel tree_;
};

Eigen::VectorXd predict_tree(const TreeModel& m, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  Index node = 0;
  while (m.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = m.nodes[static_cast<std::size_t>(node)];
    node = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return m.nodes[static_cast<std::size_t>(node)].value;
}

}  // namespace

FittedEstimator::FittedEstimator(EstimatorSpec spec, Index n_features, Index outputs, std::vector<HorizonModel> models)
    : spec_(std::move(spec)), n_features_(n_features), outputs_(outputs), models_(std::move(models)), fitted_(true) {
  if (spec_.kind == EstimatorKind::AnalyticFunction) expression_ = Expression::parse(spec_.expression);
}

Eigen::VectorXd FittedEstimator::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x, Index t) const {
  if (!fitted_) throw Error(ErrorKind::NotFitted, "estimator '" + spec_.name + "' is not fitted");
  if (x.size() != n_features_) throw Error(ErrorKind::ShapeMismatch, "query has wrong feature count");
  if (!x.allFinite()) throw Error(ErrorKind::NonFiniteValue, "query has non-finite features");
  if (t < 0) throw Error(ErrorKind::LeadTimeOutOfRange, "negative lead time");

  if (spec_.kind == EstimatorKind::External) {
    throw Error(ErrorKind::NotFitted, "member '" + spec_.name + "' is external; supply its predictions");
  }
  if (expression_) return Eigen::VectorXd::Constant(1, expression_->evaluate(x, static_cast<double>(t)));

  if (t >= static_cast<Index>(models_.size())) {
    throw Error(ErrorKind::LeadTimeOutOfRange, "member '" + spec_.name + "' has no model for lead time " + std::to_string(t));
  }
  return std::visit(
      [&](const auto& m) -> Eigen::VectorXd {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LinearModel>) {
          return Eigen::VectorXd::Constant(1, x.dot(m.coefficients) + m.intercept);
        } else if constexpr (std::is_same_v<M, KnnModel>) {
          return predict_knn(m, x);
        } else {
          return predict_tree(m, x);
        }
      },
      models_[static_cast<std::size_t>(t)]);
}

FittedEstimator fit(const EstimatorSpec& spec, const Dataset& train) {
  spec.validate(train.task);
  const Index outputs = train.task == Task::Classification ? train.n_classes : 1;

  if (spec.kind == EstimatorKind::AnalyticFunction || spec.kind == EstimatorKind::External) {
    return FittedEstimator(spec, train.n_features(), outputs, {});
  }
  validate_dataset(train);
  if (train.rows() < min_training_samples(spec)) {
    throw Error(ErrorKind::DegenerateData, spec.name + " needs at least " + std::to_string(min_training_samples(spec)) +
                                               " training rows, got " + std::to_string(train.rows()));
  }

  std::vector<HorizonModel> models;
  for (Index t = 0; t < train.horizon(); ++t) {
    const Eigen::VectorXd y = train.targets.col(t);
    switch (spec.kind) {
      case EstimatorKind::LinearLeastSquares: models.emplace_back(fit_linear(spec, train.features, y)); break;
      case EstimatorKind::KnnRegressor:
      case EstimatorKind::KnnClassifier: {
        KnnModel m;
        m.features = train.features;
        m.targets = y;
        m.k = static_cast<Index>(spec.param("k", 5));
        m.n_classes = spec.kind == EstimatorKind::KnnClassifier ? train.n_classes : 0;
        models.emplace_back(std::move(m));
        break;
      }
      case EstimatorKind::DecisionTree: {
        const Index classes = train.task == Task::Classification ? train.n_classes : 0;
        TreeBuilder builder(train.features, y, classes, static_cast<Index>(spec.param("max_depth", 5)),
                            static_cast<Index>(spec.param("min_samples_leaf", 1)));
        models.emplace_back(builder.build());
        break;
      }
      default: break;
    }
  }
  return FittedEstimator(spec, train.n_features(), outputs, std::move(models));
}

}  // namespace csge
