#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace csge {

using Index = Eigen::Index;

enum class ErrorKind {
  ShapeMismatch,
  NonFiniteValue,
  NegativeError,
  EtaOutOfRange,
  InvalidHyperParams,
  DegenerateData,
  NotFitted,
  FoldTooSmall,
  LeadTimeOutOfRange,
  ParseError,
  MissingCell,
  Usage,
  Io,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; the kind drives CLI exit codes.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

enum class Task { Regression, Classification };

/// Feature matrix plus targets. Targets are N x T; T = 1 unless the data has
/// a lead-time axis. Classification targets hold class indices.
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::MatrixXd targets;
  bool has_lead_times = false;
  std::vector<std::string> feature_names;
  std::string target_name = "target";
  Task task = Task::Regression;
  Index n_classes = 0;

  Index rows() const { return features.rows(); }
  Index n_features() const { return features.cols(); }
  Index horizon() const { return targets.cols(); }

  /// Sub-dataset with the given rows, in the given order.
  Dataset subset(std::span<const Index> rows) const;
};

/// Checks shapes and finiteness. Returns the dataset unchanged on success.
const Dataset& validate_dataset(const Dataset& d);

/// Out-of-fold member predictions, N x J x T x D with D = 1 for regression and
/// D = number of classes for classification (one probability per class).
class PredictionCube {
public:
  PredictionCube() = default;
  PredictionCube(Index n, Index j, Index t, Index d = 1);

  Index samples() const { return n_; }
  Index members() const { return j_; }
  Index horizon() const { return t_; }
  Index outputs() const { return d_; }

  double& operator()(Index n, Index j, Index t, Index d = 0) { return values_[offset(n, j, t, d)]; }
  double operator()(Index n, Index j, Index t, Index d = 0) const { return values_[offset(n, j, t, d)]; }

  /// Output vector of member j for sample n at lead time t.
  Eigen::Map<const Eigen::VectorXd> output(Index n, Index j, Index t) const {
    return Eigen::Map<const Eigen::VectorXd>(values_.data() + offset(n, j, t, 0), d_);
  }
  Eigen::Map<Eigen::VectorXd> output(Index n, Index j, Index t) {
    return Eigen::Map<Eigen::VectorXd>(values_.data() + offset(n, j, t, 0), d_);
  }

  std::vector<std::string> member_ids;

  /// Throws NonFiniteValue on any NaN/Inf entry.
  void check_finite() const;

  /// Cube restricted to the given samples, in the given order.
  PredictionCube select(std::span<const Index> rows) const;

private:
  std::size_t offset(Index n, Index j, Index t, Index d) const {
    return static_cast<std::size_t>(((n * j_ + j) * t_ + t) * d_ + d);
  }

  Index n_ = 0, j_ = 0, t_ = 0, d_ = 0;
  std::vector<double> values_;
};

/// Soft-gating exponents of the three weighting aspects.
struct EtaVector {
  double global = 0.0;
  double local = 0.0;
  double time = 0.0;

  std::array<double, 3> as_array() const { return {global, local, time}; }
  static EtaVector from_array(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

  friend bool operator==(const EtaVector&, const EtaVector&) = default;
};

enum class ScorerKind { SquaredError, AbsoluteError, ZeroOneError, UserSupplied };

/// Error-valued scoring function: nonnegative, lower is better.
struct Scorer {
  ScorerKind kind = ScorerKind::SquaredError;
  std::function<double(double, double)> user;
  std::string user_name;

  static Scorer squared_error() { return {ScorerKind::SquaredError, {}, {}}; }
  static Scorer absolute_error() { return {ScorerKind::AbsoluteError, {}, {}}; }
  static Scorer zero_one_error() { return {ScorerKind::ZeroOneError, {}, {}}; }
  static Scorer custom(std::string name, std::function<double(double, double)> fn) {
    return {ScorerKind::UserSupplied, std::move(fn), std::move(name)};
  }

  std::string name() const;
  static Scorer from_name(const std::string& name);
};

double score(const Scorer& s, double predicted, double truth);

/// Error of one member output. Multi-output (class probability) vectors are
/// reduced to their argmax label before scoring.
double score_output(const Scorer& s, const Eigen::Ref<const Eigen::VectorXd>& output, double truth);

/// Sum of the entries in ascending order, so the result does not depend on
/// the order of the input (members can be reordered without changing a bit).
template <typename Derived>
typename Derived::Scalar order_independent_sum(const Eigen::DenseBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  std::vector<Scalar> terms(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) terms[static_cast<std::size_t>(i)] = v.derived().coeff(i);
  std::sort(terms.begin(), terms.end());
  Scalar total(0);
  for (const Scalar& x : terms) total += x;
  return total;
}

/// Lowest index of the largest entry.
Index argmax(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Per-member weights of one prediction; every vector has length J.
struct WeightBreakdown {
  Eigen::VectorXd w_global;
  Eigen::VectorXd w_local;
  Eigen::VectorXd w_time;
  Eigen::VectorXd w_final;
};

/// Multiplies the three aspects and renormalizes.
WeightBreakdown combine_weights(Eigen::VectorXd w_global, Eigen::VectorXd w_local, Eigen::VectorXd w_time);

}  // namespace csge
