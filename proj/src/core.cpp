#include "csge/core.hpp"

#include <cmath>
#include <sstream>

namespace csge {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::NegativeError: return "NegativeError";
    case ErrorKind::EtaOutOfRange: return "EtaOutOfRange";
    case ErrorKind::InvalidHyperParams: return "InvalidHyperParams";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::NotFitted: return "NotFitted";
    case ErrorKind::FoldTooSmall: return "FoldTooSmall";
    case ErrorKind::LeadTimeOutOfRange: return "LeadTimeOutOfRange";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingCell: return "MissingCell";
    case ErrorKind::Usage: return "Usage";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

Dataset Dataset::subset(std::span<const Index> rows) const {
  Dataset out;
  out.features.resize(static_cast<Index>(rows.size()), features.cols());
  out.targets.resize(static_cast<Index>(rows.size()), targets.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Index>(i)) = features.row(rows[i]);
    out.targets.row(static_cast<Index>(i)) = targets.row(rows[i]);
  }
  out.has_lead_times = has_lead_times;
  out.feature_names = feature_names;
  out.target_name = target_name;
  out.task = task;
  out.n_classes = n_classes;
  return out;
}

const Dataset& validate_dataset(const Dataset& d) {
  if (d.features.rows() < 1 || d.features.cols() < 1) {
    throw Error(ErrorKind::ShapeMismatch, "dataset needs at least one row and one feature");
  }
  if (d.targets.rows() != d.features.rows()) {
    std::ostringstream os;
    os << "targets have " << d.targets.rows() << " rows, features have " << d.features.rows();
    throw Error(ErrorKind::ShapeMismatch, os.str());
  }
  if (d.targets.cols() < 1 || (!d.has_lead_times && d.targets.cols() != 1)) {
    throw Error(ErrorKind::ShapeMismatch, "targets must be N x 1 without a lead-time axis");
  }
  if (!d.feature_names.empty() && static_cast<Index>(d.feature_names.size()) != d.features.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "feature_names length differs from feature count");
  }
  for (Index c = 0; c < d.features.cols(); ++c) {
    for (Index r = 0; r < d.features.rows(); ++r) {
      if (!std::isfinite(d.features(r, c))) {
        std::ostringstream os;
        os << "non-finite feature at row " << r << ", column " << c;
        throw Error(ErrorKind::NonFiniteValue, os.str());
      }
    }
  }
  for (Index c = 0; c < d.targets.cols(); ++c) {
    for (Index r = 0; r < d.targets.rows(); ++r) {
      if (!std::isfinite(d.targets(r, c))) {
        std::ostringstream os;
        os << "target at (row " << r << ", lead time " << c << ")";
        throw Error(ErrorKind::NonFiniteValue, os.str());
      }
    }
  }
  if (d.task == Task::Classification) {
    if (d.n_classes < 2) throw Error(ErrorKind::ShapeMismatch, "classification needs n_classes >= 2");
    for (Index r = 0; r < d.targets.rows(); ++r) {
      for (Index c = 0; c < d.targets.cols(); ++c) {
        const double y = d.targets(r, c);
        if (y < 0 || y >= static_cast<double>(d.n_classes) || y != std::floor(y)) {
          throw Error(ErrorKind::ShapeMismatch, "class label out of range at row " + std::to_string(r));
        }
      }
    }
  }
  return d;
}

PredictionCube::PredictionCube(Index n, Index j, Index t, Index d)
    : n_(n), j_(j), t_(t), d_(d), values_(static_cast<std::size_t>(n * j * t * d), 0.0) {
  if (n < 0 || j < 0 || t < 1 || d < 1) throw Error(ErrorKind::ShapeMismatch, "invalid cube dimensions");
  member_ids.resize(static_cast<std::size_t>(j));
  for (Index m = 0; m < j; ++m) member_ids[static_cast<std::size_t>(m)] = "m" + std::to_string(m);
}

void PredictionCube::check_finite() const {
  for (Index n = 0; n < n_; ++n)
    for (Index j = 0; j < j_; ++j)
      for (Index t = 0; t < t_; ++t)
        for (Index d = 0; d < d_; ++d)
          if (!std::isfinite((*this)(n, j, t, d))) {
            std::ostringstream os;
            os << "prediction cube entry (sample " << n << ", member " << j << ", lead time " << t << ")";
            throw Error(ErrorKind::NonFiniteValue, os.str());
          }
}

PredictionCube PredictionCube::select(std::span<const Index> rows) const {
  PredictionCube out(static_cast<Index>(rows.size()), j_, t_, d_);
  out.member_ids = member_ids;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Index j = 0; j < j_; ++j)
      for (Index t = 0; t < t_; ++t) out.output(static_cast<Index>(i), j, t) = output(rows[i], j, t);
  return out;
}

std::string Scorer::name() const {
  switch (kind) {
    case ScorerKind::SquaredError: return "squared_error";
    case ScorerKind::AbsoluteError: return "absolute_error";
    case ScorerKind::ZeroOneError: return "zero_one_error";
    case ScorerKind::UserSupplied: return user_name.empty() ? "user_supplied" : user_name;
  }
  return "unknown";
}

Scorer Scorer::from_name(const std::string& name) {
  if (name == "squared_error") return squared_error();
  if (name == "absolute_error") return absolute_error();
  if (name == "zero_one_error") return zero_one_error();
  throw Error(ErrorKind::InvalidHyperParams, "unknown scorer '" + name + "'");
}

double score(const Scorer& s, double predicted, double truth) {
  if (!std::isfinite(predicted) || !std::isfinite(truth)) {
    throw Error(ErrorKind::NonFiniteValue, "score() on non-finite input");
  }
  switch (s.kind) {
    case ScorerKind::SquaredError: return (predicted - truth) * (predicted - truth);
    case ScorerKind::AbsoluteError: return std::abs(predicted - truth);
    case ScorerKind::ZeroOneError: return std::lround(predicted) == std::lround(truth) ? 0.0 : 1.0;
    case ScorerKind::UserSupplied: {
      if (!s.user) throw Error(ErrorKind::InvalidHyperParams, "user scorer without a function");
      const double e = s.user(predicted, truth);
      if (!std::isfinite(e)) throw Error(ErrorKind::NonFiniteValue, "user scorer returned non-finite value");
      if (e < 0) throw Error(ErrorKind::NegativeError, "user scorer returned a negative error");
      return e;
    }
  }
  return 0.0;
}

Index argmax(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

double score_output(const Scorer& s, const Eigen::Ref<const Eigen::VectorXd>& output, double truth) {
  if (output.size() == 1) return score(s, output[0], truth);
  return score(s, static_cast<double>(argmax(output)), truth);
}

WeightBreakdown combine_weights(Eigen::VectorXd w_global, Eigen::VectorXd w_local, Eigen::VectorXd w_time) {
  WeightBreakdown b;
  Eigen::VectorXd product = w_global.cwiseProduct(w_local).cwiseProduct(w_time);
  const double total = order_independent_sum(product);
  if (total > 0 && std::isfinite(total)) {
    b.w_final = product / total;
  } else {
    // every product underflowed; fall back to uniform
    b.w_final = Eigen::VectorXd::Constant(product.size(), 1.0 / static_cast<double>(product.size()));
  }
  b.w_global = std::move(w_global);
  b.w_local = std::move(w_local);
  b.w_time = std::move(w_time);
  return b;
}

}  // namespace csge
