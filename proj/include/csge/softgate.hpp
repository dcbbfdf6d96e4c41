#pragma once

// Soft-gating kernel. An exponent eta interpolates between plain averaging
// (eta = 0) and hard selection of the lowest-error member (eta -> inf).

#include "csge/core.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace csge {

struct SoftGateConfig {
  double epsilon = 1e-9;
  double eta_max = 12.0;

  void validate() const {
    if (!(epsilon > 0) || !(eta_max > 0)) {
      throw Error(ErrorKind::InvalidHyperParams, "soft gate needs epsilon > 0 and eta_max > 0");
    }
  }
};

namespace detail {

template <typename Scalar>
void check_eta(Scalar eta, const SoftGateConfig& cfg) {
  if (!(eta >= Scalar(0)) || eta > Scalar(cfg.eta_max)) {
    throw Error(ErrorKind::EtaOutOfRange, "eta=" + std::to_string(static_cast<double>(eta)) +
                                              " outside [0, " + std::to_string(cfg.eta_max) + "]");
  }
}

template <typename Derived>
void check_errors(const Eigen::MatrixBase<Derived>& errors) {
  for (Index i = 0; i < errors.size(); ++i) {
    const auto e = errors.derived().coeff(i);
    if (!std::isfinite(static_cast<double>(e))) throw Error(ErrorKind::NonFiniteValue, "soft gate error is not finite");
    if (e < 0) throw Error(ErrorKind::NegativeError, "soft gate error is negative");
  }
}

/// rho^eta as exp(eta * ln rho); 0^0 = 1 and 0^eta = 0 otherwise.
template <typename Scalar>
Scalar gate_power(Scalar rho, Scalar eta) {
  using std::exp;
  using std::log;
  if (eta == Scalar(0)) return Scalar(1);
  if (rho == Scalar(0)) return Scalar(0);
  return exp(eta * log(rho));
}

}  // namespace detail

/// Unnormalized gate of member j: sum(errors) / (errors[j]^eta + epsilon).
template <typename Derived>
typename Derived::Scalar soft_gate_raw(const Eigen::MatrixBase<Derived>& errors, Index j,
                                       typename Derived::Scalar eta, const SoftGateConfig& cfg = {}) {
  using Scalar = typename Derived::Scalar;
  detail::check_errors(errors);
  detail::check_eta(eta, cfg);
  if (j < 0 || j >= errors.size()) throw Error(ErrorKind::ShapeMismatch, "member index out of range");
  const Scalar rho = errors.derived().coeff(j);
  return order_independent_sum(errors) / (detail::gate_power(rho, eta) + Scalar(cfg.epsilon));
}

/// Normalized soft-gate weights, one per member, summing to one.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> soft_gate(const Eigen::MatrixBase<Derived>& errors,
                                                                     typename Derived::Scalar eta,
                                                                     const SoftGateConfig& cfg = {}) {
  using Scalar = typename Derived::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using std::exp;
  using std::log;
  using std::max;

  const Index size = errors.size();
  if (size < 1) throw Error(ErrorKind::ShapeMismatch, "soft gate needs at least one member");
  detail::check_errors(errors);
  detail::check_eta(eta, cfg);

  const Scalar total = order_independent_sum(errors);
  if (total == Scalar(0)) return Vector::Constant(size, Scalar(1) / Scalar(size));

  const Scalar eps = Scalar(cfg.epsilon);
  Vector gates(size);
  for (Index j = 0; j < size; ++j) {
    gates[j] = total / (detail::gate_power(errors.derived().coeff(j), eta) + eps);
  }
  const Scalar norm = order_independent_sum(gates);
  if (norm > Scalar(0) && std::isfinite(static_cast<double>(norm))) return gates / norm;

  // Overflow in the numerator or in every rho^eta: normalize in log space,
  // where the common numerator cancels.
  Vector log_gate(size);
  const Scalar log_eps = log(eps);
  for (Index j = 0; j < size; ++j) {
    const Scalar rho = errors.derived().coeff(j);
    Scalar log_pow = Scalar(0);
    if (eta != Scalar(0)) log_pow = rho == Scalar(0) ? -std::numeric_limits<Scalar>::infinity() : eta * log(rho);
    const Scalar hi = max(log_pow, log_eps);
    const Scalar lo = log_pow < log_eps ? log_pow : log_eps;
    log_gate[j] = -(hi + std::log1p(exp(lo - hi)));
  }
  const Scalar top = log_gate.maxCoeff();
  Vector w = (log_gate.array() - top).exp().matrix();
  return w / order_independent_sum(w);
}

/// Regularization shape for one exponent; penalizes both eta = 0 and large eta.
template <typename Scalar>
Scalar eta_penalty(Scalar eta) {
  using std::exp;
  using std::sqrt;
  if (!(eta >= Scalar(0))) throw Error(ErrorKind::EtaOutOfRange, "eta_penalty needs eta >= 0");
  return Scalar(1) / (Scalar(1) + exp(Scalar(-0.5) * (eta - Scalar(10)))) +
         Scalar(1) / (Scalar(2) * (Scalar(1) + exp(sqrt(eta))));
}

}  // namespace csge
