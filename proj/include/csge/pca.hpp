#pragma once

#include "csge/core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace csge {

/// Principal components of standardized data. Rows of the input are samples.
template <typename Scalar>
struct PrincipalComponents {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  Matrix basis;         // F x n_dim, orthonormal columns
  RowVector means;      // length F
  RowVector scales;     // length F; 1 for zero-variance columns
  Vector eigenvalues;   // length n_dim, descending

  Index n_features() const { return basis.rows(); }
  Index n_dim() const { return basis.cols(); }

  template <typename Derived>
  Matrix project(const Eigen::MatrixBase<Derived>& rows) const {
    if (rows.cols() != basis.rows()) throw Error(ErrorKind::ShapeMismatch, "projection input has wrong feature count");
    return ((rows.rowwise() - means).array().rowwise() / scales.array()).matrix() * basis;
  }
};

/// Columns of `x` standardized (sample std, zero-variance columns only
/// centered), covariance eigendecomposed, top `n_dim` components kept. Each
/// eigenvector's largest-magnitude entry is made positive.
template <typename Derived>
PrincipalComponents<typename Derived::Scalar> fit_pca(const Eigen::MatrixBase<Derived>& x, Index n_dim) {
  using Scalar = typename Derived::Scalar;
  using Pca = PrincipalComponents<Scalar>;
  using Matrix = typename Pca::Matrix;

  const Index n = x.rows();
  const Index f = x.cols();
  if (f < 1 || n_dim < 1 || n_dim > f) {
    throw Error(ErrorKind::InvalidHyperParams, "PCA needs 1 <= n_dim <= n_features");
  }
  if (n < 2) throw Error(ErrorKind::DegenerateData, "PCA needs at least two rows");

  Pca pca;
  pca.means = x.colwise().mean();
  Matrix centered = x.rowwise() - pca.means;
  pca.scales.resize(f);
  for (Index c = 0; c < f; ++c) {
    const Scalar var = centered.col(c).squaredNorm() / Scalar(n - 1);
    const Scalar sd = std::sqrt(var);
    const Scalar floor = Scalar(1e-12) * std::max(Scalar(1), std::abs(pca.means[c]));
    pca.scales[c] = sd > floor ? sd : Scalar(1);
  }
  Matrix z = centered.array().rowwise() / pca.scales.array();
  Matrix cov = (z.transpose() * z) / Scalar(n - 1);

  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::DegenerateData, "covariance eigendecomposition failed");

  pca.basis.resize(f, n_dim);
  pca.eigenvalues.resize(n_dim);
  for (Index k = 0; k < n_dim; ++k) {
    const Index src = f - 1 - k;  // solver sorts ascending
    auto v = solver.eigenvectors().col(src);
    Index lead = 0;
    for (Index i = 1; i < f; ++i)
      if (std::abs(v[i]) > std::abs(v[lead])) lead = i;
    const Scalar sign = v[lead] < Scalar(0) ? Scalar(-1) : Scalar(1);
    pca.basis.col(k) = sign * v;
    pca.eigenvalues[k] = solver.eigenvalues()[src];
  }
  return pca;
}

}  // namespace csge
