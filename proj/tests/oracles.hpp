#pragma once

// Independent reference implementations used by the tests. Deliberately
// naive: plain loops, no Eigen decompositions.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracle {

struct Eigen_ {
  std::vector<double> values;               // descending
  std::vector<std::vector<double>> vectors; // vectors[k] pairs with values[k]
};

// Cyclic Jacobi rotations on a symmetric matrix.
inline Eigen_ jacobi_eigen(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a[i][i] > a[j][j]; });
  Eigen_ out;
  for (std::size_t k : order) {
    out.values.push_back(a[k][k]);
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = v[i][k];
    out.vectors.push_back(col);
  }
  return out;
}

// Covariance of column-standardized data (sample std; constant columns are
// only centered), computed with explicit sums.
inline std::vector<std::vector<double>> standardized_covariance(const Eigen::MatrixXd& x) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto f = static_cast<std::size_t>(x.cols());
  std::vector<double> mean(f, 0.0), sd(f, 0.0);
  for (std::size_t c = 0; c < f; ++c) {
    for (std::size_t r = 0; r < n; ++r) mean[c] += x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    mean[c] /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) - mean[c];
      ss += d * d;
    }
    sd[c] = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd[c] <= 1e-12 * std::max(1.0, std::abs(mean[c]))) sd[c] = 1.0;
  }
  std::vector<std::vector<double>> cov(f, std::vector<double>(f, 0.0));
  for (std::size_t a = 0; a < f; ++a) {
    for (std::size_t b = 0; b < f; ++b) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double za = (x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a)) - mean[a]) / sd[a];
        const double zb = (x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(b)) - mean[b]) / sd[b];
        s += za * zb;
      }
      cov[a][b] = s / static_cast<double>(n - 1);
    }
  }
  return cov;
}

inline double penalty_reference(double x) {
  return 1.0 / (1.0 + std::exp(-0.5 * (x - 10.0))) + 1.0 / (2.0 * (1.0 + std::exp(std::sqrt(x))));
}

}  // namespace oracle
