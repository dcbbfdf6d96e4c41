#include "csge/softgate.hpp"

#include <doctest.h>

#include <random>

using namespace csge;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Reference a(x) values from a 50-digit evaluation (mpmath), frozen here.
constexpr double kPenaltyAt0 = 0.2566928509242848;
constexpr double kPenaltyAt4 = 0.1070273341886256;
constexpr double kPenaltyAt10 = 0.5203051103366874;

}  // namespace

TEST_CASE("raw gate values") {
  const double eps = 1e-9;
  CHECK(soft_gate_raw(vec({2, 2}), 0, 1.0) == doctest::Approx(4.0 / (2.0 + eps)).epsilon(1e-15));
  CHECK(soft_gate_raw(vec({1, 3}), 0, 0.0) == doctest::Approx(4.0 / (1.0 + eps)).epsilon(1e-15));
  CHECK(soft_gate_raw(vec({1, 3}), 1, 2.0) == doctest::Approx(4.0 / (9.0 + eps)).epsilon(1e-15));
}

TEST_CASE("normalized gate values") {
  auto w = soft_gate(vec({1, 3}), 0.0);
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-12));
  w = soft_gate(vec({1, 3}), 1.0);
  CHECK(std::abs(w[0] - 0.75) <= 1e-9);
  CHECK(std::abs(w[1] - 0.25) <= 1e-9);
  w = soft_gate(vec({1, 2, 4}), 1.0);
  CHECK(std::abs(w[0] - 4.0 / 7.0) <= 1e-9);
  CHECK(std::abs(w[1] - 2.0 / 7.0) <= 1e-9);
  CHECK(std::abs(w[2] - 1.0 / 7.0) <= 1e-9);
  w = soft_gate(vec({1, 3}), 2.0);
  CHECK(std::abs(w[0] - 0.9) <= 1e-9);
  CHECK(std::abs(w[1] - 0.1) <= 1e-9);
}

TEST_CASE("errors and eta are validated") {
  CHECK_THROWS_AS(soft_gate(vec({1, -1}), 1.0), Error);
  try {
    soft_gate(vec({1, -1}), 1.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NegativeError);
  }
  try {
    soft_gate(vec({1, 2}), 12.5);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EtaOutOfRange);
  }
  CHECK_THROWS_AS(soft_gate(vec({1, 2}), -0.1), Error);
  CHECK_THROWS_AS(soft_gate_raw(vec({1, 2}), 2, 1.0), Error);
  CHECK_THROWS_AS(soft_gate(Eigen::VectorXd(0), 1.0), Error);
  CHECK_THROWS_AS((SoftGateConfig{0.0, 12.0}.validate()), Error);
}

TEST_CASE("all-zero errors give uniform weights") {
  const auto w = soft_gate(Eigen::VectorXd::Zero(4), 3.0);
  for (Index j = 0; j < 4; ++j) CHECK(w[j] == 0.25);
}

TEST_CASE("a zero-error member dominates") {
  const auto w = soft_gate(vec({0, 5}), 1.0);
  CHECK(w[0] >= 1 - 1e-6);
}

TEST_CASE("single member gets weight one") {
  CHECK(soft_gate(vec({3.5}), 7.0)[0] == 1.0);
}

TEST_CASE("weights sum to one for random inputs") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> err(0.0, 100.0), eta(0.0, 12.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const Index j = 1 + static_cast<Index>(trial % 50);
    Eigen::VectorXd e(j);
    for (Index i = 0; i < j; ++i) e[i] = err(rng) * (rng() % 5 == 0 ? 1e-6 : 1.0);
    const auto w = soft_gate(e, eta(rng));
    CHECK(std::abs(w.sum() - 1.0) <= 1e-12);
    CHECK(w.minCoeff() >= 0.0);
  }
}

TEST_CASE("smaller error never gets a smaller weight") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> err(0.0, 10.0), eta(0.0, 12.0);
  for (int trial = 0; trial < 2000; ++trial) {
    Eigen::VectorXd e(6);
    for (Index i = 0; i < 6; ++i) e[i] = err(rng);
    const double h = eta(rng);
    const auto w = soft_gate(e, h);
    for (Index a = 0; a < 6; ++a) {
      for (Index b = 0; b < 6; ++b) {
        if (e[a] < e[b]) {
          CHECK(w[a] >= w[b]);
          // strict once the difference is well above epsilon effects
          if (h > 0.1 && e[b] - e[a] > 1e-3) CHECK(w[a] > w[b]);
        }
      }
    }
  }
}

TEST_CASE("eta = 0 is plain averaging") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> err(0.0, 1e3);
  for (int trial = 0; trial < 500; ++trial) {
    const Index j = 1 + static_cast<Index>(trial % 20);
    Eigen::VectorXd e(j);
    for (Index i = 0; i < j; ++i) e[i] = err(rng);
    const auto w = soft_gate(e, 0.0);
    CHECK((w.array() - 1.0 / static_cast<double>(j)).abs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("common scaling of the errors leaves the weights unchanged") {
  // Holds while rho^eta stays far above epsilon, i.e. away from the regime
  // where the additive constant matters.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> err(1e-3, 10.0), eta(0.0, 3.0), scale(0.5, 20.0);
  for (int trial = 0; trial < 2000; ++trial) {
    Eigen::VectorXd e(5);
    for (Index i = 0; i < 5; ++i) e[i] = err(rng);
    const double h = eta(rng), s = scale(rng);
    if (std::pow(e.minCoeff() * std::min(1.0, s), h) < 1e-3) continue;
    const auto w1 = soft_gate(e, h);
    const auto w2 = soft_gate(Eigen::VectorXd(e * s), h);
    CHECK((w1 - w2).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("large eta approaches hard gating") {
  const SoftGateConfig cfg{1e-9, 64.0};
  const auto w = soft_gate(vec({1, 3}), 50.0, cfg);
  CHECK(w[0] >= 1 - 1e-8);
}

TEST_CASE("log-space fallback when the gates overflow") {
  // Huge errors: sum(errors) overflows to inf, so the direct ratio is unusable.
  const double big = std::numeric_limits<double>::max() / 2;
  const auto w = soft_gate(vec({big, big, big / 4}), 1.0);
  CHECK(std::isfinite(w.sum()));
  CHECK(std::abs(w.sum() - 1.0) <= 1e-12);
  CHECK(w[2] == doctest::Approx(4.0 / 6.0).epsilon(1e-9));
  const auto u = soft_gate(vec({big, big}), 0.0);
  CHECK(u[0] == doctest::Approx(0.5));
}

TEST_CASE("works with long double") {
  Eigen::Matrix<long double, Eigen::Dynamic, 1> e(2);
  e << 1.0L, 3.0L;
  const auto w = soft_gate(e, 2.0L);
  CHECK(static_cast<double>(w[0]) == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("penalty values against high-precision reference") {
  CHECK(std::abs(eta_penalty(0.0) - kPenaltyAt0) <= 1e-9);
  CHECK(std::abs(eta_penalty(4.0) - kPenaltyAt4) <= 1e-9);
  CHECK(std::abs(eta_penalty(10.0) - kPenaltyAt10) <= 1e-9);
  CHECK_THROWS_AS(eta_penalty(-1.0), Error);
}

TEST_CASE("penalty minimum lies in the low-penalty basin") {
  double best = 0.0, best_v = eta_penalty(0.0);
  for (int i = 1; i <= 1200; ++i) {
    const double x = i * 0.01;
    if (eta_penalty(x) < best_v) {
      best_v = eta_penalty(x);
      best = x;
    }
  }
  CHECK(best >= 1.0);
  CHECK(best <= 6.0);
  CHECK(best == doctest::Approx(3.31));
  // penalizes both ends
  CHECK(eta_penalty(0.0) > best_v);
  CHECK(eta_penalty(12.0) > best_v);
}
