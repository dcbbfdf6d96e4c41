#include "csge/core.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace csge;

namespace {

Dataset small_dataset(Index rows, Index features, Index targets) {
  Dataset d;
  d.features = Eigen::MatrixXd::Random(rows, features);
  d.targets = Eigen::MatrixXd::Random(targets, 1);
  return d;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Usage;
}

}  // namespace

TEST_CASE("validate_dataset accepts consistent shapes") {
  const Dataset d = small_dataset(3, 2, 3);
  CHECK(&validate_dataset(d) == &d);
}

TEST_CASE("validate_dataset rejects a target/feature row mismatch") {
  const Dataset d = small_dataset(3, 2, 4);
  CHECK(kind_of([&] { validate_dataset(d); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("validate_dataset reports the position of a NaN") {
  Dataset d = small_dataset(3, 2, 3);
  d.features(1, 1) = std::numeric_limits<double>::quiet_NaN();
  try {
    validate_dataset(d);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFiniteValue);
    const std::string msg = e.what();
    CHECK(msg.find("row 1") != std::string::npos);
    CHECK(msg.find("column 1") != std::string::npos);
  }
}

TEST_CASE("classification labels must be valid class indices") {
  Dataset d = small_dataset(3, 2, 3);
  d.task = Task::Classification;
  d.n_classes = 2;
  d.targets << 0, 1, 1;
  CHECK_NOTHROW(validate_dataset(d));
  d.targets(2, 0) = 2;
  CHECK_THROWS_AS(validate_dataset(d), Error);
  d.targets(2, 0) = 0.5;
  CHECK_THROWS_AS(validate_dataset(d), Error);
}

TEST_CASE("scorers") {
  CHECK(score(Scorer::squared_error(), 2, 2) == 0.0);
  CHECK(score(Scorer::squared_error(), 3, 1) == 4.0);
  CHECK(score(Scorer::absolute_error(), 3, 1) == 2.0);
  CHECK(score(Scorer::zero_one_error(), 2, 0) == 1.0);
  CHECK(score(Scorer::zero_one_error(), 1, 1) == 0.0);
  CHECK_THROWS_AS(score(Scorer::squared_error(), std::nan(""), 1), Error);

  const Scorer bad = Scorer::custom("reward", [](double p, double y) { return -std::abs(p - y); });
  CHECK_THROWS_AS(score(bad, 1, 2), Error);

  for (const char* name : {"squared_error", "absolute_error", "zero_one_error"})
    CHECK(Scorer::from_name(name).name() == name);
  CHECK_THROWS_AS(Scorer::from_name("accuracy"), Error);
}

TEST_CASE("scores are nonnegative on random finite inputs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double p = u(rng), y = u(rng);
    CHECK(score(Scorer::squared_error(), p, y) >= 0.0);
    CHECK(score(Scorer::absolute_error(), p, y) >= 0.0);
    CHECK(score(Scorer::zero_one_error(), std::round(p), std::round(y)) >= 0.0);
  }
}

TEST_CASE("score_output reduces probability vectors to labels") {
  Eigen::VectorXd probs(3);
  probs << 0.2, 0.5, 0.3;
  CHECK(score_output(Scorer::zero_one_error(), probs, 1) == 0.0);
  CHECK(score_output(Scorer::zero_one_error(), probs, 2) == 1.0);
  Eigen::VectorXd tie(3);
  tie << 0.4, 0.4, 0.2;
  CHECK(argmax(tie) == 0);
}

TEST_CASE("combine_weights multiplies and renormalizes") {
  Eigen::VectorXd g(2), l(2), t(2);
  g << 0.6, 0.4;
  l << 0.5, 0.5;
  t << 0.25, 0.75;
  const WeightBreakdown b = combine_weights(g, l, t);
  const double p0 = 0.6 * 0.5 * 0.25, p1 = 0.4 * 0.5 * 0.75;
  CHECK(b.w_final[0] == doctest::Approx(p0 / (p0 + p1)).epsilon(1e-12));
  CHECK(b.w_final[1] == doctest::Approx(p1 / (p0 + p1)).epsilon(1e-12));
  CHECK(std::abs(b.w_final.sum() - 1.0) <= 1e-9);
  CHECK(b.w_global == g);
}

TEST_CASE("combine_weights falls back to uniform when every product underflows") {
  Eigen::VectorXd tiny = Eigen::VectorXd::Constant(3, 1e-200);
  const WeightBreakdown b = combine_weights(tiny, tiny, tiny);
  for (Index j = 0; j < 3; ++j) CHECK(b.w_final[j] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("random weight breakdowns are normalized with components in [0, 1]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Index j = 2 + static_cast<Index>(rng() % 8);
    Eigen::VectorXd g(j), l(j), t(j);
    for (Index i = 0; i < j; ++i) {
      g[i] = u(rng);
      l[i] = u(rng);
      t[i] = u(rng);
    }
    g /= g.sum();
    l /= l.sum();
    t /= t.sum();
    const WeightBreakdown b = combine_weights(g, l, t);
    CHECK(std::abs(b.w_final.sum() - 1.0) <= 1e-9);
    CHECK(b.w_final.minCoeff() >= 0.0);
    CHECK(b.w_final.maxCoeff() <= 1.0);
  }
}

TEST_CASE("order_independent_sum is invariant under permutation") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd v(40);
  for (Index i = 0; i < v.size(); ++i) v[i] = u(rng) * std::pow(10.0, static_cast<double>(i % 7));
  const double ref = order_independent_sum(v);
  for (int trial = 0; trial < 50; ++trial) {
    std::shuffle(v.data(), v.data() + v.size(), rng);
    CHECK(order_independent_sum(v) == ref);
  }
}

TEST_CASE("prediction cube layout and selection") {
  PredictionCube cube(3, 2, 2, 2);
  for (Index n = 0; n < 3; ++n)
    for (Index j = 0; j < 2; ++j)
      for (Index t = 0; t < 2; ++t)
        for (Index d = 0; d < 2; ++d) cube(n, j, t, d) = static_cast<double>(1000 * n + 100 * j + 10 * t + d);
  CHECK(cube.output(2, 1, 1)[1] == 2111.0);
  const std::vector<Index> rows = {2, 0};
  const PredictionCube sub = cube.select(rows);
  CHECK(sub.samples() == 2);
  CHECK(sub(0, 1, 0, 1) == 2101.0);
  CHECK(sub(1, 0, 1, 0) == 10.0);
  cube(0, 0, 0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(cube.check_finite(), Error);
}

TEST_CASE("dataset subset keeps the requested order") {
  Dataset d;
  d.features = (Eigen::MatrixXd(3, 1) << 1, 2, 3).finished();
  d.targets = (Eigen::MatrixXd(3, 1) << 10, 20, 30).finished();
  const std::vector<Index> rows = {2, 0};
  const Dataset s = d.subset(rows);
  CHECK(s.features(0, 0) == 3);
  CHECK(s.targets(1, 0) == 10);
}
