#include "csge/optim.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace csge;

namespace {

// Two regression members over N samples, T = 1. Member 0 is exact, member 1
// carries a sample-dependent offset.
struct Fixture {
  PredictionCube cube;
  Eigen::MatrixXd targets;
  Eigen::MatrixXd features;
  FusionContext ctx;

  explicit Fixture(Index n = 40) : cube(n, 2, 1), targets(n, 1), features(n, 1) {
    for (Index i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) / static_cast<double>(n);
      features(i, 0) = x;
      targets(i, 0) = std::sin(6 * x);
      cube(i, 0, 0) = targets(i, 0);
      cube(i, 1, 0) = targets(i, 0) + 1.0 + x;
    }
    const Scorer s = Scorer::squared_error();
    const LocalMemory memory = fit_local(features, member_errors(cube, targets, s), 1, 5);
    ctx = make_fusion_context(cube, targets, Task::Regression, features, memory, fit_global(cube, targets, s),
                              fit_time(cube, targets, s), SoftGateConfig{});
  }

  double averaging_loss() const {
    double loss = 0.0;
    for (Index i = 0; i < cube.samples(); ++i) {
      const double avg = 0.5 * (cube(i, 0, 0) + cube(i, 1, 0));
      loss += (avg - targets(i, 0)) * (avg - targets(i, 0));
    }
    return loss;
  }
};

}  // namespace

TEST_CASE("config validation") {
  ObjectiveConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.grid_resolution = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.tolerance = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.c_reg = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("an exact member with a sharp global gate zeroes the data term") {
  const Fixture f;
  ObjectiveConfig cfg;
  cfg.c_reg = 0;
  const ObjectiveValue v = objective({12.0, 0.0, 0.0}, f.ctx, cfg);
  CHECK(v.data <= 1e-12);
  CHECK(v.penalty == 0.0);
}

TEST_CASE("all-zero exponents reproduce plain averaging") {
  const Fixture f;
  ObjectiveConfig cfg;
  cfg.c_reg = 0;
  CHECK(objective({0, 0, 0}, f.ctx, cfg).data == doctest::Approx(f.averaging_loss()).epsilon(1e-12));
}

TEST_CASE("regularizer") {
  ObjectiveConfig cfg;
  cfg.c_reg = 1.0;
  CHECK(regularizer({4, 4, 4}, cfg) == doctest::Approx(3 * eta_penalty(4.0)).epsilon(1e-12));
  CHECK(regularizer({4, 4, 4}, cfg) == doctest::Approx(0.321).epsilon(1e-3));
  cfg.use_penalty_heuristic = false;
  cfg.c_reg = 0.5;
  CHECK(regularizer({1, 2, 3}, cfg) == 3.0);
}

TEST_CASE("exponents outside the box are rejected") {
  const Fixture f;
  CHECK_THROWS_AS(objective({-0.1, 0, 0}, f.ctx, {}), Error);
  CHECK_THROWS_AS(objective({0, 12.5, 0}, f.ctx, {}), Error);
}

TEST_CASE("fusion of member outputs") {
  Eigen::MatrixXd outs(1, 2);
  outs << 1.0, 3.0;
  CHECK(fuse_outputs(outs, Eigen::Vector2d(0.75, 0.25), Task::Regression)[0] == 1.5);
  Eigen::MatrixXd probs(2, 2);
  probs << 0.8, 0.2,  //
      0.2, 0.8;
  const Eigen::VectorXd p = fuse_outputs(probs, Eigen::Vector2d(0.5, 0.5), Task::Classification);
  CHECK(p.sum() == doctest::Approx(1.0));
  CHECK(p[0] == doctest::Approx(0.5));
}

TEST_CASE("minimize on a smooth bowl") {
  ObjectiveConfig cfg;
  const auto f = [](const EtaVector& e) {
    return (e.global - 2.2) * (e.global - 2.2) + 2 * (e.local - 7.1) * (e.local - 7.1) +
           0.5 * (e.time - 9.4) * (e.time - 9.4);
  };
  const MinimizeResult r = minimize(cfg, f);
  CHECK(r.eta.global == doctest::Approx(2.2).epsilon(1e-2));
  CHECK(r.eta.local == doctest::Approx(7.1).epsilon(1e-2));
  CHECK(r.eta.time == doctest::Approx(9.4).epsilon(1e-2));
  CHECK(r.value == f(r.eta));
}

TEST_CASE("minimize respects the box when the optimum lies outside") {
  ObjectiveConfig cfg;
  const auto f = [](const EtaVector& e) { return -e.global + (e.local + 3) * (e.local + 3) + e.time; };
  const MinimizeResult r = minimize(cfg, f);
  CHECK(r.eta.global == 12.0);
  CHECK(r.eta.local == 0.0);
  CHECK(r.eta.time == 0.0);
  for (const auto& entry : r.trace)
    for (double v : entry.eta.as_array()) {
      CHECK(v >= 0.0);
      CHECK(v <= 12.0);
    }
}

TEST_CASE("trace properties on a fusion objective") {
  const Fixture f;
  ObjectiveConfig cfg;
  const MinimizeResult r = minimize(cfg, f.ctx);
  REQUIRE(r.trace.size() >= 125);
  CHECK(std::abs(r.value - objective(r.eta, f.ctx, cfg).total()) <= 1e-12);
  double prev = r.trace.front().best_so_far;
  Index grid = 0;
  for (const auto& e : r.trace) {
    CHECK(e.best_so_far <= prev);
    prev = e.best_so_far;
    if (e.phase == "grid") {
      ++grid;
      CHECK(r.value <= e.value);
    }
  }
  CHECK(grid == 125);
  CHECK(r.trace.back().best_so_far == r.value);
}

TEST_CASE("minimize is deterministic") {
  const Fixture f;
  const MinimizeResult a = minimize(ObjectiveConfig{}, f.ctx);
  const MinimizeResult b = minimize(ObjectiveConfig{}, f.ctx);
  CHECK(a.eta == b.eta);
  CHECK(a.value == b.value);
  CHECK(a.trace.size() == b.trace.size());
}

TEST_CASE("with no regularization the fit beats averaging") {
  const Fixture f;
  ObjectiveConfig cfg;
  cfg.c_reg = 0;
  const MinimizeResult r = minimize(cfg, f.ctx);
  CHECK(objective(r.eta, f.ctx, cfg).data <= f.averaging_loss());
  CHECK(r.value <= 1e-6);
}

TEST_CASE("aspects without signal settle at the penalty minimum and stay uniform") {
  Fixture f;
  // identical local evidence for both members; T = 1 makes time neutral too
  f.ctx.local_q.setConstant(0.3);
  ObjectiveConfig cfg;
  const MinimizeResult r = minimize(cfg, f.ctx);
  CHECK(r.eta.local >= 1.0);
  CHECK(r.eta.local <= 6.0);
  CHECK(r.eta.time >= 1.0);
  CHECK(r.eta.time <= 6.0);
  const Eigen::VectorXd wl = local_weights(f.ctx.local_q.row(0).transpose(), r.eta.local);
  const Eigen::VectorXd wt = time_weights(f.ctx.time, 0, r.eta.time);
  CHECK(std::abs(wl[0] - 0.5) <= 1e-6);
  CHECK(std::abs(wt[0] - 0.5) <= 1e-6);
}

TEST_CASE("leave-one-out local errors skip the sample itself") {
  const Fixture f;
  const Scorer s = Scorer::squared_error();
  const LocalMemory memory = fit_local(f.features, member_errors(f.cube, f.targets, s), 1, 1);
  const FusionContext loo = make_fusion_context(f.cube, f.targets, Task::Regression, f.features, memory,
                                                fit_global(f.cube, f.targets, s), fit_time(f.cube, f.targets, s), {});
  const FusionContext self = make_fusion_context(f.cube, f.targets, Task::Regression, f.features, memory,
                                                 fit_global(f.cube, f.targets, s), fit_time(f.cube, f.targets, s), {},
                                                 false);
  for (Index n = 0; n < f.cube.samples(); ++n) {
    CHECK(self.local_q(n, 1) == memory.training_errors(n, 1));
    CHECK(loo.local_q(n, 1) != memory.training_errors(n, 1));
  }
}
