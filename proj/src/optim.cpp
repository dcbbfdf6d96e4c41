#include "csge/optim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace csge {

void ObjectiveConfig::validate() const {
  if (!(c_reg >= 0)) throw Error(ErrorKind::InvalidHyperParams, "c_reg must be >= 0");
  if (!(eta_max > 0)) throw Error(ErrorKind::InvalidHyperParams, "eta_max must be > 0");
  if (grid_resolution < 2) throw Error(ErrorKind::InvalidHyperParams, "grid_resolution must be >= 2");
  if (max_refine_iters < 1) throw Error(ErrorKind::InvalidHyperParams, "max_refine_iters must be >= 1");
  if (!(tolerance > 0)) throw Error(ErrorKind::InvalidHyperParams, "tolerance must be > 0");
}

FusionContext make_fusion_context(const PredictionCube& cube, const Eigen::MatrixXd& targets, Task task,
                                  const Eigen::MatrixXd& features, const LocalMemory& memory, GlobalScores global,
                                  TimeScores time, SoftGateConfig gate, bool leave_one_out) {
  if (features.rows() != cube.samples() || targets.rows() != cube.samples() || targets.cols() != cube.horizon()) {
    throw Error(ErrorKind::ShapeMismatch, "fusion context inputs are not aligned");
  }
  FusionContext ctx;
  ctx.cube = &cube;
  ctx.targets = targets;
  ctx.task = task;
  ctx.global = std::move(global);
  ctx.time = std::move(time);
  ctx.gate = gate;
  ctx.local_q.resize(cube.samples(), cube.members());
  const bool loo = leave_one_out && memory.rows() > 1;
  for (Index n = 0; n < cube.samples(); ++n) {
    ctx.local_q.row(n) = local_errors(memory, features.row(n), loo ? n : -1).transpose();
  }
  return ctx;
}

Eigen::VectorXd fuse_outputs(const Eigen::MatrixXd& member_outputs, const Eigen::VectorXd& w_final, Task task) {
  const Index d = member_outputs.rows();
  Eigen::VectorXd fused(d);
  for (Index c = 0; c < d; ++c) fused[c] = order_independent_sum(member_outputs.row(c).transpose().cwiseProduct(w_final));
  if (task == Task::Regression) {
    // a convex combination; clamp away rounding past the member range
    for (Index c = 0; c < d; ++c)
      fused[c] = std::clamp(fused[c], member_outputs.row(c).minCoeff(), member_outputs.row(c).maxCoeff());
  } else {
    const double s = fused.sum();
    if (s > 0) fused /= s;
  }
  return fused;
}

double regularizer(const EtaVector& eta, const ObjectiveConfig& cfg) {
  double p = 0.0;
  for (double e : eta.as_array()) p += cfg.use_penalty_heuristic ? eta_penalty(e) : e;
  return cfg.c_reg * p;
}

ObjectiveValue objective(const EtaVector& eta, const FusionContext& ctx, const ObjectiveConfig& cfg) {
  SoftGateConfig gate = ctx.gate;
  gate.eta_max = cfg.eta_max;
  for (double e : eta.as_array()) {
    if (!(e >= 0) || e > cfg.eta_max) throw Error(ErrorKind::EtaOutOfRange, "eta outside [0, eta_max]");
  }

  const PredictionCube& cube = *ctx.cube;
  const Index members = cube.members();
  const Index outputs = cube.outputs();
  const Eigen::VectorXd wg = global_weights(ctx.global, eta.global, gate);
  std::vector<Eigen::VectorXd> wt;
  for (Index t = 0; t < cube.horizon(); ++t) wt.push_back(time_weights(ctx.time, t, eta.time, gate));

  ObjectiveValue v;
  Eigen::MatrixXd member_out(outputs, members);
  for (Index n = 0; n < cube.samples(); ++n) {
    const Eigen::VectorXd wl = local_weights(ctx.local_q.row(n).transpose(), eta.local, gate);
    for (Index t = 0; t < cube.horizon(); ++t) {
      const WeightBreakdown b = combine_weights(wg, wl, wt[static_cast<std::size_t>(t)]);
      for (Index j = 0; j < members; ++j) member_out.col(j) = cube.output(n, j, t);
      const Eigen::VectorXd fused = fuse_outputs(member_out, b.w_final, ctx.task);
      const double y = ctx.targets(n, t);
      if (ctx.task == Task::Regression) {
        v.data += (y - fused[0]) * (y - fused[0]);
      } else {
        Eigen::VectorXd onehot = Eigen::VectorXd::Zero(outputs);
        onehot[static_cast<Index>(y)] = 1.0;
        v.data += (fused - onehot).squaredNorm();
      }
    }
  }
  v.penalty = regularizer(eta, cfg);
  return v;
}

namespace {

using Point = std::array<double, 3>;

class BoundedSearch {
public:
  BoundedSearch(const ObjectiveConfig& cfg, const std::function<double(const EtaVector&)>& f) : cfg_(cfg), f_(f) {}

  double eval(Point p, const char* phase) {
    for (double& c : p) c = std::clamp(c, 0.0, cfg_.eta_max);
    const EtaVector eta = EtaVector::from_array(p);
    const double value = f_(eta);
    if (result_.trace.empty() || value < result_.value) {
      result_.value = value;
      result_.eta = eta;
    }
    result_.trace.push_back({eta, value, result_.value, phase});
    return value;
  }

  void grid() {
    const Index res = cfg_.grid_resolution;
    const double step = cfg_.eta_max / static_cast<double>(res - 1);
    for (Index a = 0; a < res; ++a)
      for (Index b = 0; b < res; ++b)
        for (Index c = 0; c < res; ++c)
          eval({static_cast<double>(a) * step, static_cast<double>(b) * step, static_cast<double>(c) * step}, "grid");
  }

  // Returns the number of iterations spent.
  Index simplex(const Point& start, double step, Index budget) {
    struct Vertex {
      Point x;
      double f;
    };
    auto clamp = [&](Point p) {
      for (double& c : p) c = std::clamp(c, 0.0, cfg_.eta_max);
      return p;
    };

    std::array<Vertex, 4> v;
    v[0] = {start, eval(start, "simplex")};
    for (int i = 0; i < 3; ++i) {
      Point p = start;
      p[static_cast<std::size_t>(i)] += (p[static_cast<std::size_t>(i)] + step <= cfg_.eta_max) ? step : -step;
      p = clamp(p);
      v[static_cast<std::size_t>(i + 1)] = {p, eval(p, "simplex")};
    }

    Index iter = 0;
    for (; iter < budget; ++iter) {
      std::stable_sort(v.begin(), v.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
      double diameter = 0.0;
      for (std::size_t i = 1; i < v.size(); ++i)
        for (std::size_t d = 0; d < 3; ++d) diameter = std::max(diameter, std::abs(v[i].x[d] - v[0].x[d]));
      if (v[3].f - v[0].f <= cfg_.tolerance * (1.0 + std::abs(v[0].f)) && diameter <= std::sqrt(cfg_.tolerance)) break;

      Point centroid{0, 0, 0};
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t d = 0; d < 3; ++d) centroid[d] += v[i].x[d] / 3.0;
      auto along = [&](double coeff) {
        Point p;
        for (std::size_t d = 0; d < 3; ++d) p[d] = centroid[d] + coeff * (v[3].x[d] - centroid[d]);
        return clamp(p);
      };

      const Point xr = along(-1.0);
      const double fr = eval(xr, "simplex");
      if (fr < v[0].f) {
        const Point xe = along(-2.0);
        const double fe = eval(xe, "simplex");
        v[3] = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
      } else if (fr < v[2].f) {
        v[3] = {xr, fr};
      } else {
        const bool outside = fr < v[3].f;
        const Point xc = along(outside ? -0.5 : 0.5);
        const double fc = eval(xc, "simplex");
        if (fc < std::min(fr, v[3].f)) {
          v[3] = {xc, fc};
        } else {
          for (std::size_t i = 1; i < v.size(); ++i) {
            Point p;
            for (std::size_t d = 0; d < 3; ++d) p[d] = v[0].x[d] + 0.5 * (v[i].x[d] - v[0].x[d]);
            v[i] = {p, eval(p, "simplex")};
          }
        }
      }
    }
    return iter + 1;
  }

  MinimizeResult take() { return std::move(result_); }
  const MinimizeResult& result() const { return result_; }

private:
  const ObjectiveConfig& cfg_;
  const std::function<double(const EtaVector&)>& f_;
  MinimizeResult result_;
};

}  // namespace

MinimizeResult minimize(const ObjectiveConfig& cfg, const std::function<double(const EtaVector&)>& f) {
  cfg.validate();
  BoundedSearch search(cfg, f);
  search.grid();

  const double grid_step = cfg.eta_max / static_cast<double>(cfg.grid_resolution - 1);
  double step = 0.5 * grid_step;
  Index budget = cfg.max_refine_iters;
  // Restart from the incumbent with a smaller simplex while budget remains and
  // the previous pass improved on it.
  while (budget > 0) {
    const double before = search.result().value;
    budget -= search.simplex(search.result().eta.as_array(), step, budget);
    if (!(search.result().value < before - cfg.tolerance * (1.0 + std::abs(before)))) break;
    step *= 0.5;
  }
  return search.take();
}

MinimizeResult minimize(const ObjectiveConfig& cfg, const FusionContext& ctx) {
  return minimize(cfg, std::function<double(const EtaVector&)>(
                           [&](const EtaVector& eta) { return objective(eta, ctx, cfg).total(); }));
}

}  // namespace csge
