#include "csge/synthetic.hpp"

#include "csge/io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace csge {

SyntheticKind synthetic_kind_from_string(const std::string& name) {
  if (name == "global") return SyntheticKind::Global;
  if (name == "local") return SyntheticKind::Local;
  if (name == "time") return SyntheticKind::Time;
  throw Error(ErrorKind::Usage, "unknown synthetic experiment '" + name + "' (global|local|time)");
}

const char* to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::Global: return "global";
    case SyntheticKind::Local: return "local";
    case SyntheticKind::Time: return "time";
  }
  return "unknown";
}

double synthetic_target(SyntheticKind kind, double x, Index t) {
  switch (kind) {
    case SyntheticKind::Global: return std::sin(x) + 4.0;
    case SyntheticKind::Local: return (x >= 10.0 && x <= 15.0) ? std::sin(x) + 10.0 : std::sin(x);
    case SyntheticKind::Time: return t < 3 ? std::sin(x) : std::sin(x) + 10.0;
  }
  return 0.0;
}

SyntheticProblem generate_synthetic(SyntheticKind which, Index n_samples, double x_min, double x_max,
                                    std::uint64_t seed) {
  if (n_samples < 50) throw Error(ErrorKind::InvalidHyperParams, "synthetic problems need at least 50 samples");
  if (!(x_max > x_min)) throw Error(ErrorKind::InvalidHyperParams, "empty x range");
  SyntheticProblem p;
  p.kind = which;
  p.seed = seed;
  const Index horizon = which == SyntheticKind::Time ? kSyntheticHorizon : 1;
  p.data.features = Eigen::VectorXd::LinSpaced(n_samples, x_min, x_max);
  p.data.targets.resize(n_samples, horizon);
  for (Index n = 0; n < n_samples; ++n)
    for (Index t = 0; t < horizon; ++t) p.data.targets(n, t) = synthetic_target(which, p.data.features(n, 0), t);
  p.data.has_lead_times = which == SyntheticKind::Time;
  p.data.feature_names = {"x"};
  p.data.target_name = "y";
  p.members = {EstimatorSpec::analytic("f1", "sin(x)"), EstimatorSpec::analytic("f2", "sin(x) + 10")};
  return p;
}

EnsembleConfig synthetic_config(std::uint64_t seed) {
  EnsembleConfig cfg;
  cfg.scorer = Scorer::absolute_error();
  cfg.weighting.k_neighbors = 5;
  cfg.seed = seed;
  return cfg;
}

SyntheticReport run_synthetic(SyntheticKind which, Index n_samples, std::uint64_t seed) {
  const SyntheticProblem problem = generate_synthetic(which, n_samples, 0.0, 20.0, seed);
  SyntheticReport r;
  r.kind = which;
  r.model = fit(problem.members, problem.data, synthetic_config(seed));
  r.eta = r.model.eta;

  const Index horizon = r.model.horizon();
  const Index n_test = n_samples - 1;
  const double step = 20.0 / static_cast<double>(n_samples - 1);
  r.test_x.resize(n_test);
  r.test_target.resize(n_test, horizon);
  r.test_prediction.resize(n_test, horizon);
  r.mean_final_weights = Eigen::VectorXd::Zero(r.model.size());
  r.time_weights.resize(horizon, r.model.size());
  r.max_abs_error_per_t = Eigen::VectorXd::Zero(horizon);

  double sq = 0.0;
  for (Index i = 0; i < n_test; ++i) {
    const double x = (static_cast<double>(i) + 0.5) * step;
    r.test_x[i] = x;
    const Eigen::RowVectorXd q = Eigen::RowVectorXd::Constant(1, x);
    const bool away = std::abs(x - 10.0) >= 0.5 && std::abs(x - 15.0) >= 0.5;
    for (Index t = 0; t < horizon; ++t) {
      const Prediction p = predict(r.model, q, t);
      const double y = synthetic_target(which, x, t);
      const double err = std::abs(p.scalar() - y);
      r.test_target(i, t) = y;
      r.test_prediction(i, t) = p.scalar();
      sq += err * err;
      r.max_abs_error = std::max(r.max_abs_error, err);
      r.max_abs_error_per_t[t] = std::max(r.max_abs_error_per_t[t], err);
      r.mean_final_weights += p.weights.w_final;
      if (i == 0) r.time_weights.row(t) = p.weights.w_time.transpose();
      if (which == SyntheticKind::Local && away) {
        r.max_abs_error_away = std::max(r.max_abs_error_away, err);
        const Index correct = (x >= 10.0 && x <= 15.0) ? 1 : 0;
        r.min_correct_local_weight = std::min(r.min_correct_local_weight, p.weights.w_local[correct]);
      }
    }
  }
  const auto count = static_cast<double>(n_test * horizon);
  r.rmse = std::sqrt(sq / count);
  r.mean_final_weights /= count;
  return r;
}

void write_synthetic_outputs(const SyntheticReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(dir / name);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + (dir / name).string() + "'");
    return out;
  };

  nlohmann::json doc;
  doc["experiment"] = to_string(r.kind);
  doc["eta"] = {{"global", r.eta.global}, {"local", r.eta.local}, {"time", r.eta.time}};
  doc["member_ids"] = r.model.member_ids;
  doc["mean_final_weights"] = std::vector<double>(r.mean_final_weights.data(),
                                                  r.mean_final_weights.data() + r.mean_final_weights.size());
  doc["global_weights"] = [&] {
    const Eigen::VectorXd w = global_weights(r.model.global_scores, r.eta.global, r.model.config.gate());
    return std::vector<double>(w.data(), w.data() + w.size());
  }();
  doc["global_scores"] = std::vector<double>(r.model.global_scores.R.data(),
                                             r.model.global_scores.R.data() + r.model.global_scores.R.size());
  nlohmann::json tw = nlohmann::json::array();
  for (Index t = 0; t < r.time_weights.rows(); ++t) {
    tw.push_back(std::vector<double>(r.time_weights.cols()));
    for (Index j = 0; j < r.time_weights.cols(); ++j) tw.back()[static_cast<std::size_t>(j)] = r.time_weights(t, j);
  }
  doc["time_weights"] = tw;
  doc["rmse"] = r.rmse;
  doc["max_abs_error"] = r.max_abs_error;
  doc["max_abs_error_per_t"] =
      std::vector<double>(r.max_abs_error_per_t.data(), r.max_abs_error_per_t.data() + r.max_abs_error_per_t.size());
  if (r.kind == SyntheticKind::Local) {
    doc["max_abs_error_away_from_breakpoints"] = r.max_abs_error_away;
    doc["min_correct_local_weight"] = r.min_correct_local_weight;
  }
  open("report.json") << doc.dump(2) << '\n';

  const Index horizon = r.test_target.cols();
  for (Index t = 0; t < horizon; ++t) {
    const std::string suffix = horizon > 1 ? "_t" + std::to_string(t) + ".xy" : ".xy";
    auto target = open("target" + suffix);
    auto fused = open("csge" + suffix);
    auto f1 = open("f1" + suffix);
    auto f2 = open("f2" + suffix);
    for (Index i = 0; i < r.test_x.size(); ++i) {
      const double x = r.test_x[i];
      const Eigen::RowVectorXd q = Eigen::RowVectorXd::Constant(1, x);
      target << format_double(x) << ' ' << format_double(r.test_target(i, t)) << '\n';
      fused << format_double(x) << ' ' << format_double(r.test_prediction(i, t)) << '\n';
      f1 << format_double(x) << ' ' << format_double(r.model.members[0].predict(q, t)[0]) << '\n';
      f2 << format_double(x) << ' ' << format_double(r.model.members[1].predict(q, t)[0]) << '\n';
    }
  }
}

}  // namespace csge
