#include "csge/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace csge {

std::vector<Index> shuffled_indices(Index n, std::uint64_t seed) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

FoldPlan FoldPlan::make(Index n, Index k, std::uint64_t seed, const Eigen::VectorXd* labels) {
  if (k < 2) throw Error(ErrorKind::InvalidHyperParams, "fold count must be >= 2");
  if (n < k) throw Error(ErrorKind::FoldTooSmall, "cannot split " + std::to_string(n) + " rows into " + std::to_string(k) + " folds");
  FoldPlan plan;
  plan.K = k;
  plan.seed = seed;
  plan.assignments.assign(static_cast<std::size_t>(n), 0);
  const std::vector<Index> order = shuffled_indices(n, seed);

  if (labels == nullptr) {
    for (Index p = 0; p < n; ++p) plan.assignments[static_cast<std::size_t>(order[static_cast<std::size_t>(p)])] = p * k / n;
  } else {
    if (labels->size() != n) throw Error(ErrorKind::ShapeMismatch, "label count differs from row count");
    std::map<double, std::vector<Index>> by_class;
    for (Index r : order) by_class[(*labels)[r]].push_back(r);
    Index next = 0;
    for (const auto& [label, rows] : by_class) {
      for (Index r : rows) {
        plan.assignments[static_cast<std::size_t>(r)] = next;
        next = (next + 1) % k;
      }
    }
  }
  plan.validate(n);
  return plan;
}

void FoldPlan::validate(Index n) const {
  if (static_cast<Index>(assignments.size()) != n) throw Error(ErrorKind::ShapeMismatch, "fold plan size differs from N");
  std::vector<Index> count(static_cast<std::size_t>(K), 0);
  for (Index a : assignments) {
    if (a < 0 || a >= K) throw Error(ErrorKind::ShapeMismatch, "fold index out of range");
    ++count[static_cast<std::size_t>(a)];
  }
  for (Index c : count)
    if (c == 0) throw Error(ErrorKind::FoldTooSmall, "empty fold in plan");
}

std::vector<Index> FoldPlan::train_rows(Index fold) const {
  std::vector<Index> out;
  for (std::size_t r = 0; r < assignments.size(); ++r)
    if (assignments[r] != fold) out.push_back(static_cast<Index>(r));
  return out;
}

std::vector<Index> FoldPlan::test_rows(Index fold) const {
  std::vector<Index> out;
  for (std::size_t r = 0; r < assignments.size(); ++r)
    if (assignments[r] == fold) out.push_back(static_cast<Index>(r));
  return out;
}

bool CsgeModel::has_external_members() const {
  return std::any_of(members.begin(), members.end(),
                     [](const FittedEstimator& m) { return m.spec().kind == EstimatorKind::External; });
}

namespace {

Index output_count(const Dataset& data) { return data.task == Task::Classification ? data.n_classes : 1; }

void check_specs(const std::vector<EstimatorSpec>& specs, const Dataset& data) {
  if (specs.size() < 2) throw Error(ErrorKind::InvalidHyperParams, "an ensemble needs at least two members");
  for (const auto& s : specs) {
    s.validate(data.task);
    if (s.kind == EstimatorKind::External) {
      throw Error(ErrorKind::InvalidHyperParams, "external member '" + s.name + "' needs imported predictions");
    }
  }
}

void fill_predictions(PredictionCube& cube, Index member, const FittedEstimator& est, const Dataset& data,
                      std::span<const Index> rows, std::span<const Index> cube_rows) {
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Index t = 0; t < cube.horizon(); ++t)
      cube.output(cube_rows[i], member, t) = est.predict(data.features.row(rows[i]), t);
}

struct FusionFit {
  GlobalScores global;
  LocalMemory memory;
  TimeScores time;
  EtaVector eta;
  double value = 0.0;
};

FusionFit fit_fusion(const PredictionCube& cube, const Dataset& data, const EnsembleConfig& cfg, double c_reg,
                     Index k_neighbors) {
  FusionFit f;
  f.global = fit_global(cube, data.targets, cfg.scorer);
  f.time = fit_time(cube, data.targets, cfg.scorer);
  const Index n_dim = cfg.weighting.resolved_n_dim(data.n_features());
  f.memory = fit_local(data.features, member_errors(cube, data.targets, cfg.scorer, 0), n_dim,
                       std::min(k_neighbors, data.rows()));

  ObjectiveConfig obj = cfg.objective;
  obj.c_reg = c_reg;
  const FusionContext ctx = make_fusion_context(cube, data.targets, data.task, data.features, f.memory, f.global,
                                                f.time, cfg.gate(), cfg.leave_one_out_local);
  const MinimizeResult best = minimize(obj, ctx);
  f.eta = best.eta;
  f.value = best.value;
  return f;
}

// Mean fused loss on held-out cube rows for one (c_reg, k) candidate.
double fusion_cv_loss(const PredictionCube& cube, const Dataset& data, const EnsembleConfig& cfg, double c_reg,
                      Index k_neighbors) {
  const Index folds = std::min<Index>(5, data.rows() / 2);
  const FoldPlan plan = FoldPlan::make(data.rows(), folds, cfg.seed + 0x9e3779b97f4a7c15ULL);
  double loss = 0.0;
  Index count = 0;
  for (Index k = 0; k < folds; ++k) {
    const auto train = plan.train_rows(k);
    const auto test = plan.test_rows(k);
    const PredictionCube sub = cube.select(train);
    const Dataset sub_data = data.subset(train);
    const FusionFit f = fit_fusion(sub, sub_data, cfg, c_reg, std::min<Index>(k_neighbors, sub_data.rows() - 1));
    const SoftGateConfig gate = cfg.gate();
    Eigen::MatrixXd outs(cube.outputs(), cube.members());
    for (Index r : test) {
      const Eigen::VectorXd wl = local_weights(local_errors(f.memory, data.features.row(r)), f.eta.local, gate);
      for (Index t = 0; t < cube.horizon(); ++t) {
        const WeightBreakdown b = combine_weights(global_weights(f.global, f.eta.global, gate), wl,
                                                  time_weights(f.time, t, f.eta.time, gate));
        for (Index j = 0; j < cube.members(); ++j) outs.col(j) = cube.output(r, j, t);
        const Eigen::VectorXd fused = fuse_outputs(outs, b.w_final, data.task);
        const double y = data.targets(r, t);
        if (data.task == Task::Regression) {
          loss += (fused[0] - y) * (fused[0] - y);
        } else {
          Eigen::VectorXd onehot = Eigen::VectorXd::Zero(fused.size());
          onehot[static_cast<Index>(y)] = 1.0;
          loss += (fused - onehot).squaredNorm();
        }
        ++count;
      }
    }
  }
  return loss / static_cast<double>(count);
}

void fit_fusion_layer(CsgeModel& model, const PredictionCube& cube, const Dataset& data, const EnsembleConfig& cfg) {
  cfg.objective.validate();
  cube.check_finite();
  if (cube.members() < 2) throw Error(ErrorKind::InvalidHyperParams, "an ensemble needs at least two members");
  if (cube.samples() != data.rows() || cube.horizon() != data.horizon() || cube.outputs() != output_count(data)) {
    throw Error(ErrorKind::ShapeMismatch, "prediction cube does not match the dataset");
  }
  if (data.rows() < 3) throw Error(ErrorKind::DegenerateData, "ensemble training needs at least three rows");

  double c_reg = cfg.objective.c_reg;
  Index k_neighbors = cfg.weighting.resolved_k_neighbors(data.rows());
  if (!cfg.c_reg_grid.empty() || !cfg.k_neighbors_grid.empty()) {
    const std::vector<double> cs = cfg.c_reg_grid.empty() ? std::vector<double>{c_reg} : cfg.c_reg_grid;
    const std::vector<Index> ks = cfg.k_neighbors_grid.empty() ? std::vector<Index>{k_neighbors} : cfg.k_neighbors_grid;
    double best = std::numeric_limits<double>::infinity();
    for (double c : cs) {
      for (Index k : ks) {
        const double loss = fusion_cv_loss(cube, data, cfg, c, k);
        if (loss < best) {
          best = loss;
          c_reg = c;
          k_neighbors = k;
        }
      }
    }
  }

  FusionFit f = fit_fusion(cube, data, cfg, c_reg, k_neighbors);
  model.global_scores = std::move(f.global);
  model.local_memory = std::move(f.memory);
  model.time_scores = std::move(f.time);
  model.eta = f.eta;
  model.objective_value = f.value;
  model.scorer = cfg.scorer;
  model.config = cfg;
  model.config.objective.c_reg = c_reg;
  model.config.weighting.k_neighbors = model.local_memory.k_neighbors;
  model.config.weighting.n_dim = model.local_memory.pca.n_dim();
  model.task = data.task;
  model.n_classes = data.n_classes;
  model.n_features = data.n_features();
  model.feature_names = data.feature_names;
}

}  // namespace

PredictionCube build_prediction_cube(const std::vector<EstimatorSpec>& specs, const Dataset& data, const FoldPlan& plan,
                                     const FoldObserver& observer) {
  validate_dataset(data);
  plan.validate(data.rows());
  for (const auto& s : specs) s.validate(data.task);

  PredictionCube cube(data.rows(), static_cast<Index>(specs.size()), data.horizon(), output_count(data));
  for (std::size_t j = 0; j < specs.size(); ++j) cube.member_ids[j] = specs[j].name;

  for (Index k = 0; k < plan.K; ++k) {
    const auto train = plan.train_rows(k);
    const auto test = plan.test_rows(k);
    const Dataset train_data = data.subset(train);
    for (std::size_t j = 0; j < specs.size(); ++j) {
      const Index needed = min_training_samples(specs[j]);
      if (static_cast<Index>(train.size()) < needed) {
        throw Error(ErrorKind::FoldTooSmall, specs[j].name + " needs " + std::to_string(needed) +
                                                 " training rows but fold " + std::to_string(k) + " leaves " +
                                                 std::to_string(train.size()));
      }
      if (observer) observer(k, static_cast<Index>(j), train, test);
      const FittedEstimator est = fit(specs[j], train_data);
      fill_predictions(cube, static_cast<Index>(j), est, data, test, test);
    }
  }
  cube.check_finite();
  return cube;
}

CsgeModel fit(const std::vector<EstimatorSpec>& specs, const Dataset& data, const EnsembleConfig& cfg) {
  validate_dataset(data);
  if (cfg.protocol == TrainingProtocol::KFold) {
    const Eigen::VectorXd labels = data.targets.col(0);
    const FoldPlan plan =
        FoldPlan::make(data.rows(), cfg.folds, cfg.seed, data.task == Task::Classification ? &labels : nullptr);
    return fit(specs, data, plan, cfg);
  }

  // Holdout: members see one part of the data, the fusion layer the other.
  check_specs(specs, data);
  if (!(cfg.holdout_fraction > 0 && cfg.holdout_fraction < 1)) {
    throw Error(ErrorKind::InvalidHyperParams, "holdout_fraction must lie in (0, 1)");
  }
  const std::vector<Index> order = shuffled_indices(data.rows(), cfg.seed);
  const auto n_fusion = static_cast<Index>(std::llround(cfg.holdout_fraction * static_cast<double>(data.rows())));
  if (n_fusion < 3 || data.rows() - n_fusion < 1) throw Error(ErrorKind::FoldTooSmall, "holdout split leaves too few rows");
  std::vector<Index> member_rows(order.begin(), order.end() - n_fusion);
  std::vector<Index> fusion_rows(order.end() - n_fusion, order.end());
  std::sort(member_rows.begin(), member_rows.end());
  std::sort(fusion_rows.begin(), fusion_rows.end());

  const Dataset member_data = data.subset(member_rows);
  const Dataset fusion_data = data.subset(fusion_rows);
  CsgeModel model;
  PredictionCube cube(n_fusion, static_cast<Index>(specs.size()), data.horizon(), output_count(data));
  std::vector<Index> cube_rows(fusion_rows.size());
  std::iota(cube_rows.begin(), cube_rows.end(), Index{0});
  for (std::size_t j = 0; j < specs.size(); ++j) {
    if (member_data.rows() < min_training_samples(specs[j])) {
      throw Error(ErrorKind::FoldTooSmall, specs[j].name + " has too few member-training rows");
    }
    model.members.push_back(fit(specs[j], member_data));
    model.member_ids.push_back(specs[j].name);
    cube.member_ids[j] = specs[j].name;
    fill_predictions(cube, static_cast<Index>(j), model.members.back(), data, fusion_rows, cube_rows);
  }
  fit_fusion_layer(model, cube, fusion_data, cfg);
  return model;
}

CsgeModel fit(const std::vector<EstimatorSpec>& specs, const Dataset& data, const FoldPlan& plan,
              const EnsembleConfig& cfg) {
  validate_dataset(data);
  check_specs(specs, data);
  const PredictionCube cube = build_prediction_cube(specs, data, plan);

  CsgeModel model;
  fit_fusion_layer(model, cube, data, cfg);
  for (const auto& s : specs) {
    model.members.push_back(fit(s, data));
    model.member_ids.push_back(s.name);
  }
  return model;
}

CsgeModel fit_from_cube(const PredictionCube& cube, const Dataset& data, const EnsembleConfig& cfg) {
  validate_dataset(data);
  CsgeModel model;
  fit_fusion_layer(model, cube, data, cfg);
  for (Index j = 0; j < cube.members(); ++j) {
    EstimatorSpec spec;
    spec.name = cube.member_ids[static_cast<std::size_t>(j)];
    spec.kind = EstimatorKind::External;
    model.members.push_back(fit(spec, data));
    model.member_ids.push_back(spec.name);
  }
  return model;
}

WeightBreakdown weights_at(const CsgeModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x, Index t) {
  if (t < 0 || t >= model.horizon()) {
    throw Error(ErrorKind::LeadTimeOutOfRange,
                "lead time " + std::to_string(t) + " outside [0, " + std::to_string(model.horizon()) + ")");
  }
  const SoftGateConfig gate = model.config.gate();
  return combine_weights(global_weights(model.global_scores, model.eta.global, gate),
                         local_weights(local_errors(model.local_memory, x), model.eta.local, gate),
                         time_weights(model.time_scores, t, model.eta.time, gate));
}

Prediction predict_with_outputs(const CsgeModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x, Index t,
                                const Eigen::MatrixXd& member_outputs) {
  if (member_outputs.cols() != model.size() || member_outputs.rows() != model.outputs()) {
    throw Error(ErrorKind::ShapeMismatch, "member outputs must be D x J");
  }
  if (!member_outputs.allFinite()) throw Error(ErrorKind::NonFiniteValue, "member output is not finite");
  Prediction p;
  p.weights = weights_at(model, x, t);
  p.member_outputs = member_outputs;
  p.value = fuse_outputs(member_outputs, p.weights.w_final, model.task);
  if (model.task == Task::Classification) p.label = argmax(p.value);
  return p;
}

Prediction predict(const CsgeModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x, Index t) {
  if (model.members.empty()) throw Error(ErrorKind::NotFitted, "model has no members");
  if (t < 0 || t >= model.horizon()) throw Error(ErrorKind::LeadTimeOutOfRange, "lead time " + std::to_string(t));
  Eigen::MatrixXd outs(model.outputs(), model.size());
  for (Index j = 0; j < model.size(); ++j) outs.col(j) = model.members[static_cast<std::size_t>(j)].predict(x, t);
  return predict_with_outputs(model, x, t, outs);
}

// ---- evaluation -------------------------------------------------------------

namespace {

void finalize(MetricRow& row) {
  const auto n = static_cast<double>(row.values.size());
  if (row.values.empty()) return;
  row.mean = std::accumulate(row.values.begin(), row.values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : row.values) ss += (v - row.mean) * (v - row.mean);
  row.stddev = row.values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  row.min = *std::min_element(row.values.begin(), row.values.end());
  row.max = *std::max_element(row.values.begin(), row.values.end());
}

// Raw accumulators: squared error sum (regression) or misclassification count.
struct RawScores {
  std::vector<double> members;
  double csge = 0.0;
  double averaging = 0.0;
  Index count = 0;
};

RawScores raw_scores(const CsgeModel& model, const Dataset& test) {
  RawScores s;
  s.members.assign(static_cast<std::size_t>(model.size()), 0.0);
  const bool cls = model.task == Task::Classification;
  auto loss = [&](const Eigen::VectorXd& out, double y) {
    if (cls) return argmax(out) == static_cast<Index>(y) ? 0.0 : 1.0;
    return (out[0] - y) * (out[0] - y);
  };
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(model.size(), 1.0 / static_cast<double>(model.size()));
  for (Index n = 0; n < test.rows(); ++n) {
    for (Index t = 0; t < test.horizon(); ++t) {
      const Prediction p = predict(model, test.features.row(n), t);
      const double y = test.targets(n, t);
      for (Index j = 0; j < model.size(); ++j) s.members[static_cast<std::size_t>(j)] += loss(p.member_outputs.col(j), y);
      s.csge += loss(p.value, y);
      s.averaging += loss(fuse_outputs(p.member_outputs, uniform, model.task), y);
      ++s.count;
    }
  }
  return s;
}

double to_metric(double raw, Index count, Task task) {
  const double mean = raw / static_cast<double>(count);
  return task == Task::Classification ? mean : std::sqrt(mean);
}

EvaluationReport make_report(const std::vector<std::string>& member_ids, Task task) {
  EvaluationReport r;
  r.metric = task == Task::Classification ? "error_rate" : "rmse";
  for (const auto& id : member_ids) r.rows.push_back({id, {}, 0, 0, 0, 0});
  r.rows.push_back({"csge", {}, 0, 0, 0, 0});
  r.rows.push_back({"averaging", {}, 0, 0, 0, 0});
  return r;
}

void append(EvaluationReport& r, const RawScores& s, Task task) {
  for (std::size_t j = 0; j < s.members.size(); ++j) r.rows[j].values.push_back(to_metric(s.members[j], s.count, task));
  r.rows[s.members.size()].values.push_back(to_metric(s.csge, s.count, task));
  r.rows[s.members.size() + 1].values.push_back(to_metric(s.averaging, s.count, task));
}

}  // namespace

const MetricRow& EvaluationReport::row(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  throw Error(ErrorKind::Usage, "no report row named '" + name + "'");
}

std::string EvaluationReport::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "name,metric,mean,std,min,max,repetitions\n";
  for (const auto& r : rows)
    os << r.name << ',' << metric << ',' << r.mean << ',' << r.stddev << ',' << r.min << ',' << r.max << ','
       << r.values.size() << '\n';
  return os.str();
}

std::string EvaluationReport::to_markdown() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "| " << metric << " |";
  for (const auto& r : rows) os << ' ' << r.name << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < rows.size(); ++i) os << "---|";
  os << '\n';
  const char* labels[] = {"Mean", "Standard Deviation", "Minimum", "Maximum"};
  for (int k = 0; k < 4; ++k) {
    os << "| " << labels[k] << " |";
    for (const auto& r : rows) {
      const double v = k == 0 ? r.mean : k == 1 ? r.stddev : k == 2 ? r.min : r.max;
      os << ' ' << v << " |";
    }
    os << '\n';
  }
  return os.str();
}

EvaluationReport evaluate(const CsgeModel& model, const Dataset& test) {
  validate_dataset(test);
  if (model.has_external_members()) throw Error(ErrorKind::NotFitted, "evaluate needs built-in members");
  EvaluationReport r = make_report(model.member_ids, model.task);
  append(r, raw_scores(model, test), model.task);
  for (auto& row : r.rows) finalize(row);
  return r;
}

EvaluationReport cross_validate(const std::vector<EstimatorSpec>& specs, const Dataset& data, const EnsembleConfig& cfg,
                                Index outer_folds, const std::vector<std::uint64_t>& seeds) {
  validate_dataset(data);
  check_specs(specs, data);
  std::vector<std::string> ids;
  for (const auto& s : specs) ids.push_back(s.name);
  EvaluationReport report = make_report(ids, data.task);

  struct Job {
    std::uint64_t seed;
    std::vector<Index> train, test;
  };
  std::vector<Job> jobs;
  const Eigen::VectorXd labels = data.targets.col(0);
  for (std::uint64_t seed : seeds) {
    const FoldPlan plan =
        FoldPlan::make(data.rows(), outer_folds, seed, data.task == Task::Classification ? &labels : nullptr);
    for (Index k = 0; k < outer_folds; ++k) jobs.push_back({seed, plan.train_rows(k), plan.test_rows(k)});
  }

  auto run = [&](const Job& job) {
    EnsembleConfig inner = cfg;
    inner.seed = job.seed;
    const CsgeModel model = fit(specs, data.subset(job.train), inner);
    return raw_scores(model, data.subset(job.test));
  };

  // Fan out in batches; results are merged in job order so output does not
  // depend on scheduling.
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<RawScores> results(jobs.size());
  for (std::size_t start = 0; start < jobs.size(); start += workers) {
    std::vector<std::future<RawScores>> batch;
    const std::size_t end = std::min(jobs.size(), start + workers);
    for (std::size_t i = start; i < end; ++i) batch.push_back(std::async(std::launch::async, run, std::cref(jobs[i])));
    for (std::size_t i = start; i < end; ++i) results[i] = batch[i - start].get();
  }
  for (const auto& s : results) append(report, s, data.task);
  for (auto& row : report.rows) finalize(row);
  return report;
}

}  // namespace csge
