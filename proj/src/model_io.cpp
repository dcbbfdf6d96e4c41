#include "csge/model_io.hpp"

#include <fstream>

namespace csge {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) rows.push_back(vec_to_json(m.row(r).transpose()));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Eigen::VectorXd vec_from_json(const json& a) {
  Eigen::VectorXd v(static_cast<Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Index>(i)] = a[i].get<double>();
  return v;
}

Eigen::MatrixXd mat_from_json(const json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const json& data = j.at("data");
  if (static_cast<Index>(data.size()) != rows) throw Error(ErrorKind::ParseError, "matrix row count mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const json& row = data[static_cast<std::size_t>(r)];
    if (static_cast<Index>(row.size()) != cols) throw Error(ErrorKind::ParseError, "matrix column count mismatch");
    for (Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

json config_to_json(const EnsembleConfig& c) {
  return json{
      {"scorer", c.scorer.name()},
      {"objective",
       {{"c_reg", c.objective.c_reg},
        {"use_penalty_heuristic", c.objective.use_penalty_heuristic},
        {"eta_max", c.objective.eta_max},
        {"grid_resolution", c.objective.grid_resolution},
        {"max_refine_iters", c.objective.max_refine_iters},
        {"tolerance", c.objective.tolerance}}},
      {"weighting", {{"n_dim", c.weighting.n_dim}, {"k_neighbors", c.weighting.k_neighbors}}},
      {"epsilon", c.epsilon},
      {"protocol", c.protocol == TrainingProtocol::KFold ? "kfold" : "holdout"},
      {"folds", c.folds},
      {"holdout_fraction", c.holdout_fraction},
      {"seed", c.seed},
      {"leave_one_out_local", c.leave_one_out_local},
      {"c_reg_grid", c.c_reg_grid},
      {"k_neighbors_grid", c.k_neighbors_grid},
  };
}

EnsembleConfig config_from_json(const json& j) {
  EnsembleConfig c;
  c.scorer = Scorer::from_name(j.at("scorer").get<std::string>());
  const json& o = j.at("objective");
  c.objective.c_reg = o.at("c_reg").get<double>();
  c.objective.use_penalty_heuristic = o.at("use_penalty_heuristic").get<bool>();
  c.objective.eta_max = o.at("eta_max").get<double>();
  c.objective.grid_resolution = o.at("grid_resolution").get<Index>();
  c.objective.max_refine_iters = o.at("max_refine_iters").get<Index>();
  c.objective.tolerance = o.at("tolerance").get<double>();
  c.weighting.n_dim = j.at("weighting").at("n_dim").get<Index>();
  c.weighting.k_neighbors = j.at("weighting").at("k_neighbors").get<Index>();
  c.epsilon = j.at("epsilon").get<double>();
  c.protocol = j.at("protocol").get<std::string>() == "holdout" ? TrainingProtocol::Holdout : TrainingProtocol::KFold;
  c.folds = j.at("folds").get<Index>();
  c.holdout_fraction = j.at("holdout_fraction").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.leave_one_out_local = j.at("leave_one_out_local").get<bool>();
  c.c_reg_grid = j.at("c_reg_grid").get<std::vector<double>>();
  c.k_neighbors_grid = j.at("k_neighbors_grid").get<std::vector<Index>>();
  return c;
}

json horizon_model_to_json(const HorizonModel& m) {
  return std::visit(
      [](const auto& model) -> json {
        using M = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<M, LinearModel>) {
          return json{{"type", "linear"}, {"coefficients", vec_to_json(model.coefficients)}, {"intercept", model.intercept}};
        } else if constexpr (std::is_same_v<M, KnnModel>) {
          return json{{"type", "knn"},
                      {"features", mat_to_json(model.features)},
                      {"targets", vec_to_json(model.targets)},
                      {"k", model.k},
                      {"n_classes", model.n_classes}};
        } else {
          json nodes = json::array();
          for (const TreeNode& n : model.nodes) {
            nodes.push_back(json{{"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"left", n.left},
                                 {"right", n.right},
                                 {"value", vec_to_json(n.value)}});
          }
          return json{{"type", "tree"}, {"nodes", nodes}};
        }
      },
      m);
}

HorizonModel horizon_model_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "linear") {
    LinearModel m;
    m.coefficients = vec_from_json(j.at("coefficients"));
    m.intercept = j.at("intercept").get<double>();
    return m;
  }
  if (type == "knn") {
    KnnModel m;
    m.features = mat_from_json(j.at("features"));
    m.targets = vec_from_json(j.at("targets"));
    m.k = j.at("k").get<Index>();
    m.n_classes = j.at("n_classes").get<Index>();
    return m;
  }
  if (type == "tree") {
    TreeModel m;
    for (const json& n : j.at("nodes")) {
      m.nodes.push_back(TreeNode{n.at("feature").get<Index>(), n.at("threshold").get<double>(), n.at("left").get<Index>(),
                                 n.at("right").get<Index>(), vec_from_json(n.at("value"))});
    }
    return m;
  }
  throw Error(ErrorKind::ParseError, "unknown member model type '" + type + "'");
}

}  // namespace

json estimator_to_json(const FittedEstimator& est) {
  const EstimatorSpec& s = est.spec();
  json models = json::array();
  for (const auto& m : est.models()) models.push_back(horizon_model_to_json(m));
  return json{{"name", s.name},
              {"kind", to_string(s.kind)},
              {"hyper_params", s.hyper_params},
              {"expression", s.expression},
              {"seed", s.seed},
              {"n_features", est.n_features()},
              {"outputs", est.outputs()},
              {"models", models}};
}

FittedEstimator estimator_from_json(const json& doc) {
  EstimatorSpec s;
  s.name = doc.at("name").get<std::string>();
  s.kind = estimator_kind_from_string(doc.at("kind").get<std::string>());
  s.hyper_params = doc.at("hyper_params").get<std::map<std::string, double>>();
  s.expression = doc.at("expression").get<std::string>();
  s.seed = doc.at("seed").get<std::uint64_t>();
  std::vector<HorizonModel> models;
  for (const json& m : doc.at("models")) models.push_back(horizon_model_from_json(m));
  return FittedEstimator(s, doc.at("n_features").get<Index>(), doc.at("outputs").get<Index>(), std::move(models));
}

json model_to_json(const CsgeModel& model) {
  if (model.scorer.kind == ScorerKind::UserSupplied) {
    throw Error(ErrorKind::Usage, "models with a user-supplied scorer cannot be serialized");
  }
  json members = json::array();
  for (const auto& m : model.members) members.push_back(estimator_to_json(m));
  const LocalMemory& mem = model.local_memory;
  return json{
      {"format", kModelFormat},
      {"task", model.task == Task::Classification ? "classification" : "regression"},
      {"n_classes", model.n_classes},
      {"n_features", model.n_features},
      {"feature_names", model.feature_names},
      {"member_ids", model.member_ids},
      {"eta", {{"global", model.eta.global}, {"local", model.eta.local}, {"time", model.eta.time}}},
      {"objective_value", model.objective_value},
      {"global_scores", vec_to_json(model.global_scores.R)},
      {"time_scores", {{"R_t", mat_to_json(model.time_scores.R_t)}, {"r_t", mat_to_json(model.time_scores.r_t)}}},
      {"local_memory",
       {{"basis", mat_to_json(mem.pca.basis)},
        {"means", vec_to_json(mem.pca.means.transpose())},
        {"scales", vec_to_json(mem.pca.scales.transpose())},
        {"eigenvalues", vec_to_json(mem.pca.eigenvalues)},
        {"projected_training", mat_to_json(mem.projected_training)},
        {"training_errors", mat_to_json(mem.training_errors)},
        {"k_neighbors", mem.k_neighbors}}},
      {"members", members},
      {"config", config_to_json(model.config)},
  };
}

CsgeModel model_from_json(const json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kModelFormat) {
      throw Error(ErrorKind::ParseError, "unsupported model format '" + doc.at("format").get<std::string>() + "'");
    }
    CsgeModel m;
    m.task = doc.at("task").get<std::string>() == "classification" ? Task::Classification : Task::Regression;
    m.n_classes = doc.at("n_classes").get<Index>();
    m.n_features = doc.at("n_features").get<Index>();
    m.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    m.member_ids = doc.at("member_ids").get<std::vector<std::string>>();
    m.eta = {doc.at("eta").at("global").get<double>(), doc.at("eta").at("local").get<double>(),
             doc.at("eta").at("time").get<double>()};
    m.objective_value = doc.at("objective_value").get<double>();
    m.global_scores.R = vec_from_json(doc.at("global_scores"));
    m.time_scores.R_t = mat_from_json(doc.at("time_scores").at("R_t"));
    m.time_scores.r_t = mat_from_json(doc.at("time_scores").at("r_t"));
    const json& mem = doc.at("local_memory");
    m.local_memory.pca.basis = mat_from_json(mem.at("basis"));
    m.local_memory.pca.means = vec_from_json(mem.at("means")).transpose();
    m.local_memory.pca.scales = vec_from_json(mem.at("scales")).transpose();
    m.local_memory.pca.eigenvalues = vec_from_json(mem.at("eigenvalues"));
    m.local_memory.projected_training = mat_from_json(mem.at("projected_training"));
    m.local_memory.training_errors = mat_from_json(mem.at("training_errors"));
    m.local_memory.k_neighbors = mem.at("k_neighbors").get<Index>();
    for (const json& e : doc.at("members")) m.members.push_back(estimator_from_json(e));
    m.config = config_from_json(doc.at("config"));
    m.scorer = m.config.scorer;

    const auto j = static_cast<Index>(m.member_ids.size());
    if (static_cast<Index>(m.members.size()) != j || m.global_scores.R.size() != j ||
        m.time_scores.r_t.cols() != j || m.local_memory.training_errors.cols() != j ||
        m.local_memory.projected_training.rows() != m.local_memory.training_errors.rows()) {
      throw Error(ErrorKind::ShapeMismatch, "model document components disagree on member count");
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("model document: ") + e.what());
  }
}

void save_model(const CsgeModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << model_to_json(model).dump(1) << '\n';
}

CsgeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open model '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace csge
