#include "csge/config.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <set>

namespace csge {

using nlohmann::json;

namespace {

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw Error(ErrorKind::ParseError, where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw Error(ErrorKind::ParseError, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  const auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? fallback : it->get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::uint64_t parse_seed(const std::string& text) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw Error(ErrorKind::Usage, "CSGE_SEED is not an unsigned integer: '" + text + "'");
  return v;
}

}  // namespace

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  try {
    allow_keys(doc, "config", {"version", "task", "data", "members", "external_predictions", "training", "objective",
                               "weighting", "tuning", "scorer", "seed", "output", "eval"});
    const std::string version = get_or<std::string>(doc, "version", kConfigVersion);
    if (version != kConfigVersion) throw Error(ErrorKind::ParseError, "unsupported config version '" + version + "'");

    RunConfig rc;
    const std::string task = get_or<std::string>(doc, "task", "regression");
    if (task == "regression") rc.task = Task::Regression;
    else if (task == "classification") rc.task = Task::Classification;
    else throw Error(ErrorKind::ParseError, "task must be regression or classification");

    if (!doc.contains("data")) throw Error(ErrorKind::ParseError, "config needs a data section");
    const json& data = doc.at("data");
    allow_keys(data, "data", {"path", "target", "lead_time", "features", "n_classes"});
    rc.data_path = resolve(base_dir, data.at("path").get<std::string>());
    rc.schema.target = get_or<std::string>(data, "target", "target");
    rc.schema.lead_time = get_or<std::string>(data, "lead_time", "");
    rc.schema.features = get_or<std::vector<std::string>>(data, "features", {});
    rc.schema.n_classes = get_or<Index>(data, "n_classes", 0);
    rc.schema.task = rc.task;

    rc.external_predictions = resolve(base_dir, get_or<std::string>(doc, "external_predictions", ""));
    if (doc.contains("members")) {
      for (const json& m : doc.at("members")) {
        allow_keys(m, "member", {"name", "kind", "params", "expression", "seed"});
        EstimatorSpec s;
        s.kind = estimator_kind_from_string(m.at("kind").get<std::string>());
        s.name = get_or<std::string>(m, "name", to_string(s.kind));
        s.hyper_params = get_or<std::map<std::string, double>>(m, "params", {});
        s.expression = get_or<std::string>(m, "expression", "");
        s.seed = get_or<std::uint64_t>(m, "seed", 0);
        s.validate(rc.task);
        rc.members.push_back(std::move(s));
      }
    }
    if (rc.members.empty() && rc.external_predictions.empty()) {
      throw Error(ErrorKind::ParseError, "config needs members or external_predictions");
    }

    EnsembleConfig& e = rc.ensemble;
    e.scorer = Scorer::from_name(
        get_or<std::string>(doc, "scorer", rc.task == Task::Classification ? "zero_one_error" : "squared_error"));
    e.seed = get_or<std::uint64_t>(doc, "seed", 0);
    if (doc.contains("training")) {
      const json& t = doc.at("training");
      allow_keys(t, "training", {"protocol", "folds", "holdout_fraction", "leave_one_out_local"});
      const std::string protocol = get_or<std::string>(t, "protocol", "kfold");
      if (protocol == "kfold") e.protocol = TrainingProtocol::KFold;
      else if (protocol == "holdout") e.protocol = TrainingProtocol::Holdout;
      else throw Error(ErrorKind::ParseError, "training.protocol must be kfold or holdout");
      e.folds = get_or<Index>(t, "folds", e.folds);
      e.holdout_fraction = get_or<double>(t, "holdout_fraction", e.holdout_fraction);
      e.leave_one_out_local = get_or<bool>(t, "leave_one_out_local", e.leave_one_out_local);
    }
    if (doc.contains("objective")) {
      const json& o = doc.at("objective");
      allow_keys(o, "objective",
                 {"c_reg", "use_penalty_heuristic", "eta_max", "grid_resolution", "max_refine_iters", "tolerance"});
      e.objective.c_reg = get_or<double>(o, "c_reg", e.objective.c_reg);
      e.objective.use_penalty_heuristic = get_or<bool>(o, "use_penalty_heuristic", e.objective.use_penalty_heuristic);
      e.objective.eta_max = get_or<double>(o, "eta_max", e.objective.eta_max);
      e.objective.grid_resolution = get_or<Index>(o, "grid_resolution", e.objective.grid_resolution);
      e.objective.max_refine_iters = get_or<Index>(o, "max_refine_iters", e.objective.max_refine_iters);
      e.objective.tolerance = get_or<double>(o, "tolerance", e.objective.tolerance);
    }
    e.objective.validate();
    if (doc.contains("weighting")) {
      const json& w = doc.at("weighting");
      allow_keys(w, "weighting", {"n_dim", "k_neighbors", "epsilon"});
      e.weighting.n_dim = get_or<Index>(w, "n_dim", 0);
      e.weighting.k_neighbors = get_or<Index>(w, "k_neighbors", 0);
      e.epsilon = get_or<double>(w, "epsilon", e.epsilon);
    }
    e.gate().validate();
    if (doc.contains("tuning")) {
      const json& t = doc.at("tuning");
      allow_keys(t, "tuning", {"c_reg", "k_neighbors"});
      e.c_reg_grid = get_or<std::vector<double>>(t, "c_reg", {});
      e.k_neighbors_grid = get_or<std::vector<Index>>(t, "k_neighbors", {});
    }
    if (doc.contains("output")) {
      const json& o = doc.at("output");
      allow_keys(o, "output", {"model"});
      rc.model_path = resolve(base_dir, get_or<std::string>(o, "model", "model.json"));
    } else {
      rc.model_path = resolve(base_dir, "model.json");
    }
    if (doc.contains("eval")) {
      const json& ev = doc.at("eval");
      allow_keys(ev, "eval", {"folds", "seeds", "repetitions", "report"});
      rc.eval_folds = get_or<Index>(ev, "folds", 10);
      rc.eval_seeds = get_or<std::vector<std::uint64_t>>(ev, "seeds", {});
      if (rc.eval_seeds.empty()) {
        const auto reps = get_or<std::uint64_t>(ev, "repetitions", 10);
        for (std::uint64_t s = 0; s < reps; ++s) rc.eval_seeds.push_back(e.seed + s);
      }
      rc.eval_report = resolve(base_dir, get_or<std::string>(ev, "report", "report"));
    } else {
      for (std::uint64_t s = 0; s < 10; ++s) rc.eval_seeds.push_back(e.seed + s);
      rc.eval_report = resolve(base_dir, "report");
    }
    return rc;
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::ParseError, std::string("config: ") + ex.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Usage, "cannot open config '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + ex.what());
  }
  RunConfig rc = parse_run_config(doc, path.parent_path());
  if (const char* env = std::getenv("CSGE_SEED"); env != nullptr && *env != '\0') {
    const std::uint64_t seed = parse_seed(env);
    const std::uint64_t shift = seed - rc.ensemble.seed;
    rc.ensemble.seed = seed;
    for (auto& s : rc.eval_seeds) s += shift;
  }
  return rc;
}

}  // namespace csge
