#include "csge/cli.hpp"

#include "csge/config.hpp"
#include "csge/ensemble.hpp"
#include "csge/io.hpp"
#include "csge/model_io.hpp"
#include "csge/synthetic.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>

namespace csge {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  return out;
}

Dataset load_training_data(const RunConfig& rc) { return load_csv(rc.data_path, rc.schema); }

CsgeModel fit_from_config(const RunConfig& rc) {
  const Dataset data = load_training_data(rc);
  if (!rc.external_predictions.empty()) {
    const PredictionCube cube = import_external_predictions(rc.external_predictions);
    return fit_from_cube(cube, data, rc.ensemble);
  }
  return fit(rc.members, data, rc.ensemble);
}

// Query rows for predict/explain: features selected by the model's names.
Dataset load_queries(const CsgeModel& model, const std::filesystem::path& path, const std::string& lead_time) {
  CsvSchema schema;
  schema.features = model.feature_names;
  schema.lead_time = lead_time;
  schema.require_target = false;
  schema.target = "__no_target__";
  schema.task = Task::Regression;
  return load_csv(path, schema);
}

struct QueryResult {
  Index sample = 0;
  Index lead_time = 0;
  Prediction prediction;
};

std::vector<QueryResult> run_queries(const CsgeModel& model, const Dataset& queries,
                                     const std::filesystem::path& external) {
  std::optional<PredictionCube> cube;
  if (model.has_external_members()) {
    if (external.empty()) throw Error(ErrorKind::Usage, "model has external members; pass --predictions");
    cube = import_external_predictions(external, model.member_ids);
    if (cube->samples() != queries.rows() || cube->outputs() != model.outputs()) {
      throw Error(ErrorKind::ShapeMismatch, "external predictions do not match the query rows");
    }
  }
  const Index horizon = queries.has_lead_times ? queries.horizon() : model.horizon();
  if (horizon > model.horizon()) throw Error(ErrorKind::LeadTimeOutOfRange, "query lead times exceed the model horizon");
  std::vector<QueryResult> results;
  for (Index n = 0; n < queries.rows(); ++n) {
    for (Index t = 0; t < horizon; ++t) {
      QueryResult q{n, t, {}};
      if (cube) {
        if (t >= cube->horizon()) throw Error(ErrorKind::MissingCell, "external predictions lack lead time " + std::to_string(t));
        Eigen::MatrixXd outs(model.outputs(), model.size());
        for (Index j = 0; j < model.size(); ++j) outs.col(j) = cube->output(n, j, t);
        q.prediction = predict_with_outputs(model, queries.features.row(n), t, outs);
      } else {
        q.prediction = predict(model, queries.features.row(n), t);
      }
      results.push_back(std::move(q));
    }
  }
  return results;
}

std::string member_value(const CsgeModel& model, const Prediction& p, Index j) {
  if (model.task == Task::Classification) return std::to_string(argmax(p.member_outputs.col(j)));
  return format_double(p.member_outputs(0, j));
}

std::string fused_value(const CsgeModel& model, const Prediction& p) {
  if (model.task == Task::Classification) return std::to_string(p.label);
  return format_double(p.scalar());
}

int cmd_fit(const std::string& config_path, const std::string& out_path, std::ostream& out) {
  const RunConfig rc = load_run_config(config_path);
  const CsgeModel model = fit_from_config(rc);
  const std::filesystem::path target = out_path.empty() ? rc.model_path : std::filesystem::path(out_path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  save_model(model, target);
  out << "eta: global=" << model.eta.global << " local=" << model.eta.local << " time=" << model.eta.time << '\n';
  const Eigen::VectorXd wg = global_weights(model.global_scores, model.eta.global, model.config.gate());
  for (Index j = 0; j < model.size(); ++j) {
    out << "member " << model.member_ids[static_cast<std::size_t>(j)] << ": R=" << model.global_scores.R[j]
        << " w_global=" << wg[j] << '\n';
  }
  out << "model written to " << target.string() << '\n';
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, const std::string& lead_time,
                const std::string& external, const std::string& out_path, const std::string& weights_path,
                std::ostream& out) {
  const CsgeModel model = load_model(model_path);
  const Dataset queries = load_queries(model, data_path, lead_time);
  const auto results = run_queries(model, queries, external);

  std::ofstream file;
  std::ostream* sink = &out;
  if (!out_path.empty()) {
    file = open_output(out_path);
    sink = &file;
  }
  *sink << "sample_id,lead_time,prediction";
  if (model.task == Task::Classification) {
    for (Index c = 0; c < model.n_classes; ++c) *sink << ",p" << c;
  }
  *sink << '\n';
  for (const auto& r : results) {
    *sink << r.sample << ',' << r.lead_time << ',' << fused_value(model, r.prediction);
    if (model.task == Task::Classification) {
      for (Index c = 0; c < model.n_classes; ++c) *sink << ',' << format_double(r.prediction.value[c]);
    }
    *sink << '\n';
  }

  if (!weights_path.empty()) {
    std::ofstream w = open_output(weights_path);
    w << "sample_id,lead_time,member_id,w_global,w_local,w_time,w_final,member_prediction,fused_prediction\n";
    for (const auto& r : results) {
      const WeightBreakdown& b = r.prediction.weights;
      for (Index j = 0; j < model.size(); ++j) {
        w << r.sample << ',' << r.lead_time << ',' << model.member_ids[static_cast<std::size_t>(j)] << ','
          << format_double(b.w_global[j]) << ',' << format_double(b.w_local[j]) << ',' << format_double(b.w_time[j])
          << ',' << format_double(b.w_final[j]) << ',' << member_value(model, r.prediction, j) << ','
          << fused_value(model, r.prediction) << '\n';
      }
    }
  }
  return 0;
}

int cmd_eval(const std::string& config_path, Index folds, Index repetitions, const std::string& out_prefix,
             std::ostream& out) {
  RunConfig rc = load_run_config(config_path);
  if (!rc.external_predictions.empty()) {
    throw Error(ErrorKind::Usage, "eval refits members and needs built-in members, not external predictions");
  }
  if (folds > 0) rc.eval_folds = folds;
  if (repetitions > 0) {
    rc.eval_seeds.clear();
    for (Index s = 0; s < repetitions; ++s) rc.eval_seeds.push_back(rc.ensemble.seed + static_cast<std::uint64_t>(s));
  }
  const Dataset data = load_training_data(rc);
  const EvaluationReport report = cross_validate(rc.members, data, rc.ensemble, rc.eval_folds, rc.eval_seeds);
  const std::filesystem::path prefix = out_prefix.empty() ? rc.eval_report : std::filesystem::path(out_prefix);
  open_output(prefix.string() + ".csv") << report.to_csv();
  open_output(prefix.string() + ".md") << report.to_markdown();
  out << report.to_markdown();
  return 0;
}

int cmd_synthetic(const std::string& which, Index samples, std::uint64_t seed, const std::string& out_dir,
                  std::ostream& out) {
  const SyntheticKind kind = synthetic_kind_from_string(which);
  const SyntheticReport r = run_synthetic(kind, samples, seed);
  write_synthetic_outputs(r, out_dir);
  out << std::setprecision(6);
  out << "experiment: " << which << '\n';
  out << "eta: global=" << r.eta.global << " local=" << r.eta.local << " time=" << r.eta.time << '\n';
  out << "mean final weights:";
  for (Index j = 0; j < r.mean_final_weights.size(); ++j) out << ' ' << r.mean_final_weights[j];
  out << "\nrmse: " << r.rmse << "\nmax abs error: " << r.max_abs_error << '\n';
  if (kind == SyntheticKind::Local) out << "max abs error away from breakpoints: " << r.max_abs_error_away << '\n';
  out << "outputs written to " << out_dir << '\n';
  return 0;
}

int cmd_explain(const std::string& model_path, const std::string& data_path, const std::string& lead_time,
                const std::string& external, const std::string& out_path, std::ostream& out) {
  const CsgeModel model = load_model(model_path);
  const Dataset queries = load_queries(model, data_path, lead_time);
  const auto results = run_queries(model, queries, external);

  std::ostringstream table;
  table << std::setprecision(17);
  table << "member_id,aspect,mean,std,min,max\n";
  const char* aspects[] = {"w_global", "w_local", "w_time", "w_final"};
  for (Index j = 0; j < model.size(); ++j) {
    for (int a = 0; a < 4; ++a) {
      MetricRow row;
      for (const auto& r : results) {
        const WeightBreakdown& b = r.prediction.weights;
        const Eigen::VectorXd& v = a == 0 ? b.w_global : a == 1 ? b.w_local : a == 2 ? b.w_time : b.w_final;
        row.values.push_back(v[j]);
      }
      double mean = 0, ss = 0;
      for (double v : row.values) mean += v;
      mean /= static_cast<double>(row.values.size());
      for (double v : row.values) ss += (v - mean) * (v - mean);
      const double sd = row.values.size() > 1 ? std::sqrt(ss / static_cast<double>(row.values.size() - 1)) : 0.0;
      table << model.member_ids[static_cast<std::size_t>(j)] << ',' << aspects[a] << ',' << mean << ',' << sd << ','
            << *std::min_element(row.values.begin(), row.values.end()) << ','
            << *std::max_element(row.values.begin(), row.values.end()) << '\n';
    }
  }
  out << "eta: global=" << model.eta.global << " local=" << model.eta.local << " time=" << model.eta.time << '\n';
  if (out_path.empty()) {
    out << table.str();
  } else {
    open_output(out_path) << table.str();
    out << "weight statistics written to " << out_path << '\n';
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Soft-gating ensemble: fuse base estimators with global, local and lead-time weights"};
  app.require_subcommand(1);

  std::string config, out_path, model_path, data_path, lead_time, external, weights_path, which = "global";
  Index folds = 0, repetitions = 0, samples = 500;
  std::uint64_t seed = 0;

  auto* fit_cmd = app.add_subcommand("fit", "Fit an ensemble from a config document and write the model");
  fit_cmd->add_option("-c,--config", config, "Run config (JSON)")->required();
  fit_cmd->add_option("-o,--out", out_path, "Model output path (default: output.model from the config)");

  auto* predict_cmd = app.add_subcommand("predict", "Predict with a fitted model; optionally dump weight breakdowns");
  predict_cmd->add_option("-m,--model", model_path, "Model document")->required();
  predict_cmd->add_option("-d,--data", data_path, "Query CSV with the model's feature columns")->required();
  predict_cmd->add_option("--lead-time", lead_time, "Lead-time column of the query CSV");
  predict_cmd->add_option("--predictions", external, "Member predictions for the queries (external members)");
  predict_cmd->add_option("-o,--out", out_path, "Prediction CSV (default: stdout)");
  predict_cmd->add_option("-w,--weights", weights_path, "Per-member weight breakdown CSV");

  auto* eval_cmd = app.add_subcommand("eval", "Repeated K-fold cross-validation report");
  eval_cmd->add_option("-c,--config", config, "Run config (JSON)")->required();
  eval_cmd->add_option("--folds", folds, "Outer folds (default from config, 10)");
  eval_cmd->add_option("--repetitions", repetitions, "Number of seeds (default from config, 10)");
  eval_cmd->add_option("-o,--out", out_path, "Report path prefix; writes .csv and .md");

  auto* syn_cmd = app.add_subcommand("synthetic", "Run a synthetic experiment and write plot-ready XY files");
  syn_cmd->add_option("--which", which, "global, local or time")->check(CLI::IsMember({"global", "local", "time"}));
  syn_cmd->add_option("--samples", samples, "Training grid size (>= 50)");
  syn_cmd->add_option("--seed", seed, "Fold-plan seed");
  syn_cmd->add_option("-o,--out", out_path, "Output directory (default: synthetic_<which>)");

  auto* explain_cmd = app.add_subcommand("explain", "Summarize weight breakdowns over a query set");
  explain_cmd->add_option("-m,--model", model_path, "Model document")->required();
  explain_cmd->add_option("-d,--data", data_path, "Query CSV")->required();
  explain_cmd->add_option("--lead-time", lead_time, "Lead-time column of the query CSV");
  explain_cmd->add_option("--predictions", external, "Member predictions for the queries (external members)");
  explain_cmd->add_option("-o,--out", out_path, "Statistics CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*fit_cmd) return cmd_fit(config, out_path, out);
    if (*predict_cmd) return cmd_predict(model_path, data_path, lead_time, external, out_path, weights_path, out);
    if (*eval_cmd) return cmd_eval(config, folds, repetitions, out_path, out);
    if (*syn_cmd) return cmd_synthetic(which, samples, seed, out_path.empty() ? "synthetic_" + which : out_path, out);
    if (*explain_cmd) return cmd_explain(model_path, data_path, lead_time, external, out_path, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::Usage ? 1 : 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace csge
