#include "csge/model_io.hpp"
#include "csge/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

using namespace csge;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

void check_identical_predictions(const CsgeModel& a, const CsgeModel& b, Index features, std::mt19937_64& rng,
                                 int queries) {
  std::uniform_real_distribution<double> u(-4, 4);
  for (int q = 0; q < queries; ++q) {
    Eigen::RowVectorXd x(features);
    for (Index i = 0; i < features; ++i) x[i] = u(rng);
    for (Index t = 0; t < a.horizon(); ++t) {
      const Prediction pa = predict(a, x, t), pb = predict(b, x, t);
      for (Index d = 0; d < pa.value.size(); ++d) CHECK(same_bits(pa.value[d], pb.value[d]));
      for (Index j = 0; j < a.size(); ++j) CHECK(same_bits(pa.weights.w_final[j], pb.weights.w_final[j]));
    }
  }
}

Dataset regression_data(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> g(0, 1);
  Dataset d;
  d.features.resize(n, 3);
  d.targets.resize(n, 1);
  d.feature_names = {"a", "b", "c"};
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < 3; ++c) d.features(i, c) = g(rng);
    d.targets(i, 0) = std::sin(d.features(i, 0)) * 3 + d.features(i, 1) + 0.1 * g(rng);
  }
  return d;
}

}  // namespace

TEST_CASE("regression model round-trips through JSON") {
  std::mt19937_64 rng(1);
  const Dataset d = regression_data(rng, 80);
  const CsgeModel model = fit({EstimatorSpec::linear("lin"), EstimatorSpec::knn("knn", 4), EstimatorSpec::tree("tree", 4),
                               EstimatorSpec::analytic("ana", "sin(x[0]) * 3")},
                              d, EnsembleConfig{});
  const nlohmann::json doc = model_to_json(model);
  CHECK(doc.at("format") == kModelFormat);
  const CsgeModel back = model_from_json(doc);
  CHECK(model_to_json(back) == doc);
  CHECK(back.eta == model.eta);
  CHECK(back.member_ids == model.member_ids);
  CHECK(back.feature_names == model.feature_names);
  check_identical_predictions(model, back, 3, rng, 200);
}

TEST_CASE("save and load through a file") {
  std::mt19937_64 rng(2);
  const SyntheticProblem p = generate_synthetic(SyntheticKind::Time, 80);
  const CsgeModel model = fit(p.members, p.data, synthetic_config());
  const auto path = std::filesystem::temp_directory_path() / "csge_test_model.json";
  save_model(model, path);
  const CsgeModel back = load_model(path);
  std::filesystem::remove(path);
  CHECK(back.horizon() == 6);
  check_identical_predictions(model, back, 1, rng, 100);
}

TEST_CASE("classification and external models round-trip") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0, 1);
  Dataset d;
  d.task = Task::Classification;
  d.n_classes = 2;
  d.features.resize(60, 2);
  d.targets.resize(60, 1);
  for (Index i = 0; i < 60; ++i) {
    d.targets(i, 0) = static_cast<double>(i % 2);
    d.features(i, 0) = g(rng) + 2.0 * d.targets(i, 0);
    d.features(i, 1) = g(rng);
  }
  EnsembleConfig cfg;
  cfg.scorer = Scorer::zero_one_error();
  const CsgeModel cls = fit({EstimatorSpec::knn("knn", 5, true), EstimatorSpec::tree("tree", 2)}, d, cfg);
  const CsgeModel cls_back = model_from_json(model_to_json(cls));
  CHECK(cls_back.task == Task::Classification);
  CHECK(cls_back.n_classes == 2);
  check_identical_predictions(cls, cls_back, 2, rng, 100);

  const SyntheticProblem p = generate_synthetic(SyntheticKind::Global, 60);
  const PredictionCube cube = build_prediction_cube(p.members, p.data, FoldPlan::make(60, 3, 0));
  const CsgeModel ext = fit_from_cube(cube, p.data, synthetic_config());
  const CsgeModel ext_back = model_from_json(model_to_json(ext));
  CHECK(ext_back.has_external_members());
  const Eigen::MatrixXd outs = (Eigen::MatrixXd(1, 2) << 0.3, 10.3).finished();
  const Eigen::RowVectorXd x = Eigen::RowVectorXd::Constant(1, 3.0);
  CHECK(same_bits(predict_with_outputs(ext, x, 0, outs).scalar(), predict_with_outputs(ext_back, x, 0, outs).scalar()));
}

TEST_CASE("document errors") {
  std::mt19937_64 rng(4);
  const Dataset d = regression_data(rng, 30);
  const CsgeModel model = fit({EstimatorSpec::linear(), EstimatorSpec::knn("knn", 3)}, d, EnsembleConfig{});
  nlohmann::json doc = model_to_json(model);

  nlohmann::json wrong = doc;
  wrong["format"] = "csge/0";
  CHECK_THROWS_AS(model_from_json(wrong), Error);
  nlohmann::json truncated = doc;
  truncated.erase("eta");
  CHECK_THROWS_AS(model_from_json(truncated), Error);
  try {
    load_model("/nonexistent/model.json");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }

  CsgeModel custom = model;
  custom.scorer = Scorer::custom("mine", [](double p, double y) { return std::abs(p - y); });
  try {
    model_to_json(custom);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Usage);
  }
}
