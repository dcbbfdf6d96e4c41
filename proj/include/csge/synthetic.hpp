#pragma once

// Noise-free synthetic problems isolating one weighting aspect each. All use
// the member pair sin(x) and sin(x) + 10.

#include "csge/ensemble.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace csge {

enum class SyntheticKind { Global, Local, Time };

SyntheticKind synthetic_kind_from_string(const std::string& name);
const char* to_string(SyntheticKind kind);

/// Generating function g(x, t):
///   global: sin(x) + 4
///   local:  sin(x) + 10 for 10 <= x <= 15, sin(x) otherwise
///   time:   sin(x) for t < 3, sin(x) + 10 for t >= 3
double synthetic_target(SyntheticKind kind, double x, Index t);

inline constexpr Index kSyntheticHorizon = 6;

struct SyntheticProblem {
  SyntheticKind kind = SyntheticKind::Global;
  Dataset data;
  std::vector<EstimatorSpec> members;
  std::uint64_t seed = 0;
};

/// `n_samples` evenly spaced points over [x_min, x_max]; the time problem
/// carries lead times 0..5.
SyntheticProblem generate_synthetic(SyntheticKind which, Index n_samples = 500, double x_min = 0.0, double x_max = 20.0,
                                    std::uint64_t seed = 0);

/// Ensemble settings used for the synthetic runs.
EnsembleConfig synthetic_config(std::uint64_t seed = 0);

struct SyntheticReport {
  SyntheticKind kind = SyntheticKind::Global;
  EtaVector eta;
  Eigen::VectorXd mean_final_weights;  // over all test queries
  Eigen::MatrixXd time_weights;        // T x J
  double rmse = 0.0;
  double max_abs_error = 0.0;
  // Local problem only: restricted to test points >= 0.5 from the breakpoints.
  double max_abs_error_away = 0.0;
  double min_correct_local_weight = 1.0;
  Eigen::VectorXd max_abs_error_per_t;  // length T
  Eigen::VectorXd test_x;
  Eigen::MatrixXd test_target;          // n_test x T
  Eigen::MatrixXd test_prediction;      // n_test x T
  CsgeModel model;
};

/// Fits on the generated grid and scores on the midpoints between grid points.
SyntheticReport run_synthetic(SyntheticKind which, Index n_samples = 500, std::uint64_t seed = 0);

/// report.json plus two-column XY files (target, members, fused prediction).
void write_synthetic_outputs(const SyntheticReport& report, const std::filesystem::path& dir);

}  // namespace csge
