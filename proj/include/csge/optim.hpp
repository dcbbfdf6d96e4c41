#pragma once

#include "csge/core.hpp"
#include "csge/softgate.hpp"
#include "csge/weighting.hpp"

#include <string>
#include <vector>

namespace csge {

struct ObjectiveConfig {
  double c_reg = 0.1;
  bool use_penalty_heuristic = true;
  double eta_max = 12.0;
  Index grid_resolution = 5;
  Index max_refine_iters = 200;
  double tolerance = 1e-6;

  void validate() const;
};

/// Everything the objective needs that does not depend on eta. `local_q` holds
/// the local error vector of every training sample (N x J).
struct FusionContext {
  const PredictionCube* cube = nullptr;
  Eigen::MatrixXd targets;  // N x T
  Task task = Task::Regression;
  GlobalScores global;
  Eigen::MatrixXd local_q;
  TimeScores time;
  SoftGateConfig gate;

  Index samples() const { return cube->samples(); }
};

/// Precomputes local errors for every training row. With `leave_one_out` each
/// row's own stored error is excluded from its neighborhood.
FusionContext make_fusion_context(const PredictionCube& cube, const Eigen::MatrixXd& targets, Task task,
                                  const Eigen::MatrixXd& features, const LocalMemory& memory, GlobalScores global,
                                  TimeScores time, SoftGateConfig gate, bool leave_one_out = true);

/// Weighted sum of member outputs (D x J) with final weights; class
/// probabilities are renormalized.
Eigen::VectorXd fuse_outputs(const Eigen::MatrixXd& member_outputs, const Eigen::VectorXd& w_final, Task task);

struct ObjectiveValue {
  double data = 0.0;
  double penalty = 0.0;
  double total() const { return data + penalty; }
};

/// Squared error of the fused predictions summed over samples and lead times
/// (per-class squared probability error for classification) plus the eta
/// regularizer.
ObjectiveValue objective(const EtaVector& eta, const FusionContext& ctx, const ObjectiveConfig& cfg);

double regularizer(const EtaVector& eta, const ObjectiveConfig& cfg);

struct TraceEntry {
  EtaVector eta;
  double value = 0.0;
  double best_so_far = 0.0;
  std::string phase;  // "grid" or "simplex"
};

struct MinimizeResult {
  EtaVector eta;
  double value = 0.0;
  std::vector<TraceEntry> trace;
};

/// Coarse grid over [0, eta_max]^3, then bounded Nelder-Mead from the best
/// grid point. Returns the best point evaluated.
MinimizeResult minimize(const ObjectiveConfig& cfg, const FusionContext& ctx);

/// Same driver over any objective on [0, eta_max]^3.
MinimizeResult minimize(const ObjectiveConfig& cfg, const std::function<double(const EtaVector&)>& f);

}  // namespace csge
