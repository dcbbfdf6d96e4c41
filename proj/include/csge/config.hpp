#pragma once

// Declarative run configuration (JSON, schema "csge-config/1"). Unknown keys
// are rejected at every level.

#include "csge/ensemble.hpp"
#include "csge/io.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>

namespace csge {

inline constexpr const char* kConfigVersion = "csge-config/1";

struct RunConfig {
  Task task = Task::Regression;
  std::filesystem::path data_path;
  CsvSchema schema;
  std::vector<EstimatorSpec> members;
  std::filesystem::path external_predictions;  // empty: use built-in members
  EnsembleConfig ensemble;
  std::filesystem::path model_path = "model.json";
  Index eval_folds = 10;
  std::vector<std::uint64_t> eval_seeds;
  std::filesystem::path eval_report = "report";
};

/// Relative paths are resolved against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

/// Reads and parses a config file; the CSGE_SEED environment variable, when
/// set, replaces the configured seed.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace csge
