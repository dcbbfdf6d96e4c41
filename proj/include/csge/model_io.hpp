#pragma once

// Model document: one self-describing JSON object tagged "csge/1". Reals are
// written in shortest round-trip form, so save/load is bit-exact.

#include "csge/ensemble.hpp"

#include <json.hpp>

#include <filesystem>

namespace csge {

inline constexpr const char* kModelFormat = "csge/1";

nlohmann::json model_to_json(const CsgeModel& model);
CsgeModel model_from_json(const nlohmann::json& doc);

void save_model(const CsgeModel& model, const std::filesystem::path& path);
CsgeModel load_model(const std::filesystem::path& path);

nlohmann::json estimator_to_json(const FittedEstimator& est);
FittedEstimator estimator_from_json(const nlohmann::json& doc);

}  // namespace csge
