#pragma once

#include "csge/core.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace csge {

struct CsvSchema {
  std::string target = "target";
  std::string lead_time;              // empty: no lead-time axis
  std::vector<std::string> features;  // empty: every other column
  Task task = Task::Regression;
  Index n_classes = 0;                // 0: inferred as max label + 1
  bool require_target = true;
};

/// Reads a header-first comma-separated file. With a lead-time column each
/// sample spans T consecutive rows carrying lead times 0..T-1 and identical
/// features.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
Dataset parse_csv(std::istream& in, const CsvSchema& schema, const std::string& source = "<stream>");

/// Inverse of load_csv; reals use shortest round-trip formatting.
void write_csv(std::ostream& out, const Dataset& d, const std::string& lead_time_column = "lead_time");

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Long-format member predictions: sample_id, member_id, lead_time,
/// prediction, plus an optional class column for per-class probabilities.
/// Members are ordered by first appearance unless `member_order` is given.
PredictionCube import_external_predictions(const std::filesystem::path& path,
                                           const std::vector<std::string>& member_order = {});
PredictionCube parse_external_predictions(std::istream& in, const std::string& source = "<stream>",
                                          const std::vector<std::string>& member_order = {});

}  // namespace csge
