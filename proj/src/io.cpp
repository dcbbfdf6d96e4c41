#include "csge/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace csge {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line, const std::string& source, std::size_t line_no) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw Error(ErrorKind::ParseError, source + ":" + std::to_string(line_no) + ": unterminated quote");
  cells.push_back(trim(cur));
  return cells;
}

double parse_number(const std::string& cell, const std::string& source, std::size_t line_no, const std::string& column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    throw Error(ErrorKind::ParseError,
                source + ":" + std::to_string(line_no) + ": column '" + column + "' is not numeric: '" + cell + "'");
  }
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::NonFiniteValue, source + ":" + std::to_string(line_no) + ": column '" + column + "' is not finite");
  }
  return v;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

Table read_table(std::istream& in, const std::string& source) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_row(line, source, line_no);
    if (t.header.empty()) {
      std::set<std::string> seen;
      for (const auto& h : cells) {
        if (h.empty()) throw Error(ErrorKind::ParseError, source + ":" + std::to_string(line_no) + ": empty header name");
        if (!seen.insert(h).second) {
          throw Error(ErrorKind::ParseError, source + ":" + std::to_string(line_no) + ": duplicate header '" + h + "'");
        }
      }
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw Error(ErrorKind::ParseError, source + ":" + std::to_string(line_no) + ": expected " +
                                             std::to_string(t.header.size()) + " cells, got " +
                                             std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(line_no);
  }
  if (t.header.empty()) throw Error(ErrorKind::ParseError, source + ": missing header row");
  return t;
}

std::size_t column_index(const Table& t, const std::string& name, const std::string& source) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw Error(ErrorKind::ParseError, source + ": no column named '" + name + "'");
  return static_cast<std::size_t>(it - t.header.begin());
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error(ErrorKind::Io, "cannot format double");
  return std::string(buf, ptr);
}

Dataset parse_csv(std::istream& in, const CsvSchema& schema, const std::string& source) {
  const Table table = read_table(in, source);
  const bool has_target = std::find(table.header.begin(), table.header.end(), schema.target) != table.header.end();
  if (schema.require_target && !has_target) throw Error(ErrorKind::ParseError, source + ": no column named '" + schema.target + "'");
  const bool temporal = !schema.lead_time.empty();

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  if (schema.features.empty()) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      const auto& h = table.header[c];
      if ((has_target && h == schema.target) || (temporal && h == schema.lead_time)) continue;
      feature_cols.push_back(c);
      feature_names.push_back(h);
    }
  } else {
    for (const auto& f : schema.features) {
      feature_cols.push_back(column_index(table, f, source));
      feature_names.push_back(f);
    }
  }
  if (feature_cols.empty()) throw Error(ErrorKind::ShapeMismatch, source + ": no feature columns");
  const std::size_t target_col = has_target ? column_index(table, schema.target, source) : 0;
  const std::size_t lead_col = temporal ? column_index(table, schema.lead_time, source) : 0;

  std::vector<std::vector<double>> feats;
  std::vector<std::vector<double>> targets;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    std::vector<double> x;
    for (std::size_t k = 0; k < feature_cols.size(); ++k)
      x.push_back(parse_number(cells[feature_cols[k]], source, line, feature_names[k]));
    const double y = has_target ? parse_number(cells[target_col], source, line, schema.target) : 0.0;

    if (!temporal) {
      feats.push_back(std::move(x));
      targets.push_back({y});
      continue;
    }
    const double lt = parse_number(cells[lead_col], source, line, schema.lead_time);
    if (lt < 0 || lt != std::floor(lt)) throw Error(ErrorKind::ParseError, source + ":" + std::to_string(line) + ": bad lead time");
    const auto t = static_cast<std::size_t>(lt);
    if (t == 0) {
      feats.push_back(std::move(x));
      targets.push_back({y});
    } else {
      if (feats.empty() || targets.back().size() != t) {
        throw Error(ErrorKind::ParseError, source + ":" + std::to_string(line) + ": lead times must run 0..T-1 per sample");
      }
      if (x != feats.back()) {
        throw Error(ErrorKind::ShapeMismatch, source + ":" + std::to_string(line) + ": features change within a sample");
      }
      targets.back().push_back(y);
    }
  }
  if (feats.empty()) throw Error(ErrorKind::ShapeMismatch, source + ": no data rows");
  const std::size_t horizon = targets.front().size();
  for (const auto& tv : targets)
    if (tv.size() != horizon) throw Error(ErrorKind::ShapeMismatch, source + ": samples have different horizons");

  Dataset d;
  d.features.resize(static_cast<Index>(feats.size()), static_cast<Index>(feature_cols.size()));
  d.targets.resize(static_cast<Index>(feats.size()), static_cast<Index>(horizon));
  for (std::size_t n = 0; n < feats.size(); ++n) {
    for (std::size_t f = 0; f < feature_cols.size(); ++f) d.features(static_cast<Index>(n), static_cast<Index>(f)) = feats[n][f];
    for (std::size_t t = 0; t < horizon; ++t) d.targets(static_cast<Index>(n), static_cast<Index>(t)) = targets[n][t];
  }
  d.has_lead_times = temporal;
  d.feature_names = std::move(feature_names);
  d.target_name = schema.target;
  d.task = schema.task;
  if (d.task == Task::Classification) {
    d.n_classes = schema.n_classes > 0 ? schema.n_classes : static_cast<Index>(d.targets.maxCoeff()) + 1;
  }
  return validate_dataset(d);
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in = open_input(path);
  return parse_csv(in, schema, path.string());
}

void write_csv(std::ostream& out, const Dataset& d, const std::string& lead_time_column) {
  validate_dataset(d);
  for (Index f = 0; f < d.n_features(); ++f) {
    out << (d.feature_names.empty() ? "x" + std::to_string(f) : d.feature_names[static_cast<std::size_t>(f)]) << ',';
  }
  if (d.has_lead_times) out << lead_time_column << ',';
  out << d.target_name << '\n';
  for (Index n = 0; n < d.rows(); ++n) {
    for (Index t = 0; t < d.horizon(); ++t) {
      for (Index f = 0; f < d.n_features(); ++f) out << format_double(d.features(n, f)) << ',';
      if (d.has_lead_times) out << t << ',';
      out << format_double(d.targets(n, t)) << '\n';
    }
  }
}

PredictionCube parse_external_predictions(std::istream& in, const std::string& source,
                                          const std::vector<std::string>& member_order) {
  const Table table = read_table(in, source);
  const std::size_t c_sample = column_index(table, "sample_id", source);
  const std::size_t c_member = column_index(table, "member_id", source);
  const std::size_t c_lead = column_index(table, "lead_time", source);
  const std::size_t c_pred = column_index(table, "prediction", source);
  const auto class_it = std::find(table.header.begin(), table.header.end(), "class");
  const bool has_class = class_it != table.header.end();
  const std::size_t c_class = has_class ? static_cast<std::size_t>(class_it - table.header.begin()) : 0;

  std::vector<std::string> members = member_order;
  std::map<std::string, Index> member_index;
  for (std::size_t i = 0; i < members.size(); ++i) member_index[members[i]] = static_cast<Index>(i);

  using Key = std::tuple<Index, Index, Index, Index>;
  std::map<Key, double> cells;
  Index n_max = -1, t_max = -1, d_max = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    auto as_index = [&](std::size_t col, const char* name) {
      const double v = parse_number(row[col], source, line, name);
      if (v < 0 || v != std::floor(v)) {
        throw Error(ErrorKind::ParseError, source + ":" + std::to_string(line) + ": " + name + " must be a nonnegative integer");
      }
      return static_cast<Index>(v);
    };
    const Index n = as_index(c_sample, "sample_id");
    const Index t = as_index(c_lead, "lead_time");
    const Index d = has_class ? as_index(c_class, "class") : 0;
    const std::string& m = row[c_member];
    if (m.empty()) throw Error(ErrorKind::ParseError, source + ":" + std::to_string(line) + ": empty member_id");
    auto it = member_index.find(m);
    if (it == member_index.end()) {
      if (!member_order.empty()) {
        throw Error(ErrorKind::ParseError, source + ":" + std::to_string(line) + ": unknown member '" + m + "'");
      }
      it = member_index.emplace(m, static_cast<Index>(members.size())).first;
      members.push_back(m);
    }
    const double p = parse_number(row[c_pred], source, line, "prediction");
    if (!cells.emplace(Key{n, it->second, t, d}, p).second) {
      throw Error(ErrorKind::ParseError, source + ":" + std::to_string(line) + ": duplicate entry for sample " +
                                             std::to_string(n) + ", member '" + m + "', lead time " + std::to_string(t));
    }
    n_max = std::max(n_max, n);
    t_max = std::max(t_max, t);
    d_max = std::max(d_max, d);
  }
  if (cells.empty()) throw Error(ErrorKind::ShapeMismatch, source + ": no predictions");

  PredictionCube cube(n_max + 1, static_cast<Index>(members.size()), t_max + 1, d_max + 1);
  cube.member_ids = members;
  for (Index n = 0; n <= n_max; ++n)
    for (Index j = 0; j < cube.members(); ++j)
      for (Index t = 0; t <= t_max; ++t)
        for (Index d = 0; d <= d_max; ++d) {
          const auto it = cells.find(Key{n, j, t, d});
          if (it == cells.end()) {
            std::string msg = source + ": missing prediction for sample " + std::to_string(n) + ", member '" +
                              members[static_cast<std::size_t>(j)] + "', lead time " + std::to_string(t);
            if (has_class) msg += ", class " + std::to_string(d);
            throw Error(ErrorKind::MissingCell, msg);
          }
          cube(n, j, t, d) = it->second;
        }
  return cube;
}

PredictionCube import_external_predictions(const std::filesystem::path& path, const std::vector<std::string>& member_order) {
  std::ifstream in = open_input(path);
  return parse_external_predictions(in, path.string(), member_order);
}

}  // namespace csge
