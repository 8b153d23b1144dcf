#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lossprior/errors.hpp"
#include "lossprior/priors.hpp"
#include "lossprior/spd.hpp"
#include "lossprior/worth.hpp"

namespace lossprior {

using json = nlohmann::json;

/// 17 significant digits: doubles round-trip exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContractError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw ContractError("failed writing '" + path + "'");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// CSV with a header row and one column per covariate.
inline Eigen::MatrixXd read_design_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw ContractError("design CSV '" + path + "' is empty");
  std::vector<std::vector<double>> rows;
  size_t cols = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ContractError("design CSV '" + path + "': bad numeric cell '" + cell + "'");
      }
    }
    if (cols == 0) cols = row.size();
    if (row.size() != cols) {
      throw ContractError("design CSV '" + path + "': ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || cols == 0) throw ContractError("design CSV '" + path + "' has no data");
  Eigen::MatrixXd design(rows.size(), cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < cols; ++j) design(static_cast<Eigen::Index>(i),
                                            static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return design;
}

inline json spd_to_json(const SpdMatrix& m) {
  json entries = json::array();
  for (int i = 0; i < m.dim(); ++i) {
    for (int j = 0; j < m.dim(); ++j) entries.push_back(m(i, j));
  }
  return json{{"d", m.dim()}, {"entries", entries}};
}

inline json grid_metadata_to_json(const GridMetadata& meta) {
  json out{{"model", meta.model},
           {"geometry", meta.geometry},
           {"violates_likelihood_principle", meta.violates_likelihood_principle}};
  if (meta.delta) out["delta"] = *meta.delta;
  if (!meta.labels.empty()) out["labels"] = meta.labels;
  if (!meta.axis_names.empty()) out["axis_names"] = meta.axis_names;
  return out;
}

inline json grid_to_json(const PriorGrid& grid, const json& config = json::object()) {
  json axes = json::array();
  for (const auto& axis : grid.axes()) axes.push_back(axis);
  return json{{"config", config},
              {"kind", prior_kind_name(grid.kind())},
              {"normalized", grid.normalized()},
              {"metadata", grid_metadata_to_json(grid.metadata())},
              {"axes", axes},
              {"values", grid.values()}};
}

/// One row per node: coordinates then density. The resolved run config is
/// embedded as a leading comment line so any artifact reproduces itself.
inline std::string grid_to_csv(const PriorGrid& grid, const json& config = json::object()) {
  std::ostringstream out;
  out << "# config: " << config.dump() << "\n";
  const auto& names = grid.metadata().axis_names;
  for (int i = 0; i < grid.rank(); ++i) {
    out << (names.size() == static_cast<size_t>(grid.rank()) ? names[static_cast<size_t>(i)]
                                                             : "x" + std::to_string(i))
        << ",";
  }
  out << "density\n";
  for (size_t flat = 0; flat < grid.size(); ++flat) {
    for (double c : grid.node(flat)) out << format_double(c) << ",";
    out << format_double(grid.values()[flat]) << "\n";
  }
  return out.str();
}

struct WorthTableRow {
  double delta = 0.0;
  double exact = 0.0;
  double asymptotic = 0.0;
  double oracle = 0.0;
  double ratio = 0.0;
};

inline std::string worth_table_to_csv(const std::vector<WorthTableRow>& rows,
                                      const json& config = json::object()) {
  std::ostringstream out;
  out << "# config: " << config.dump() << "\n";
  out << "delta,exact,asymptotic,oracle,ratio\n";
  for (const auto& r : rows) {
    out << format_double(r.delta) << "," << format_double(r.exact) << ","
        << format_double(r.asymptotic) << "," << format_double(r.oracle) << ","
        << format_double(r.ratio) << "\n";
  }
  return out.str();
}

inline json worth_table_to_json(const std::vector<WorthTableRow>& rows,
                                const json& config = json::object()) {
  json table = json::array();
  for (const auto& r : rows) {
    table.push_back(json{{"delta", r.delta},
                         {"exact", r.exact},
                         {"asymptotic", r.asymptotic},
                         {"oracle", r.oracle},
                         {"ratio", r.ratio}});
  }
  return json{{"config", config}, {"rows", table}};
}

}  // namespace lossprior
