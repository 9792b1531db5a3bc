#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tdo/matrix_io.hpp"
#include "tdo/simulation.hpp"

namespace tdo {

using HeaderLines = std::vector<std::pair<std::string, std::string>>;

/// FNV-1a over "key=value\n" lines, as 16 hex digits. Depends only on the
/// configuration echo, so reruns of the same config share an id.
inline std::string compute_run_id(const HeaderLines& header) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [k, v] : header) {
    mix(k);
    mix("=");
    mix(v);
    mix("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string header_value(const HeaderLines& header, const std::string& key) {
  for (const auto& [k, v] : header) {
    if (k == key) return v;
  }
  throw std::out_of_range("header key '" + key + "' not present");
}

inline const std::vector<std::string>& log_columns() {
  static const std::vector<std::string> cols = {
      "k",        "t",         "y",         "psi",         "nu",         "omega",          "delta_f",
      "delta_r",  "u1",        "u2",        "d",           "pi",         "e_norm",         "u_opt1",
      "u_opt2",   "margin_y",  "margin_psi", "margin_max", "stage_cost", "cum_cost",       "ell",
      "mode",     "pi_before", "pi_after",  "reg_delta",   "active_set_size", "qp_iterations", "clamped",
      "failed"};
  return cols;
}

/// Writes "# key=value" lines (config echo, then run_id), a column line and
/// one row per record. wall_time is appended only on request so that the
/// default output is reproducible byte for byte.
inline void write_log(std::ostream& os, const ClosedLoopLog& log, double ts, bool include_timing = false,
                      const std::string& run_id = "") {
  for (const auto& [k, v] : log.header) os << "# " << k << '=' << v << '\n';
  os << "# run_id=" << (run_id.empty() ? compute_run_id(log.header) : run_id) << '\n';
  const auto& cols = log_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  if (include_timing) os << ",wall_time";
  os << '\n';
  auto f = [](double v) { return format_double(v); };
  for (const StepRecord& r : log.records) {
    os << r.k << ',' << f(r.k * ts);
    for (int j = 0; j < kStateDim; ++j) os << ',' << f(r.x[j]);
    os << ',' << f(r.u[0]) << ',' << f(r.u[1]) << ',' << f(r.d) << ',' << f(r.pi) << ',' << f(r.e_norm) << ','
       << f(r.u_opt[0]) << ',' << f(r.u_opt[1]) << ',' << f(r.margin_y) << ',' << f(r.margin_psi) << ','
       << f(r.margin_max) << ',' << f(r.stage_cost) << ',' << f(r.cum_cost) << ',' << r.ell << ',' << r.mode
       << ',' << f(r.pi_before) << ',' << f(r.pi_after) << ',' << f(r.reg_delta) << ',' << r.active_set_size
       << ',' << r.qp_iterations << ',' << (r.clamped ? 1 : 0) << ',' << (r.failed ? 1 : 0);
    if (include_timing) os << ',' << f(r.wall_time);
    os << '\n';
  }
}

inline void save_log(const std::string& path, const ClosedLoopLog& log, double ts, bool include_timing = false,
                     const std::string& run_id = "") {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_log: cannot open '" + path + "'");
  write_log(out, log, ts, include_timing, run_id);
  if (!out) throw std::runtime_error("save_log: write failed for '" + path + "'");
}

struct ParsedLog {
  HeaderLines header;  // includes run_id
  ClosedLoopLog log;
  bool has_timing = false;
};

inline double parse_double(const std::string& s) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline ParsedLog read_log(std::istream& is) {
  ParsedLog p;
  std::string line;
  bool have_cols = false;
  std::size_t ncols = 0;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw std::runtime_error("read_log: bad header line " + std::to_string(lineno));
      p.header.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
      continue;
    }
    const std::vector<std::string> cells = split_csv_line(line);
    if (!have_cols) {
      const auto& cols = log_columns();
      if (cells.size() < cols.size()) throw std::runtime_error("read_log: missing columns");
      for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cells[i] != cols[i]) throw std::runtime_error("read_log: unexpected column '" + cells[i] + "'");
      }
      p.has_timing = cells.size() == cols.size() + 1 && cells.back() == "wall_time";
      if (cells.size() != cols.size() && !p.has_timing) throw std::runtime_error("read_log: extra columns");
      ncols = cells.size();
      have_cols = true;
      continue;
    }
    if (cells.size() != ncols) throw std::runtime_error("read_log: wrong cell count on line " + std::to_string(lineno));
    try {
      StepRecord r;
      std::size_t c = 0;
      r.k = std::stoi(cells[c++]);
      ++c;  // t
      for (int j = 0; j < kStateDim; ++j) r.x[j] = parse_double(cells[c++]);
      r.u[0] = parse_double(cells[c++]);
      r.u[1] = parse_double(cells[c++]);
      r.d = parse_double(cells[c++]);
      r.pi = parse_double(cells[c++]);
      r.e_norm = parse_double(cells[c++]);
      r.u_opt[0] = parse_double(cells[c++]);
      r.u_opt[1] = parse_double(cells[c++]);
      r.margin_y = parse_double(cells[c++]);
      r.margin_psi = parse_double(cells[c++]);
      r.margin_max = parse_double(cells[c++]);
      r.stage_cost = parse_double(cells[c++]);
      r.cum_cost = parse_double(cells[c++]);
      r.ell = std::stoi(cells[c++]);
      r.mode = cells[c++];
      r.pi_before = parse_double(cells[c++]);
      r.pi_after = parse_double(cells[c++]);
      r.reg_delta = parse_double(cells[c++]);
      r.active_set_size = std::stoi(cells[c++]);
      r.qp_iterations = std::stoi(cells[c++]);
      r.clamped = cells[c++] == "1";
      r.failed = cells[c++] == "1";
      if (p.has_timing) r.wall_time = parse_double(cells[c++]);
      if (r.clamped) ++p.log.clamp_events;
      if (r.failed) ++p.log.failure_events;
      p.log.records.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw std::runtime_error("read_log: line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_cols) throw std::runtime_error("read_log: no column line");
  for (const auto& kv : p.header) {
    if (kv.first != "run_id") p.log.header.push_back(kv);
  }
  return p;
}

inline ParsedLog load_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_log: cannot open '" + path + "'");
  return read_log(in);
}

/// Plain table: "# key=value" lines, then columns, then rows.
inline void write_table(std::ostream& os, const HeaderLines& header, const std::vector<std::string>& columns,
                        const std::vector<std::vector<std::string>>& rows) {
  for (const auto& [k, v] : header) os << "# " << k << '=' << v << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << '\n';
  for (const auto& row : rows) {
    if (row.size() != columns.size()) throw std::invalid_argument("write_table: row width");
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
}

}  // namespace tdo
