#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tdo {

/// Shortest decimal that round-trips a double exactly.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Plain-text matrix: one row per line, whitespace-separated decimals.
inline void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << ' ';
      os << format_double(m(r, c));
    }
    os << '\n';
  }
}

/// Reads rows until end of stream or a blank line. Lines starting with '#'
/// are skipped.
inline Eigen::MatrixXd read_matrix(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] == '#') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      if (rows.empty()) continue;
      break;
    }
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) {
        throw std::runtime_error("read_matrix: bad token '" + tok + "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("read_matrix: ragged rows");
    }
    rows.push_back(std::move(row));
  }
  const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index nc = nr ? static_cast<Eigen::Index>(rows.front().size()) : 0;
  Eigen::MatrixXd m(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r) {
    for (Eigen::Index c = 0; c < nc; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

inline void save_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_matrix(os, m);
}

inline Eigen::MatrixXd load_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_matrix(is);
}

}  // namespace tdo
