#pragma once

#include <Eigen/Dense>

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "subsmc/errors.hpp"

namespace subsmc {

using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Immutable observations: response vector, covariate matrix (one row per
/// observation, intercept column included where the design uses one), and an
/// optional group label per observation for panel models.
struct Dataset {
  Eigen::VectorXd y;
  RowMatrixXd X;
  std::vector<std::int32_t> group;  // empty unless panel data; 0-based
  int n_groups = 0;

  long n() const { return y.size(); }
  int n_covariates() const { return static_cast<int>(X.cols()); }
  bool has_groups() const { return !group.empty(); }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, long row, const std::string& col) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw IoError("row " + std::to_string(row) + ", column '" + col +
                  "': cannot parse '" + s + "' as a number");
  return v;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Reads the dataset CSV format: header row, 'y' column = response, optional
/// 'group' column, every other column a covariate (in file order).
inline Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  const auto header = detail::split_csv_line(line);

  int y_col = -1, group_col = -1;
  std::vector<int> x_cols;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    if (header[c] == "y") {
      if (y_col >= 0) throw IoError(path + ": duplicate 'y' column");
      y_col = c;
    } else if (header[c] == "group") {
      if (group_col >= 0) throw IoError(path + ": duplicate 'group' column");
      group_col = c;
    } else {
      x_cols.push_back(c);
    }
  }
  if (y_col < 0) throw IoError(path + ": missing required 'y' column");
  if (x_cols.empty()) throw IoError(path + ": no covariate columns");

  std::vector<double> ys;
  std::vector<double> xs;
  std::vector<std::int32_t> groups;
  long row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw IoError(path + ": row " + std::to_string(row) + " has " +
                    std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(header.size()));
    ys.push_back(detail::parse_double(fields[y_col], row, "y"));
    for (int c : x_cols) {
      const double v = detail::parse_double(fields[c], row, header[c]);
      if (!std::isfinite(v))
        throw IoError(path + ": non-finite covariate at row " +
                      std::to_string(row) + ", column '" + header[c] + "'");
      xs.push_back(v);
    }
    if (group_col >= 0) {
      const double g = detail::parse_double(fields[group_col], row, "group");
      if (g != std::floor(g) || g < 1)
        throw IoError(path + ": row " + std::to_string(row) +
                      ": group labels must be integers >= 1");
      groups.push_back(static_cast<std::int32_t>(g) - 1);
    }
  }
  if (row == 0) throw IoError(path + ": no data rows");

  Dataset data;
  const long n = row;
  const int d = static_cast<int>(x_cols.size());
  data.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  data.X = Eigen::Map<RowMatrixXd>(xs.data(), n, d);
  if (group_col >= 0) {
    std::int32_t max_g = 0;
    for (auto g : groups) max_g = std::max(max_g, g);
    data.n_groups = max_g + 1;
    std::vector<bool> seen(data.n_groups, false);
    for (auto g : groups) seen[g] = true;
    for (int g = 0; g < data.n_groups; ++g)
      if (!seen[g])
        throw IoError(path + ": group labels must be contiguous 1..n_groups; " +
                      std::to_string(g + 1) + " is missing");
    data.group = std::move(groups);
  }
  return data;
}

inline void save_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file: " + path);
  out << "y";
  for (int c = 0; c < data.n_covariates(); ++c) out << ",x" << (c + 1);
  if (data.has_groups()) out << ",group";
  out << "\n";
  for (long k = 0; k < data.n(); ++k) {
    out << detail::format_double(data.y[k]);
    for (int c = 0; c < data.n_covariates(); ++c)
      out << ',' << detail::format_double(data.X(k, c));
    if (data.has_groups()) out << ',' << (data.group[k] + 1);
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace subsmc
