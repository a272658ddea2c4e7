// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gagnar/errors.hpp"

namespace gagnar {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline double parse_double(const std::string& s, const std::string& ctx) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(ctx + ": cannot parse numeric field '" + s + "'");
  }
}

inline long parse_long(const std::string& s, const std::string& ctx) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(ctx + ": cannot parse integer field '" + s + "'");
  }
}

/// Shortest decimal representation that round-trips the double exactly.
inline std::string format_full(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Fixed significant-digit formatting used by report artifacts.
inline std::string format_sig(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return std::string(buf);
}

}  // namespace detail

/// Dense numeric matrix from CSV; every row must have the same arity.
inline Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path,
                                       bool skip_header = false) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (first && skip_header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields)
      row.push_back(detail::parse_double(f, path.string() + ":" + std::to_string(lineno)));
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path.string() + ": no data rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                             int sig_digits = -1) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << (sig_digits > 0 ? detail::format_sig(m(i, j), sig_digits)
                             : detail::format_full(m(i, j)));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

/// Edge list with a mandatory `src,dst` header. Node ids are shifted by
/// `id_base`; self-loops are rejected here, duplicates are kept (the
/// adjacency constructor deduplicates).
inline std::vector<std::pair<int, int>> read_edge_csv(const std::filesystem::path& path,
                                                      int id_base = 0) {
  if (id_base != 0 && id_base != 1)
    throw ValidationError("id_base must be 0 or 1");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  {
    auto header = detail::split_csv_line(line);
    if (header.size() != 2 || header[0] != "src" || header[1] != "dst")
      throw IoError(path.string() + ": expected header 'src,dst'");
  }
  std::vector<std::pair<int, int>> edges;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    const std::string ctx = path.string() + ":" + std::to_string(lineno);
    if (fields.size() != 2) throw IoError(ctx + ": expected two fields");
    const long src = detail::parse_long(fields[0], ctx) - id_base;
    const long dst = detail::parse_long(fields[1], ctx) - id_base;
    if (src < 0 || dst < 0) throw ValidationError(ctx + ": node id below id_base");
    if (src == dst) throw ValidationError(ctx + ": self-loop rejected");
    edges.emplace_back(static_cast<int>(src), static_cast<int>(dst));
  }
  return edges;
}

inline void write_edge_csv(const std::filesystem::path& path,
                           const std::vector<std::pair<int, int>>& edges) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "src,dst\n";
  for (const auto& [s, d] : edges) out << s << ',' << d << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline void write_labels_csv(const std::filesystem::path& path, const std::vector<int>& z) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  for (int zi : z) out << zi << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::vector<int> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<int> z;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    z.push_back(static_cast<int>(
        detail::parse_long(detail::split_csv_line(line)[0],
                           path.string() + ":" + std::to_string(lineno))));
  }
  if (z.empty()) throw IoError(path.string() + ": no labels");
  return z;
}

}  // namespace gagnar
