#pragma once

/// \file curve_io.hpp
/// Curve serialization. CSV: header "t,x0,...,x{n-1}", one row per node with
/// t = i/N. JSON: {"nodes": [[...], ...]}. Doubles are written with 17
/// significant digits, which round-trips bit-exactly.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "obstacle_path/curve.hpp"

namespace obstacle_path {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string curve_to_csv(const DiscreteCurve& c) {
  std::string out = "t";
  for (int d = 0; d < c.dimension(); ++d) out += ",x" + std::to_string(d);
  out += '\n';
  const int n = c.segments();
  for (int i = 0; i <= n; ++i) {
    out += format_double(static_cast<double>(i) / n);
    for (int d = 0; d < c.dimension(); ++d) {
      out += ',';
      out += format_double(c.nodes()(d, i));
    }
    out += '\n';
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline double parse_double(const std::string& s, int line_no) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last || !std::isfinite(v))
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad number '" + s + "'");
  return v;
}

}  // namespace detail

inline DiscreteCurve curve_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty curve file");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "t")
    throw Error(ErrorCode::ParseError, "line 1: expected header 't,x0,...'");
  const int dim = static_cast<int>(header.size()) - 1;
  for (int d = 0; d < dim; ++d)
    if (header[d + 1] != "x" + std::to_string(d))
      throw Error(ErrorCode::ParseError, "line 1: unexpected column '" + header[d + 1] + "'");

  std::vector<double> ts;
  std::vector<double> values;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    if (static_cast<int>(fields.size()) != dim + 1)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(dim + 1) + " fields, got " +
                                             std::to_string(fields.size()));
    ts.push_back(detail::parse_double(fields[0], line_no));
    for (int d = 0; d < dim; ++d) values.push_back(detail::parse_double(fields[d + 1], line_no));
  }
  const int rows = static_cast<int>(ts.size());
  if (rows < 2) throw Error(ErrorCode::ParseError, "curve needs at least two rows");
  const int n = rows - 1;
  for (int i = 0; i < rows; ++i)
    if (std::abs(ts[i] - static_cast<double>(i) / n) > 1e-9)
      throw Error(ErrorCode::ParseError, "row " + std::to_string(i + 1) + ": parameter t=" +
                                             format_double(ts[i]) + " is not i/N (truncated file?)");
  Nodes x(dim, rows);
  for (int i = 0; i < rows; ++i)
    for (int d = 0; d < dim; ++d) x(d, i) = values[static_cast<std::size_t>(i) * dim + d];
  return DiscreteCurve(std::move(x));
}

inline nlohmann::json curve_to_json(const DiscreteCurve& c) {
  nlohmann::json nodes = nlohmann::json::array();
  for (int i = 0; i <= c.segments(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int d = 0; d < c.dimension(); ++d) row.push_back(c.nodes()(d, i));
    nodes.push_back(std::move(row));
  }
  return nlohmann::json{{"nodes", std::move(nodes)}};
}

inline DiscreteCurve curve_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_array())
    throw Error(ErrorCode::ParseError, "expected an object with a 'nodes' array");
  const auto& rows = j["nodes"];
  if (rows.size() < 2) throw Error(ErrorCode::ParseError, "curve needs at least two nodes");
  if (!rows[0].is_array() || rows[0].empty()) throw Error(ErrorCode::ParseError, "nodes[0] must be a non-empty array");
  const auto dim = static_cast<Eigen::Index>(rows[0].size());
  Nodes x(dim, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || static_cast<Eigen::Index>(rows[i].size()) != dim)
      throw Error(ErrorCode::ParseError, "nodes[" + std::to_string(i) + "] has the wrong dimension");
    for (Eigen::Index d = 0; d < dim; ++d) {
      if (!rows[i][d].is_number())
        throw Error(ErrorCode::ParseError, "nodes[" + std::to_string(i) + "] contains a non-number");
      x(d, static_cast<Eigen::Index>(i)) = rows[i][d].get<double>();
    }
  }
  return DiscreteCurve(std::move(x));
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Loads a curve from a .json or CSV file (decided by extension).
inline DiscreteCurve load_curve(const std::string& path) {
  const std::string text = read_text_file(path);
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, std::string("invalid JSON: ") + e.what());
    }
    return curve_from_json(j);
  }
  return curve_from_csv(text);
}

}  // namespace obstacle_path
