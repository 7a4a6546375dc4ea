#pragma once

/// \file config.hpp
/// JSON run configuration shared by the command-line subcommands.
///
///   {
///     "obstacle": {"kind": "sphere", "center": [0, 0], "radius": 1},
///     "p": [-2, 0], "q": [2, 0],
///     "solver": {"n_segments": 512, "n_starts": 8, "grad_tol": 1e-10, ...},
///     "structure": {"tangency": 1e-4, ...},
///     "scan": {"region": {"lo": [-4, -4], "hi": [4, 4]}, "delta": 0.1, ...},
///     "output": {"dir": "out", "format": "csv"}
///   }
///
/// Unknown fields are rejected with their full path so typos do not silently
/// fall back to defaults.

#include <cstdint>
#include <optional>
#include <set>
#include <string>

#include "json.hpp"

#include "obstacle_path/curve_io.hpp"
#include "obstacle_path/obstacle.hpp"
#include "obstacle_path/optimizer.hpp"
#include "obstacle_path/structure.hpp"
#include "obstacle_path/uniqueness.hpp"

namespace obstacle_path {

struct ObstacleSpec {
  std::string kind = "sphere";
  Point center;
  double radius = 1.0;
  Point semi_axes;

  ConvexObstacle build() const {
    if (kind == "sphere") return ConvexObstacle::sphere(center, radius);
    return ConvexObstacle::ellipsoid(center, semi_axes);
  }
};

struct ScanSpec {
  ScanRegion region;
  double delta = 0.1;
  double cluster_tol = 0.0;
  double energy_equal_tol = 1e-5;
  int dimension_scales = 4;
  int jobs = 0;
};

struct OutputSpec {
  std::string dir = "out";
  std::string format = "csv";
};

struct RunConfig {
  ObstacleSpec obstacle;
  std::optional<Point> p;
  std::optional<Point> q;
  SolveConfig solver;
  StructureTolerances structure;
  std::optional<ScanSpec> scan;
  OutputSpec output;
};

namespace detail {

using nlohmann::json;

inline std::string join_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

inline void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object())
    throw Error(ErrorCode::ConfigError, "field '" + (path.empty() ? std::string("<root>") : path) + "' must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw Error(ErrorCode::ConfigError, "unknown field '" + join_path(path, key) + "'");
}

inline double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw Error(ErrorCode::ConfigError, "field '" + path + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw Error(ErrorCode::ConfigError, "field '" + path + "' must be finite");
  return v;
}

inline double get_positive(const json& j, const std::string& path) {
  const double v = get_number(j, path);
  if (!(v > 0.0)) throw Error(ErrorCode::ConfigError, "field '" + path + "' must be positive");
  return v;
}

inline double get_nonnegative(const json& j, const std::string& path) {
  const double v = get_number(j, path);
  if (v < 0.0) throw Error(ErrorCode::ConfigError, "field '" + path + "' must be non-negative");
  return v;
}

inline long get_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw Error(ErrorCode::ConfigError, "field '" + path + "' must be an integer");
  return j.get<long>();
}

inline bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw Error(ErrorCode::ConfigError, "field '" + path + "' must be true or false");
  return j.get<bool>();
}

inline std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw Error(ErrorCode::ConfigError, "field '" + path + "' must be a string");
  return j.get<std::string>();
}

inline Point get_point(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty())
    throw Error(ErrorCode::ConfigError, "field '" + path + "' must be a non-empty array of numbers");
  Point x(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    x(static_cast<Eigen::Index>(i)) = get_number(j[i], path + "[" + std::to_string(i) + "]");
  return x;
}

inline void parse_obstacle(const json& j, ObstacleSpec& o) {
  check_keys(j, "obstacle", {"kind", "center", "radius", "semi_axes"});
  if (!j.contains("kind")) throw Error(ErrorCode::ConfigError, "missing field 'obstacle.kind'");
  o.kind = get_string(j["kind"], "obstacle.kind");
  if (o.kind != "sphere" && o.kind != "ellipsoid")
    throw Error(ErrorCode::ConfigError, "field 'obstacle.kind' must be \"sphere\" or \"ellipsoid\"");
  if (!j.contains("center")) throw Error(ErrorCode::ConfigError, "missing field 'obstacle.center'");
  o.center = get_point(j["center"], "obstacle.center");
  if (o.kind == "sphere") {
    if (j.contains("semi_axes")) throw Error(ErrorCode::ConfigError, "field 'obstacle.semi_axes' is not valid for a sphere");
    if (!j.contains("radius")) throw Error(ErrorCode::ConfigError, "missing field 'obstacle.radius'");
    o.radius = get_positive(j["radius"], "obstacle.radius");
  } else {
    if (j.contains("radius")) throw Error(ErrorCode::ConfigError, "field 'obstacle.radius' is not valid for an ellipsoid");
    if (!j.contains("semi_axes")) throw Error(ErrorCode::ConfigError, "missing field 'obstacle.semi_axes'");
    o.semi_axes = get_point(j["semi_axes"], "obstacle.semi_axes");
    for (Eigen::Index k = 0; k < o.semi_axes.size(); ++k)
      if (!(o.semi_axes(k) > 0.0)) throw Error(ErrorCode::ConfigError, "field 'obstacle.semi_axes' must be positive");
    if (o.semi_axes.size() != o.center.size())
      throw Error(ErrorCode::ConfigError, "field 'obstacle.semi_axes' must match the dimension of 'obstacle.center'");
  }
  if (o.center.size() < 2) throw Error(ErrorCode::ConfigError, "field 'obstacle.center' needs dimension >= 2");
}

inline void parse_solver(const json& j, SolveConfig& s) {
  check_keys(j, "solver",
             {"n_segments", "max_iters", "step_rule", "step_size", "armijo_c", "armijo_shrink", "grad_tol", "n_starts",
              "seed", "momentum", "reparam_every", "reparam_trigger", "stall_window"});
  if (j.contains("n_segments")) s.n_segments = static_cast<int>(get_integer(j["n_segments"], "solver.n_segments"));
  if (j.contains("max_iters")) s.max_iters = get_integer(j["max_iters"], "solver.max_iters");
  if (j.contains("step_rule")) {
    const std::string r = get_string(j["step_rule"], "solver.step_rule");
    if (r == "fixed") s.step_rule = StepRule::FixedStep;
    else if (r == "armijo") s.step_rule = StepRule::BacktrackingArmijo;
    else throw Error(ErrorCode::ConfigError, "field 'solver.step_rule' must be \"fixed\" or \"armijo\"");
  }
  if (j.contains("step_size")) s.step_size = get_nonnegative(j["step_size"], "solver.step_size");
  if (j.contains("armijo_c")) s.armijo_c = get_positive(j["armijo_c"], "solver.armijo_c");
  if (j.contains("armijo_shrink")) s.armijo_shrink = get_positive(j["armijo_shrink"], "solver.armijo_shrink");
  if (j.contains("grad_tol")) s.grad_tol = get_positive(j["grad_tol"], "solver.grad_tol");
  if (j.contains("n_starts")) s.n_starts = static_cast<int>(get_integer(j["n_starts"], "solver.n_starts"));
  if (j.contains("seed")) {
    const long v = get_integer(j["seed"], "solver.seed");
    if (v < 0) throw Error(ErrorCode::ConfigError, "field 'solver.seed' must be non-negative");
    s.seed = static_cast<std::uint64_t>(v);
  }
  if (j.contains("momentum")) s.momentum = get_bool(j["momentum"], "solver.momentum");
  if (j.contains("reparam_every")) s.reparam_every = static_cast<int>(get_integer(j["reparam_every"], "solver.reparam_every"));
  if (j.contains("reparam_trigger")) s.reparam_trigger = get_nonnegative(j["reparam_trigger"], "solver.reparam_trigger");
  if (j.contains("stall_window")) s.stall_window = get_integer(j["stall_window"], "solver.stall_window");
}

inline void parse_structure(const json& j, StructureTolerances& t) {
  check_keys(j, "structure",
             {"contact_tol", "straightness", "tangency", "geodesic", "curvature_slack", "junction_angle",
              "speed_variation"});
  if (j.contains("contact_tol")) t.contact_tol = get_positive(j["contact_tol"], "structure.contact_tol");
  if (j.contains("straightness")) t.straightness = get_positive(j["straightness"], "structure.straightness");
  if (j.contains("tangency")) t.tangency = get_positive(j["tangency"], "structure.tangency");
  if (j.contains("geodesic")) t.geodesic = get_positive(j["geodesic"], "structure.geodesic");
  if (j.contains("curvature_slack")) t.curvature_slack = get_positive(j["curvature_slack"], "structure.curvature_slack");
  if (j.contains("junction_angle")) t.junction_angle = get_positive(j["junction_angle"], "structure.junction_angle");
  if (j.contains("speed_variation")) t.speed_variation = get_positive(j["speed_variation"], "structure.speed_variation");
}

inline void parse_scan(const json& j, ScanSpec& s) {
  check_keys(j, "scan", {"region", "delta", "cluster_tol", "energy_equal_tol", "dimension_scales", "jobs"});
  if (!j.contains("region")) throw Error(ErrorCode::ConfigError, "missing field 'scan.region'");
  check_keys(j["region"], "scan.region", {"lo", "hi"});
  if (!j["region"].contains("lo") || !j["region"].contains("hi"))
    throw Error(ErrorCode::ConfigError, "field 'scan.region' needs 'lo' and 'hi'");
  s.region.lo = get_point(j["region"]["lo"], "scan.region.lo");
  s.region.hi = get_point(j["region"]["hi"], "scan.region.hi");
  if (j.contains("delta")) s.delta = get_positive(j["delta"], "scan.delta");
  if (j.contains("cluster_tol")) s.cluster_tol = get_positive(j["cluster_tol"], "scan.cluster_tol");
  if (j.contains("energy_equal_tol")) s.energy_equal_tol = get_positive(j["energy_equal_tol"], "scan.energy_equal_tol");
  if (j.contains("dimension_scales"))
    s.dimension_scales = static_cast<int>(get_integer(j["dimension_scales"], "scan.dimension_scales"));
  if (j.contains("jobs")) s.jobs = static_cast<int>(get_integer(j["jobs"], "scan.jobs"));
}

inline void parse_output(const json& j, OutputSpec& o) {
  check_keys(j, "output", {"dir", "format"});
  if (j.contains("dir")) o.dir = get_string(j["dir"], "output.dir");
  if (j.contains("format")) o.format = get_string(j["format"], "output.format");
}

/// 1-based line and column of a byte offset.
inline std::string line_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

/// Checks cross-field consistency: dimensions, positive tolerances, format.
inline void validate(const RunConfig& c) {
  const Eigen::Index n = c.obstacle.center.size();
  auto dim_ok = [&](const Point& x, const char* name) {
    if (x.size() != n)
      throw Error(ErrorCode::ConfigError, std::string("field '") + name + "' has dimension " + std::to_string(x.size()) +
                                              ", obstacle has " + std::to_string(n));
  };
  if (c.p) dim_ok(*c.p, "p");
  if (c.q) dim_ok(*c.q, "q");
  if (c.scan) {
    dim_ok(c.scan->region.lo, "scan.region.lo");
    dim_ok(c.scan->region.hi, "scan.region.hi");
    for (Eigen::Index k = 0; k < n; ++k)
      if (c.scan->region.lo(k) > c.scan->region.hi(k))
        throw Error(ErrorCode::ConfigError, "field 'scan.region' has lo > hi on axis " + std::to_string(k));
    if (c.scan->dimension_scales < 4) throw Error(ErrorCode::ConfigError, "field 'scan.dimension_scales' must be >= 4");
    if (c.scan->jobs < 0) throw Error(ErrorCode::ConfigError, "field 'scan.jobs' must be non-negative");
  }
  if (c.output.format != "csv" && c.output.format != "json")
    throw Error(ErrorCode::ConfigError, "field 'output.format' must be \"csv\" or \"json\"");
  try {
    c.solver.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("solver: ") + e.what());
  }
}

inline RunConfig parse_run_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, "invalid JSON at " + detail::line_context(text, e.byte));
  }
  detail::check_keys(j, "", {"schema_version", "obstacle", "p", "q", "solver", "structure", "scan", "output"});
  RunConfig c;
  if (j.contains("schema_version") && detail::get_integer(j["schema_version"], "schema_version") != 1)
    throw Error(ErrorCode::ConfigError, "field 'schema_version' must be 1");
  if (!j.contains("obstacle")) throw Error(ErrorCode::ConfigError, "missing field 'obstacle'");
  detail::parse_obstacle(j["obstacle"], c.obstacle);
  if (j.contains("p")) c.p = detail::get_point(j["p"], "p");
  if (j.contains("q")) c.q = detail::get_point(j["q"], "q");
  if (j.contains("solver")) detail::parse_solver(j["solver"], c.solver);
  if (j.contains("structure")) detail::parse_structure(j["structure"], c.structure);
  if (j.contains("scan")) {
    c.scan.emplace();
    detail::parse_scan(j["scan"], *c.scan);
  }
  if (j.contains("output")) detail::parse_output(j["output"], c.output);
  validate(c);
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error&) {
    throw Error(ErrorCode::ConfigError, "cannot open config '" + path + "'");
  }
  return parse_run_config(text);
}

}  // namespace obstacle_path
