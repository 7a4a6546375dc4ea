#pragma once

/// \file report_io.hpp
/// JSON and CSV forms of solver, structure, closed-form and scan results.
/// Every JSON document carries "schema_version".

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "obstacle_path/analytic.hpp"
#include "obstacle_path/curve_io.hpp"
#include "obstacle_path/optimizer.hpp"
#include "obstacle_path/structure.hpp"
#include "obstacle_path/uniqueness.hpp"

namespace obstacle_path {

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline nlohmann::json point_json(const Point& x) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index k = 0; k < x.size(); ++k) a.push_back(x(k));
  return a;
}

/// NaN and infinities have no JSON literal; they become null.
inline nlohmann::json number_json(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace detail

inline nlohmann::json obstacle_to_json(const ConvexObstacle& o) {
  nlohmann::json j{{"kind", o.kind_name()}, {"center", detail::point_json(o.center())}};
  if (const auto* s = o.as_sphere()) j["radius"] = s->radius;
  if (const auto* e = o.as_ellipsoid()) j["semi_axes"] = detail::point_json(e->semi_axes);
  j["kappa_max"] = o.kappa_max();
  j["kappa_min"] = detail::number_json(o.kappa_min());
  j["flat_regions"] = o.kappa_min() == 0.0;
  return j;
}

inline nlohmann::json solve_result_to_json(const SolveResult& r) {
  return {{"start_index", r.start_index},
          {"energy", r.energy},
          {"length", r.length},
          {"raw_energy", r.raw_energy},
          {"raw_length", r.raw_length},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"stationarity", detail::number_json(r.stationarity)},
          {"monotone", r.monotone}};
}

inline nlohmann::json solve_results_to_json(const std::vector<SolveResult>& results, const ConvexObstacle& obstacle,
                                            const Point& p, const Point& q, const SolveConfig& cfg) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& r : results) list.push_back(solve_result_to_json(r));
  nlohmann::json j{{"schema_version", kSchemaVersion},
                   {"obstacle", obstacle_to_json(obstacle)},
                   {"p", detail::point_json(p)},
                   {"q", detail::point_json(q)},
                   {"n_segments", cfg.n_segments},
                   {"n_starts", cfg.n_starts},
                   {"seed", cfg.seed},
                   {"grad_tol", cfg.grad_tol},
                   {"converged", any_converged(results)},
                   {"results", std::move(list)}};
  if (!results.empty()) {
    j["energy"] = results.front().energy;
    j["length"] = results.front().length;
    j["best_start_index"] = results.front().start_index;
  }
  return j;
}

inline nlohmann::json structure_report_to_json(const StructureReport& r) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& run : r.coincidence_runs) runs.push_back({run.first, run.last});
  return {{"schema_version", kSchemaVersion},
          {"passed", r.passed},
          {"failures", r.failures},
          {"n_segments", r.n_segments},
          {"through_obstacle", r.through_obstacle},
          {"coincidence_runs", std::move(runs)},
          {"straightness_residual", r.straightness_residual},
          {"tangency_residual_p", r.tangency_residual_p},
          {"tangency_residual_q", r.tangency_residual_q},
          {"node_tangency_p", r.node_tangency_p},
          {"node_tangency_q", r.node_tangency_q},
          {"geodesic_residual", r.geodesic_residual},
          {"el_residual", r.el_residual},
          {"el_junction_residual", r.el_junction_residual},
          {"curvature_ratio", r.curvature_ratio},
          {"junction_angle", r.junction_angle},
          {"speed_variation", r.speed_variation},
          {"endpoint_error", r.endpoint_error},
          {"min_level", r.min_level}};
}

inline nlohmann::json sphere_solution_to_json(const SphereSolution& s) {
  return {{"schema_version", kSchemaVersion},
          {"center", detail::point_json(s.center)},
          {"radius", s.radius},
          {"p", detail::point_json(s.p)},
          {"q", detail::point_json(s.q)},
          {"segment_case", s.segment_case},
          {"tangent_point_p", detail::point_json(s.tangent_point_p)},
          {"tangent_point_q", detail::point_json(s.tangent_point_q)},
          {"arc_angle", s.arc_angle},
          {"length", s.length},
          {"energy", s.energy},
          {"multiplicity", std::string(to_string(s.multiplicity))}};
}

/// Header qx,qy[,qz,...],label,energy,clusters. Energy is "nan" when the
/// point has no converged result.
inline std::string scan_map_to_csv(const ScanMap& m) {
  static const char* axis_names[] = {"qx", "qy", "qz"};
  std::string out;
  const std::size_t dim = m.shape.size();
  for (std::size_t k = 0; k < dim; ++k) {
    out += k < 3 ? std::string(axis_names[k]) : "q" + std::to_string(k);
    out += ',';
  }
  out += "label,energy,clusters\n";
  for (std::size_t f = 0; f < m.size(); ++f) {
    for (std::size_t k = 0; k < dim; ++k) {
      out += format_double(m.points[f](static_cast<Eigen::Index>(k)));
      out += ',';
    }
    out += to_string(m.labels[f]);
    out += ',';
    out += std::isfinite(m.energies[f]) ? format_double(m.energies[f]) : "nan";
    out += ',';
    out += std::to_string(m.cluster_counts[f]);
    out += '\n';
  }
  return out;
}

/// Scan metadata, label counts and the dimension estimate (null with a reason
/// when unavailable). Per-point data is included when with_points is set.
inline nlohmann::json scan_map_to_json(const ScanMap& m, const ConvexObstacle& obstacle,
                                       std::optional<double> dimension, const std::string& dimension_note,
                                       bool with_points) {
  int counts[4] = {0, 0, 0, 0};
  for (auto l : m.labels) ++counts[static_cast<int>(l)];
  nlohmann::json j{{"schema_version", kSchemaVersion},
                   {"obstacle", obstacle_to_json(obstacle)},
                   {"p", detail::point_json(m.p)},
                   {"region", {{"lo", detail::point_json(m.region.lo)}, {"hi", detail::point_json(m.region.hi)}}},
                   {"delta", m.delta},
                   {"shape", m.shape},
                   {"counts",
                    {{"Unique", counts[0]}, {"NonUnique", counts[1]}, {"Infeasible", counts[2]}, {"Unconverged", counts[3]}}},
                   {"dimension_estimate", dimension ? nlohmann::json(*dimension) : nlohmann::json(nullptr)}};
  if (!dimension_note.empty()) j["dimension_note"] = dimension_note;
  if (with_points) {
    nlohmann::json pts = nlohmann::json::array();
    for (std::size_t f = 0; f < m.size(); ++f)
      pts.push_back({{"q", detail::point_json(m.points[f])},
                     {"label", std::string(to_string(m.labels[f]))},
                     {"energy", detail::number_json(m.energies[f])},
                     {"clusters", m.cluster_counts[f]}});
    j["points"] = std::move(pts);
  }
  return j;
}

}  // namespace obstacle_path
