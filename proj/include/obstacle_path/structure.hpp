#pragma once

/// \file structure.hpp
/// Structural checks for candidate minimizers: a single contact interval of
/// at least two nodes, straight free parts tangent to the obstacle where they
/// meet it, a geodesic contact part, the constrained Euler-Lagrange residual
/// and the curvature bound.
///
/// Junction nodes (first and last node of a contact run) are excluded from
/// the geodesic and Euler-Lagrange statistics: the minimizer is C^{1,1} and
/// its curvature jumps there, so the discrete second difference straddles
/// the jump.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "obstacle_path/curve.hpp"
#include "obstacle_path/obstacle.hpp"

namespace obstacle_path {

/// Inclusive node index interval.
struct IndexRun {
  int first = 0;
  int last = 0;
  int size() const { return last - first + 1; }
  friend bool operator==(const IndexRun&, const IndexRun&) = default;
};

struct StructureTolerances {
  double contact_tol = 0.0;  // 0 selects 1e-6 * diameter
  double straightness = 1e-6;
  double tangency = 1e-4;
  double geodesic = 5e-3;
  double curvature_slack = 0.05;
  double junction_angle = 0.0;  // 0 selects 4 pi / N
  double speed_variation = 0.01;

  double contact_tol_for(const ConvexObstacle& o) const {
    return contact_tol > 0.0 ? contact_tol : 1e-6 * o.diameter();
  }
  double junction_angle_for(int n_segments) const {
    return junction_angle > 0.0 ? junction_angle : 4.0 * std::numbers::pi / n_segments;
  }
};

struct StructureReport {
  int n_segments = 0;
  bool through_obstacle = false;
  std::vector<IndexRun> coincidence_runs;
  double straightness_residual = 0.0;
  /// Gap between the free line from p (through the first contact node) and
  /// the boundary, |phi_min / |grad phi||, relative to the line's length.
  double tangency_residual_p = 0.0;
  double tangency_residual_q = 0.0;
  /// |(x_a - p) . nu(x_a)| / |x_a - p| at the first contact node itself.
  /// For a discrete minimizer this is bounded by kappa_max * h, not by a
  /// fixed tolerance, because the true tangent point lies between nodes.
  double node_tangency_p = 0.0;
  double node_tangency_q = 0.0;
  double geodesic_residual = 0.0;
  double el_residual = 0.0;           // interior non-junction nodes, divided by speed^2
  double el_junction_residual = 0.0;  // junction nodes, divided by speed^2
  double curvature_ratio = 0.0;
  double junction_angle = 0.0;
  double speed_variation = 0.0;
  double endpoint_error = 0.0;
  double min_level = 0.0;
  bool passed = false;
  std::vector<std::string> failures;
};

/// Maximal runs of consecutive nodes with |phi| <= contact_tol.
inline std::vector<IndexRun> extract_coincidence(const DiscreteCurve& curve, const ConvexObstacle& obstacle,
                                                 double contact_tol) {
  std::vector<IndexRun> runs;
  const int n = curve.segments();
  int start = -1;
  for (int i = 0; i <= n; ++i) {
    const bool contact = std::abs(obstacle.level(curve.node(i))) <= contact_tol;
    if (contact && start < 0) start = i;
    if (!contact && start >= 0) {
      runs.push_back({start, i - 1});
      start = -1;
    }
  }
  if (start >= 0) runs.push_back({start, n});
  return runs;
}

struct ElResidualProfile {
  /// |N^2 D^2 u_i - A(Du_i, Du_i) chi_i| per node; endpoints are 0.
  std::vector<double> residual;
  std::vector<int> junction_nodes;
  std::vector<double> junction_residual;
  /// Largest residual over interior nodes that are not junctions.
  double interior_max = 0.0;
  /// Largest residual over contact nodes that are not junctions.
  double contact_interior_max = 0.0;
};

namespace detail {

inline bool is_junction(const std::vector<IndexRun>& runs, int i) {
  for (const auto& r : runs)
    if (i == r.first || i == r.last) return true;
  return false;
}

inline ElResidualProfile el_profile_unchecked(const DiscreteCurve& curve, const ConvexObstacle& obstacle,
                                              const std::vector<IndexRun>& runs) {
  const int n = curve.segments();
  const double nn = static_cast<double>(n) * n;
  const auto& x = curve.nodes();
  std::vector<char> contact(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& r : runs)
    for (int i = r.first; i <= r.last; ++i) contact[static_cast<std::size_t>(i)] = 1;

  ElResidualProfile prof;
  prof.residual.assign(static_cast<std::size_t>(n) + 1, 0.0);
  for (int i = 1; i < n; ++i) {
    Point acc = nn * (x.col(i + 1) - 2.0 * x.col(i) + x.col(i - 1));
    if (contact[static_cast<std::size_t>(i)]) {
      const Point vel = 0.5 * n * (x.col(i + 1) - x.col(i - 1));
      acc -= obstacle.second_fundamental_form_projected(x.col(i), vel);
    }
    const double r = acc.norm();
    prof.residual[static_cast<std::size_t>(i)] = r;
    if (is_junction(runs, i)) {
      prof.junction_nodes.push_back(i);
      prof.junction_residual.push_back(r);
    } else {
      prof.interior_max = std::max(prof.interior_max, r);
      if (contact[static_cast<std::size_t>(i)]) prof.contact_interior_max = std::max(prof.contact_interior_max, r);
    }
  }
  return prof;
}

inline double turning_angle(const Point& a, const Point& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  const Point ua = a / na, ub = b / nb;
  return 2.0 * std::atan2((ua - ub).norm(), (ua + ub).norm());
}

/// Relative gap between the line from `from` through `contact` and the
/// boundary, and the nodal tangency at `contact`.
inline void tangency_measures(const ConvexObstacle& obstacle, const Point& from, const Point& contact,
                              double* gap_residual, double* node_residual) {
  const Point d = contact - from;
  const double len = d.norm();
  if (len == 0.0) {
    *gap_residual = 0.0;
    *node_residual = 0.0;
    return;
  }
  double t = 0.0;
  const double lvl = obstacle.min_level_on_segment(from, from + 2.0 * d, &t);
  const Point at = from + 2.0 * t * d;
  const double gn = obstacle.gradient(at).norm();
  *gap_residual = std::abs(lvl) / (gn * len);
  *node_residual = std::abs(d.dot(obstacle.normal(contact))) / len;
}

}  // namespace detail

/// Per-node Euler-Lagrange residual. Throws NotConstantSpeed when segment
/// lengths vary by more than speed_tol (default 1%).
inline ElResidualProfile el_residual_profile(const DiscreteCurve& curve, const ConvexObstacle& obstacle,
                                             double contact_tol = 0.0, double speed_tol = 0.01) {
  if (speed_variation(curve) > speed_tol)
    throw Error(ErrorCode::NotConstantSpeed, "segment lengths vary by more than " + std::to_string(speed_tol));
  const double tol = contact_tol > 0.0 ? contact_tol : 1e-6 * obstacle.diameter();
  return detail::el_profile_unchecked(curve, obstacle, extract_coincidence(curve, obstacle, tol));
}

/// Fills every report field and evaluates the pass/fail thresholds. A curve
/// that is not constant-speed is reported as a failure rather than thrown.
inline StructureReport verify_structure(const DiscreteCurve& curve, const ConvexObstacle& obstacle,
                                        const PointRef& p, const PointRef& q,
                                        const StructureTolerances& tols = {}) {
  if (curve.dimension() != obstacle.dimension() || p.size() != obstacle.dimension() ||
      q.size() != obstacle.dimension())
    throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  StructureReport rep;
  const int n = curve.segments();
  const auto& x = curve.nodes();
  rep.n_segments = n;
  rep.through_obstacle = !obstacle.segment_misses(p, q);
  const double contact_tol = tols.contact_tol_for(obstacle);
  rep.coincidence_runs = extract_coincidence(curve, obstacle, contact_tol);
  const auto& runs = rep.coincidence_runs;

  const double len = length(curve);
  const double h = len / n;
  const double speed2 = len * len;
  rep.speed_variation = speed_variation(curve);
  rep.endpoint_error = std::max((curve.front() - p).norm(), (curve.back() - q).norm());
  rep.min_level = obstacle.level(curve.node(0));
  for (int i = 1; i <= n; ++i) rep.min_level = std::min(rep.min_level, obstacle.level(curve.node(i)));

  // Free stretches between contact runs, including the endpoints of the runs.
  std::vector<IndexRun> free_parts;
  if (runs.empty()) {
    free_parts.push_back({0, n});
  } else {
    free_parts.push_back({0, runs.front().first});
    for (std::size_t k = 0; k + 1 < runs.size(); ++k) free_parts.push_back({runs[k].last, runs[k + 1].first});
    free_parts.push_back({runs.back().last, n});
  }
  for (const auto& part : free_parts) {
    if (part.size() < 3) continue;
    const Point a = x.col(part.first);
    const Point b = x.col(part.last);
    const Point d = b - a;
    const double chord = d.norm();
    if (chord == 0.0) continue;
    const Point u = d / chord;
    for (int i = part.first + 1; i < part.last; ++i) {
      const Point w = x.col(i) - a;
      const double dev = (w - w.dot(u) * u).norm() / chord;
      rep.straightness_residual = std::max(rep.straightness_residual, dev);
    }
  }

  if (!runs.empty()) {
    detail::tangency_measures(obstacle, p, x.col(runs.front().first), &rep.tangency_residual_p,
                              &rep.node_tangency_p);
    detail::tangency_measures(obstacle, q, x.col(runs.back().last), &rep.tangency_residual_q,
                              &rep.node_tangency_q);
  }

  for (const auto& r : runs) {
    for (int i = std::max(r.first + 1, 1); i <= std::min(r.last - 1, n - 1); ++i) {
      const Point acc = x.col(i + 1) - 2.0 * x.col(i) + x.col(i - 1);
      const double an = acc.norm();
      if (an == 0.0) continue;
      const Point nu = obstacle.normal(x.col(i));
      const Point tang = acc - acc.dot(nu) * nu;
      rep.geodesic_residual = std::max(rep.geodesic_residual, tang.norm() / an);
    }
    for (int i : {r.first, r.last}) {
      if (i <= 0 || i >= n) continue;
      rep.junction_angle =
          std::max(rep.junction_angle, detail::turning_angle(x.col(i) - x.col(i - 1), x.col(i + 1) - x.col(i)));
    }
  }

  if (n >= 2 && h > 0.0) {
    const ElResidualProfile prof = detail::el_profile_unchecked(curve, obstacle, runs);
    rep.el_residual = prof.interior_max / speed2;
    for (double v : prof.junction_residual) rep.el_junction_residual = std::max(rep.el_junction_residual, v / speed2);
    const double acc = (x.rightCols(n - 1) - 2.0 * x.middleCols(1, n - 1) + x.leftCols(n - 1))
                           .colwise()
                           .norm()
                           .maxCoeff();
    rep.curvature_ratio = acc / (h * h) / obstacle.kappa_max();
  }

  auto fail = [&](const std::string& what) { rep.failures.push_back(what); };
  const double scale = std::max({1.0, p.norm(), q.norm()});
  if (rep.endpoint_error > 1e-12 * scale) fail("endpoints do not match p and q");
  if (rep.min_level < -contact_tol) fail("curve enters the obstacle");
  if (rep.speed_variation > tols.speed_variation) fail("curve is not constant-speed");
  if (rep.through_obstacle) {
    if (runs.size() != 1) fail("expected exactly one coincidence run, found " + std::to_string(runs.size()));
    else if (runs.front().size() < 2) fail("coincidence run is a single node");
  } else if (!runs.empty()) {
    fail("segment case should not touch the obstacle");
  }
  if (rep.straightness_residual > tols.straightness) fail("free part is not straight");
  if (rep.tangency_residual_p > tols.tangency || rep.tangency_residual_q > tols.tangency)
    fail("free segment is not tangent to the obstacle");
  const double node_bound = obstacle.kappa_max() * h + tols.tangency;
  if (rep.node_tangency_p > node_bound || rep.node_tangency_q > node_bound)
    fail("contact node tangency exceeds kappa_max * h");
  if (rep.geodesic_residual > tols.geodesic) fail("contact part is not geodesic");
  if (rep.curvature_ratio > 1.0 + tols.curvature_slack) fail("curvature exceeds kappa_max");
  if (rep.junction_angle > tols.junction_angle_for(n)) fail("junction turning angle too large");
  rep.passed = rep.failures.empty();
  return rep;
}

}  // namespace obstacle_path
