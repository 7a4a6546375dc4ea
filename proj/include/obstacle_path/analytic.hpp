#pragma once

/// \file analytic.hpp
/// Closed-form constructions: vision boundaries (tangency sets seen from an
/// exterior point) and the exact segment-arc-segment minimizer around a
/// sphere.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "obstacle_path/curve.hpp"
#include "obstacle_path/obstacle.hpp"
#include "obstacle_path/optimizer.hpp"

namespace obstacle_path {

/// Boundary points x where the segment from p is tangent, with their
/// tangency residuals (x - p) . nu(x).
struct VisionBoundarySample {
  std::vector<Point> points;
  std::vector<double> residuals;
};

enum class Multiplicity { Unique, RotationalFamily };

constexpr std::string_view to_string(Multiplicity m) noexcept {
  return m == Multiplicity::Unique ? "Unique" : "RotationalFamily";
}

struct SphereSolution {
  Point tangent_point_p;
  Point tangent_point_q;
  double arc_angle = 0.0;
  double length = 0.0;
  double energy = 0.0;
  Multiplicity multiplicity = Multiplicity::Unique;

  // Construction data needed to discretize the arc.
  Point center;
  double radius = 1.0;
  Point p;
  Point q;
  bool segment_case = true;
};

namespace detail {

/// Unit directions spanning the complement of u: both signs in R^2, n evenly
/// spaced angles in R^3, deterministic pseudo-random directions above.
inline std::vector<Point> complement_directions(const Point& u, int n_samples) {
  const Eigen::MatrixXd comp = orthogonal_complement(u);
  const Eigen::Index n = u.size();
  std::vector<Point> dirs;
  if (n == 2) {
    dirs.push_back(comp.col(0));
    dirs.push_back(-comp.col(0));
    return dirs;
  }
  const int count = std::max(n_samples, 1);
  if (n == 3) {
    for (int k = 0; k < count; ++k) {
      const double a = 2.0 * std::numbers::pi * k / count;
      dirs.push_back(std::cos(a) * comp.col(0) + std::sin(a) * comp.col(1));
    }
    return dirs;
  }
  SplitMix rng{0xA5A5A5A5ULL};
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd c(n - 1);
    for (Eigen::Index j = 0; j < n - 1; ++j) c(j) = rng.gaussian();
    dirs.push_back(comp * c.normalized());
  }
  return dirs;
}

inline double point_segment_distance(const Point& x, const Point& a, const Point& b) {
  const Point d = b - a;
  const double dd = d.squaredNorm();
  const double t = dd > 0.0 ? std::clamp((x - a).dot(d) / dd, 0.0, 1.0) : 0.0;
  return (a + t * d - x).norm();
}

}  // namespace detail

/// Vision boundary of p. For a sphere this is the (n-2)-sphere
/// {x on the boundary : (x - c) . (p - c) = r^2}; for other obstacles each
/// sample is found by bisection of the tangency function along a planar
/// boundary arc from the point facing p to the point facing away.
inline VisionBoundarySample vision_boundary(const ConvexObstacle& obstacle, const PointRef& p, int n_samples) {
  if (p.size() != obstacle.dimension())
    throw Error(ErrorCode::InvalidArgument, "point dimension does not match the obstacle");
  if (!obstacle.strictly_exterior(p))
    throw Error(ErrorCode::InfeasiblePoint, "p must lie strictly outside the obstacle");
  const Point& c = obstacle.center();
  const Point u = (p - c).normalized();
  const auto dirs = detail::complement_directions(u, n_samples);

  VisionBoundarySample out;
  auto push = [&](Point x) {
    out.residuals.push_back((x - p).dot(obstacle.normal(x)));
    out.points.push_back(std::move(x));
  };

  if (const auto* s = obstacle.as_sphere()) {
    const double d = (p - c).norm();
    const double r = s->radius;
    const double cos_a = r / d;
    const double sin_a = std::sqrt(std::max(0.0, 1.0 - cos_a * cos_a));
    for (const auto& w : dirs) push(c + r * (cos_a * u + sin_a * w));
    return out;
  }

  for (const auto& w : dirs) {
    auto tangency = [&](double theta) {
      const Point b = obstacle.boundary_point_along_ray(std::cos(theta) * u + std::sin(theta) * w);
      return (b - p).dot(obstacle.normal(b));
    };
    double lo = 0.0, hi = std::numbers::pi;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      (tangency(mid) < 0.0 ? lo : hi) = mid;
    }
    const double theta = 0.5 * (lo + hi);
    push(obstacle.boundary_point_along_ray(std::cos(theta) * u + std::sin(theta) * w));
  }
  return out;
}

/// Exact minimizer around the sphere |x - center| = radius.
///
/// If the segment pq stays outside the open ball (distance to the center at
/// least radius * (1 - 1e-12)) the minimizer is the segment itself. Otherwise,
/// in the plane through p, q and the center, the curve runs along the tangent
/// from p, over the great-circle arc of angle theta - alpha_p - alpha_q, and
/// along the tangent to q, where alpha = arccos(r / |x - c|) and theta is the
/// angle between p - c and q - c. p, c, q collinear with c between them gives
/// a rotational family of minimizers; the returned one lies in a fixed plane.
inline SphereSolution solve_sphere(const PointRef& center, double radius, const PointRef& p, const PointRef& q) {
  if (p.size() != center.size() || q.size() != center.size())
    throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
  const Point c = center;
  const Point dp = p - c;
  const Point dq = q - c;
  const double np = dp.norm();
  const double nq = dq.norm();
  if (!(np > radius)) throw Error(ErrorCode::InfeasiblePoint, "p is inside or on the sphere");
  if (!(nq > radius)) throw Error(ErrorCode::InfeasiblePoint, "q is inside or on the sphere");

  SphereSolution sol;
  sol.center = c;
  sol.radius = radius;
  sol.p = p;
  sol.q = q;

  const Point e1 = dp / np;
  Point perp = dq - dq.dot(e1) * e1;
  const double perp_norm = perp.norm();
  const double cos_theta = std::clamp(e1.dot(dq) / nq, -1.0, 1.0);
  const double sin_theta = perp_norm / nq;
  const double theta = std::atan2(sin_theta, cos_theta);
  const bool collinear_opposite = sin_theta < 1e-9 && cos_theta < 0.0;

  const double dist = detail::point_segment_distance(c, p, q);
  if (dist >= radius * (1.0 - 1e-12)) {
    sol.segment_case = true;
    sol.arc_angle = 0.0;
    sol.length = (q - p).norm();
    sol.energy = sol.length * sol.length;
    sol.multiplicity = Multiplicity::Unique;
    sol.tangent_point_p = p;
    sol.tangent_point_q = q;
    return sol;
  }

  Point e2;
  if (perp_norm > 1e-12 * nq && !collinear_opposite) {
    e2 = perp / perp_norm;
  } else {
    e2 = detail::orthogonal_complement(e1).col(0);
  }
  const double alpha_p = std::acos(radius / np);
  const double alpha_q = std::acos(radius / nq);
  const double arc = theta - alpha_p - alpha_q;
  if (arc < -1e-9) throw Error(ErrorCode::InvalidArgument, "inconsistent sphere geometry: negative arc");

  sol.segment_case = false;
  sol.arc_angle = std::max(arc, 0.0);
  sol.tangent_point_p = c + radius * (std::cos(alpha_p) * e1 + std::sin(alpha_p) * e2);
  sol.tangent_point_q = c + radius * (std::cos(theta - alpha_q) * e1 + std::sin(theta - alpha_q) * e2);
  sol.length = std::sqrt(np * np - radius * radius) + std::sqrt(nq * nq - radius * radius) +
               radius * sol.arc_angle;
  sol.energy = sol.length * sol.length;
  sol.multiplicity = collinear_opposite ? Multiplicity::RotationalFamily : Multiplicity::Unique;
  return sol;
}

inline SphereSolution solve_sphere(const ConvexObstacle& obstacle, const PointRef& p, const PointRef& q) {
  const auto* s = obstacle.as_sphere();
  if (s == nullptr) throw Error(ErrorCode::InvalidArgument, "closed form requires a sphere obstacle");
  return solve_sphere(s->center, s->radius, p, q);
}

/// Constant-speed discretization of a sphere solution. Segments are
/// distributed over the three pieces in proportion to their lengths (largest
/// remainder rounding, at least one per non-empty piece).
inline DiscreteCurve sphere_solution_to_curve(const SphereSolution& sol, int n_segments) {
  if (n_segments < 8) throw Error(ErrorCode::InvalidArgument, "n_segments must be >= 8");
  if (sol.segment_case || sol.arc_angle <= 0.0) return DiscreteCurve::straight(sol.p, sol.q, n_segments);

  const double lens[3] = {(sol.tangent_point_p - sol.p).norm(), sol.radius * sol.arc_angle,
                          (sol.q - sol.tangent_point_q).norm()};
  const double total = lens[0] + lens[1] + lens[2];
  int counts[3];
  double rem[3];
  int used = 0;
  for (int k = 0; k < 3; ++k) {
    const double share = n_segments * lens[k] / total;
    counts[k] = static_cast<int>(std::floor(share));
    rem[k] = share - counts[k];
    if (lens[k] > 0.0 && counts[k] == 0) {
      counts[k] = 1;
      rem[k] = -1.0;
    }
    used += counts[k];
  }
  while (used < n_segments) {
    const int k = static_cast<int>(std::max_element(rem, rem + 3) - rem);
    ++counts[k];
    rem[k] = -1.0;
    ++used;
  }
  while (used > n_segments) {
    int k = 0;
    for (int j = 1; j < 3; ++j)
      if (counts[j] > counts[k]) k = j;
    --counts[k];
    --used;
  }

  const Point a = (sol.tangent_point_p - sol.center) / sol.radius;
  const Point b = (sol.tangent_point_q - sol.center) / sol.radius;
  Point b_perp = b - a.dot(b) * a;
  const double bpn = b_perp.norm();
  const Point w = bpn > 0.0 ? Point(b_perp / bpn) : Point(Point::Zero(a.size()));

  Nodes x(sol.p.size(), n_segments + 1);
  int idx = 0;
  for (int i = 0; i < counts[0]; ++i) {
    const double t = static_cast<double>(i) / counts[0];
    x.col(idx++) = (1.0 - t) * sol.p + t * sol.tangent_point_p;
  }
  for (int i = 0; i < counts[1]; ++i) {
    const double ang = sol.arc_angle * static_cast<double>(i) / counts[1];
    x.col(idx++) = sol.center + sol.radius * (std::cos(ang) * a + std::sin(ang) * w);
  }
  for (int i = 0; i <= counts[2]; ++i) {
    const double t = static_cast<double>(i) / counts[2];
    x.col(idx++) = (1.0 - t) * sol.tangent_point_q + t * sol.q;
  }
  x.col(0) = sol.p;
  x.col(n_segments) = sol.q;
  return DiscreteCurve(std::move(x));
}

}  // namespace obstacle_path
