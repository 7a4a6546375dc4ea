#pragma once

/// \file obstacle.hpp
/// Smooth bounded convex obstacles given by a level function phi, negative
/// inside, zero on the boundary and positive outside.
///
/// Three kinds are supported: spheres (phi = |x - c| - r), axis-aligned
/// ellipsoids (phi = sum((x_i - c_i) / a_i)^2 - 1) and user-supplied implicit
/// convex bodies. All queries are const and thread-safe.
///
/// Sign convention for the second fundamental form: for a tangent vector v at
/// a boundary point y, A(v, v) = -(v^T H v / |grad phi|) nu(y), so on the unit
/// sphere A(v, v) = -|v|^2 nu. With this convention the constrained
/// Euler-Lagrange equation reads u'' = A(u', u') on the contact set.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <variant>

#include <Eigen/Dense>

#include "obstacle_path/error.hpp"

namespace obstacle_path {

using Point = Eigen::VectorXd;
using Nodes = Eigen::MatrixXd;  // one node per column
using PointRef = Eigen::Ref<const Eigen::VectorXd>;

enum class Membership { Interior, Boundary, Exterior };

constexpr std::string_view to_string(Membership m) noexcept {
  switch (m) {
    case Membership::Interior: return "Interior";
    case Membership::Boundary: return "Boundary";
    case Membership::Exterior: return "Exterior";
  }
  return "Unknown";
}

struct Sphere {
  Point center;
  double radius = 1.0;
};

struct Ellipsoid {
  Point center;
  Point semi_axes;
};

/// Library-only obstacle described by user callbacks. phi must be convex and
/// negative at interior_point; diameter bounds the body and defines the
/// working region for projection (|x - interior_point| <= 4 * diameter).
struct ImplicitConvex {
  std::function<double(const Point&)> phi;
  std::function<Point(const Point&)> gradient;
  std::function<Eigen::MatrixXd(const Point&)> hessian;
  Point interior_point;
  double kappa_max = 0.0;
  double kappa_min = std::numeric_limits<double>::quiet_NaN();
  double diameter = 0.0;
};

class ConvexObstacle {
 public:
  static ConvexObstacle sphere(Point center, double radius) {
    if (center.size() < 2) throw Error(ErrorCode::InvalidArgument, "dimension must be >= 2");
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw Error(ErrorCode::InvalidArgument, "sphere radius must be positive");
    return ConvexObstacle(Sphere{std::move(center), radius});
  }

  static ConvexObstacle ellipsoid(Point center, Point semi_axes) {
    if (center.size() < 2) throw Error(ErrorCode::InvalidArgument, "dimension must be >= 2");
    if (semi_axes.size() != center.size())
      throw Error(ErrorCode::InvalidArgument, "semi_axes must have one entry per dimension");
    if (!(semi_axes.array() > 0.0).all() || !semi_axes.allFinite())
      throw Error(ErrorCode::InvalidArgument, "semi_axes must be positive");
    return ConvexObstacle(Ellipsoid{std::move(center), std::move(semi_axes)});
  }

  /// Builds an implicit obstacle and spot-checks it: the gradient must not
  /// vanish and the tangential Hessian must be positive semidefinite at
  /// `samples` boundary points. Throws DegenerateGradient / NonConvex.
  static ConvexObstacle implicit(ImplicitConvex spec, int samples = 256) {
    if (!spec.phi || !spec.gradient || !spec.hessian)
      throw Error(ErrorCode::InvalidArgument, "implicit obstacle needs phi, gradient and hessian");
    if (spec.interior_point.size() < 2)
      throw Error(ErrorCode::InvalidArgument, "dimension must be >= 2");
    if (!(spec.kappa_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "kappa_max must be positive");
    if (!(spec.diameter > 0.0)) throw Error(ErrorCode::InvalidArgument, "diameter must be positive");
    if (!(spec.phi(spec.interior_point) < 0.0))
      throw Error(ErrorCode::InvalidArgument, "interior_point is not inside the obstacle");
    ConvexObstacle obstacle(std::move(spec));
    obstacle.spot_check_convexity(samples);
    return obstacle;
  }

  int dimension() const {
    return std::visit([](const auto& s) -> int { return static_cast<int>(center_of(s).size()); },
                      shape_);
  }

  bool is_sphere() const { return std::holds_alternative<Sphere>(shape_); }
  bool is_ellipsoid() const { return std::holds_alternative<Ellipsoid>(shape_); }
  bool is_implicit() const { return std::holds_alternative<ImplicitConvex>(shape_); }
  const Sphere* as_sphere() const { return std::get_if<Sphere>(&shape_); }
  const Ellipsoid* as_ellipsoid() const { return std::get_if<Ellipsoid>(&shape_); }

  std::string kind_name() const {
    if (is_sphere()) return "sphere";
    if (is_ellipsoid()) return "ellipsoid";
    return "implicit";
  }

  /// Center for spheres and ellipsoids, the supplied interior point otherwise.
  const Point& center() const {
    return std::visit([](const auto& s) -> const Point& { return center_of(s); }, shape_);
  }

  double diameter() const {
    if (const auto* s = as_sphere()) return 2.0 * s->radius;
    if (const auto* e = as_ellipsoid()) return 2.0 * e->semi_axes.maxCoeff();
    return std::get<ImplicitConvex>(shape_).diameter;
  }

  /// Radius of a ball around center() containing the obstacle.
  double circumradius() const {
    if (const auto* s = as_sphere()) return s->radius;
    if (const auto* e = as_ellipsoid()) return e->semi_axes.maxCoeff();
    return std::get<ImplicitConvex>(shape_).diameter;
  }

  double boundary_tol() const { return 1e-9 * diameter(); }

  /// For an ellipsoid with semi-axes a >= ... >= c this is a / c^2.
  double kappa_max() const {
    if (const auto* s = as_sphere()) return 1.0 / s->radius;
    if (const auto* e = as_ellipsoid()) {
      const double lo = e->semi_axes.minCoeff();
      return e->semi_axes.maxCoeff() / (lo * lo);
    }
    return std::get<ImplicitConvex>(shape_).kappa_max;
  }

  /// Smallest principal curvature; NaN when unknown (implicit without a hint).
  double kappa_min() const {
    if (const auto* s = as_sphere()) return 1.0 / s->radius;
    if (const auto* e = as_ellipsoid()) {
      const double hi = e->semi_axes.maxCoeff();
      return e->semi_axes.minCoeff() / (hi * hi);
    }
    return std::get<ImplicitConvex>(shape_).kappa_min;
  }

  double level(const PointRef& x) const {
    if (const auto* s = as_sphere()) return (x - s->center).norm() - s->radius;
    if (const auto* e = as_ellipsoid())
      return ((x - e->center).array() / e->semi_axes.array()).square().sum() - 1.0;
    return std::get<ImplicitConvex>(shape_).phi(Point(x));
  }

  Point gradient(const PointRef& x) const {
    if (const auto* s = as_sphere()) {
      Point d = x - s->center;
      const double n = d.norm();
      if (n == 0.0) throw Error(ErrorCode::DegenerateGradient, "gradient undefined at sphere center");
      return d / n;
    }
    if (const auto* e = as_ellipsoid())
      return (2.0 * (x - e->center).array() / e->semi_axes.array().square()).matrix();
    return std::get<ImplicitConvex>(shape_).gradient(Point(x));
  }

  Eigen::MatrixXd hessian(const PointRef& x) const {
    const int n = dimension();
    if (const auto* s = as_sphere()) {
      Point d = x - s->center;
      const double r = d.norm();
      if (r == 0.0) throw Error(ErrorCode::DegenerateGradient, "hessian undefined at sphere center");
      Point u = d / r;
      return (Eigen::MatrixXd::Identity(n, n) - u * u.transpose()) / r;
    }
    if (const auto* e = as_ellipsoid())
      return (2.0 / e->semi_axes.array().square()).matrix().asDiagonal();
    return std::get<ImplicitConvex>(shape_).hessian(Point(x));
  }

  Membership contains(const PointRef& x, double tol) const {
    const double v = level(x);
    if (std::abs(v) <= tol) return Membership::Boundary;
    return v < 0.0 ? Membership::Interior : Membership::Exterior;
  }
  Membership contains(const PointRef& x) const { return contains(x, boundary_tol()); }

  bool strictly_exterior(const PointRef& x) const {
    return contains(x) == Membership::Exterior;
  }

  /// Nearest boundary point. A point exactly at the center of a sphere or on
  /// the degenerate axis of an ellipsoid is first nudged by 1e-9 * diameter
  /// along a fixed coordinate direction.
  Point project_to_boundary(const PointRef& x) const {
    Point y = x;
    project_in_place(y);
    return y;
  }

  void project_in_place(Eigen::Ref<Eigen::VectorXd> x) const {
    if (const auto* s = as_sphere()) {
      const double n = (x - s->center).norm();
      if (n == 0.0) {
        x(0) += 1e-9 * diameter();
        project_in_place(x);
        return;
      }
      x = s->center + (s->radius / n) * (x - s->center);
      return;
    }
    if (const auto* e = as_ellipsoid()) {
      project_ellipsoid(*e, x);
      return;
    }
    project_implicit(std::get<ImplicitConvex>(shape_), x);
  }

  /// Outward unit normal grad(phi)/|grad(phi)|.
  Point normal(const PointRef& y) const {
    Point g = gradient(y);
    const double n = g.norm();
    if (!(n > 1e-300)) throw Error(ErrorCode::DegenerateGradient, "vanishing gradient");
    return g / n;
  }

  /// A(v, v) for v tangent at y. Throws NotTangent if |v . nu| > 1e-8 |v|.
  Point second_fundamental_form(const PointRef& y, const PointRef& v) const {
    const Point nu = normal(y);
    const double vn = std::abs(v.dot(nu));
    if (vn > 1e-8 * std::max(v.norm(), std::numeric_limits<double>::min()) && vn > 0.0)
      throw Error(ErrorCode::NotTangent, "vector is not tangent to the boundary");
    return curvature_vector(y, nu, v);
  }

  /// A(P v, P v) where P removes the normal component of v; for discrete
  /// velocities that are only approximately tangent.
  Point second_fundamental_form_projected(const PointRef& y, const PointRef& v) const {
    const Point nu = normal(y);
    const Point vt = v - v.dot(nu) * nu;
    return curvature_vector(y, nu, vt);
  }

  /// Boundary point on the ray from center() in `direction`.
  Point boundary_point_along_ray(const PointRef& direction) const {
    const double dn = direction.norm();
    if (!(dn > 0.0)) throw Error(ErrorCode::InvalidArgument, "zero ray direction");
    const Point u = direction / dn;
    if (const auto* s = as_sphere()) return s->center + s->radius * u;
    if (const auto* e = as_ellipsoid()) {
      const double k = (u.array() / e->semi_axes.array()).square().sum();
      return e->center + u / std::sqrt(k);
    }
    const auto& imp = std::get<ImplicitConvex>(shape_);
    double lo = 0.0, hi = imp.diameter;
    while (imp.phi(imp.interior_point + hi * u) <= 0.0) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * imp.diameter; ++i) {
      const double mid = 0.5 * (lo + hi);
      (imp.phi(imp.interior_point + mid * u) < 0.0 ? lo : hi) = mid;
    }
    return imp.interior_point + 0.5 * (lo + hi) * u;
  }

  /// Minimum of phi over the segment a + t (b - a), t in [0, 1]. Writes the
  /// minimizing parameter to *t_min when non-null.
  double min_level_on_segment(const PointRef& a, const PointRef& b, double* t_min = nullptr) const {
    const Point d = b - a;
    const double dd = d.squaredNorm();
    double t = 0.0;
    if (dd > 0.0) {
      if (const auto* s = as_sphere()) {
        t = std::clamp((s->center - a).dot(d) / dd, 0.0, 1.0);
      } else if (const auto* e = as_ellipsoid()) {
        const Eigen::ArrayXd w = e->semi_axes.array().square().inverse();
        const double num = ((a - e->center).array() * d.array() * w).sum();
        const double den = (d.array().square() * w).sum();
        t = std::clamp(-num / den, 0.0, 1.0);
      } else {
        // phi is convex along the segment: golden-section search.
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double lo = 0.0, hi = 1.0;
        double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
        double f1 = level(a + x1 * d), f2 = level(a + x2 * d);
        for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
          if (f1 < f2) {
            hi = x2; x2 = x1; f2 = f1; x1 = hi - g * (hi - lo); f1 = level(a + x1 * d);
          } else {
            lo = x1; x1 = x2; f1 = f2; x2 = lo + g * (hi - lo); f2 = level(a + x2 * d);
          }
        }
        t = 0.5 * (lo + hi);
      }
    }
    if (t_min != nullptr) *t_min = t;
    return level(a + t * d);
  }

  /// True when the closed segment stays outside the open obstacle; touching
  /// the boundary (within boundary_tol) counts as missing.
  bool segment_misses(const PointRef& a, const PointRef& b) const {
    return min_level_on_segment(a, b) >= -boundary_tol();
  }

 private:
  using Shape = std::variant<Sphere, Ellipsoid, ImplicitConvex>;

  explicit ConvexObstacle(Shape shape) : shape_(std::move(shape)) {}

  static const Point& center_of(const Sphere& s) { return s.center; }
  static const Point& center_of(const Ellipsoid& e) { return e.center; }
  static const Point& center_of(const ImplicitConvex& i) { return i.interior_point; }

  Point curvature_vector(const PointRef& y, const Point& nu, const Point& vt) const {
    if (vt.squaredNorm() == 0.0) return Point::Zero(y.size());
    const double gnorm = gradient(y).norm();
    const double k = vt.dot(hessian(y) * vt) / gnorm;
    return -k * nu;
  }

  // Nearest point on an ellipsoid via the secular equation of the KKT system
  // y = x - mu grad(phi(y)): y_i = a_i^2 z_i / (a_i^2 + t), with t solving
  // f(t) = sum (a_i z_i / (a_i^2 + t))^2 - 1 = 0. f is convex and decreasing
  // right of its first pole, so Newton started left of the root is monotone.
  void project_ellipsoid(const Ellipsoid& e, Eigen::Ref<Eigen::VectorXd> x) const {
    const Eigen::Index n = x.size();
    const auto& a = e.semi_axes;
    Point z = x - e.center;
    const double amin = a.minCoeff();
    const double amax = a.maxCoeff();

    auto secular = [&](double t, double* df) {
      double f = -1.0, d = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double a2 = a(i) * a(i);
        const double q = a(i) * z(i) / (a2 + t);
        f += q * q;
        d -= 2.0 * q * q / (a2 + t);
      }
      *df = d;
      return f;
    };

    double dummy = 0.0;
    const double f0 = secular(0.0, &dummy);
    double t = 0.0;
    if (f0 > 0.0) {
      t = std::max(0.0, amin * z.norm() - amax * amax);
    } else if (f0 < 0.0) {
      double minor = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (a(i) == amin) minor += z(i) * z(i);
      if (minor == 0.0) {
        for (Eigen::Index i = 0; i < n; ++i)
          if (a(i) == amin) { z(i) += 1e-9 * diameter(); break; }
        minor = std::pow(1e-9 * diameter(), 2);
      }
      t = -amin * amin + amin * std::sqrt(minor);
    } else {
      return;  // already on the boundary
    }

    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      double df = 0.0;
      const double f = secular(t, &df);
      if (f <= 0.0 || df == 0.0) { converged = true; break; }
      const double step = f / -df;
      t += step;
      if (std::abs(step) <= 1e-12 * (std::abs(t) + amin * amin)) { converged = true; break; }
    }
    if (!converged) throw Error(ErrorCode::NonConvergence, "ellipsoid projection did not converge");
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a2 = a(i) * a(i);
      x(i) = e.center(i) + a2 * z(i) / (a2 + t);
    }
  }

  // Damped Newton on the KKT system [y - x + lambda grad(y); phi(y)] = 0,
  // started from the boundary point on the ray through x.
  void project_implicit(const ImplicitConvex& imp, Eigen::Ref<Eigen::VectorXd> x) const {
    const Eigen::Index n = x.size();
    const Point target = x;
    Point dir = target - imp.interior_point;
    if (dir.norm() == 0.0) dir(0) = 1e-9 * imp.diameter;
    if (dir.norm() > 4.0 * imp.diameter)
      throw Error(ErrorCode::InvalidArgument, "point outside the implicit obstacle working region");
    Point y = boundary_point_along_ray(dir);
    Point g = imp.gradient(y);
    double lambda = (target - y).dot(g) / g.squaredNorm();

    auto residual = [&](const Point& yy, double lam, Eigen::VectorXd& r) {
      const Point gg = imp.gradient(yy);
      r.resize(n + 1);
      r.head(n) = yy - target + lam * gg;
      r(n) = imp.phi(yy);
    };

    Eigen::VectorXd r;
    residual(y, lambda, r);
    const double scale = std::max(1.0, imp.diameter);
    for (int it = 0; it < 100; ++it) {
      if (r.norm() <= 1e-12 * scale) {
        x = y;
        return;
      }
      const Point gg = imp.gradient(y);
      Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n + 1, n + 1);
      jac.topLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n) + lambda * imp.hessian(y);
      jac.topRightCorner(n, 1) = gg;
      jac.bottomLeftCorner(1, n) = gg.transpose();
      const Eigen::VectorXd step = jac.fullPivLu().solve(-r);
      double damp = 1.0;
      Eigen::VectorXd trial_r;
      for (int k = 0; k < 30; ++k) {
        const Point ty = y + damp * step.head(n);
        const double tl = lambda + damp * step(n);
        residual(ty, tl, trial_r);
        if (trial_r.norm() < r.norm() || k == 29) {
          y = ty;
          lambda = tl;
          r = trial_r;
          break;
        }
        damp *= 0.5;
      }
    }
    if (r.norm() <= 1e-9 * scale) {
      x = y;
      return;
    }
    throw Error(ErrorCode::NonConvergence, "implicit projection did not converge");
  }

  void spot_check_convexity(int samples) const {
    const auto& imp = std::get<ImplicitConvex>(shape_);
    const int n = dimension();
    std::mt19937_64 rng(0x5eedULL);
    std::normal_distribution<double> gauss;
    for (int s = 0; s < samples; ++s) {
      Point dir(n);
      for (int i = 0; i < n; ++i) dir(i) = gauss(rng);
      const Point y = boundary_point_along_ray(dir);
      const Point g = imp.gradient(y);
      const double gn = g.norm();
      if (!(gn > 1e-12)) throw Error(ErrorCode::DegenerateGradient, "vanishing gradient on the boundary");
      const Point nu = g / gn;
      const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(n, n) - nu * nu.transpose();
      const Eigen::MatrixXd h = imp.hessian(y);
      const Eigen::MatrixXd tangential = proj * h * proj;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (tangential + tangential.transpose()));
      const double lo = eig.eigenvalues().minCoeff();
      if (lo < -1e-8 * std::max(1.0, h.norm()))
        throw Error(ErrorCode::NonConvex, "tangential Hessian is not positive semidefinite at a sampled boundary point");
    }
  }

  Shape shape_;
};

}  // namespace obstacle_path
