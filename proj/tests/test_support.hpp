#pragma once

// Fixtures shared by the unit suites and the acceptance runner.

#include <cmath>
#include <initializer_list>
#include <numbers>
#include <random>

#include "obstacle_path/curve.hpp"
#include "obstacle_path/obstacle.hpp"

namespace obstacle_path::testing {

inline Point vec(std::initializer_list<double> v) {
  Point x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

inline ConvexObstacle unit_ball(int n) { return ConvexObstacle::sphere(Point::Zero(n), 1.0); }

inline Point random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> g;
  Point x(dim);
  for (int d = 0; d < dim; ++d) x(d) = g(rng);
  return x.normalized();
}

struct Excursion {
  DiscreteCurve curve;
  int first = 0;  // first lifted node
  int last = 0;   // last lifted node
};

/// Curve that runs along the boundary, lifts off between two boundary
/// nodes and lands again. Nodes outside the lifted stretch sit on the
/// boundary; the lifted ones are pushed out along the normal by a bump.
inline Excursion random_excursion(std::mt19937_64& rng, const ConvexObstacle& obstacle, int n_segments) {
  const int dim = obstacle.dimension();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Point a = random_unit(rng, dim);
  Point b = random_unit(rng, dim);
  b -= 0.8 * b.dot(a) * a;  // keep the endpoints well apart
  b.normalize();
  const Point wiggle = random_unit(rng, dim);
  const double amp = 0.3 * u(rng);

  Nodes x(dim, n_segments + 1);
  for (int i = 0; i <= n_segments; ++i) {
    const double t = static_cast<double>(i) / n_segments;
    Point dir = (1.0 - t) * a + t * b + amp * std::sin(std::numbers::pi * t) * wiggle;
    x.col(i) = obstacle.boundary_point_along_ray(dir.normalized());
  }
  const int first = 1 + static_cast<int>(u(rng) * n_segments / 3);
  const int last = n_segments - 1 - static_cast<int>(u(rng) * n_segments / 3);
  const double height = 0.01 + 0.5 * u(rng);
  const double skew = 0.5 + u(rng);
  for (int i = first; i <= last; ++i) {
    const double s = static_cast<double>(i - first + 1) / (last - first + 2);
    const double bump = height * std::pow(std::sin(std::numbers::pi * s), skew);
    const Point nu = obstacle.normal(x.col(i));
    x.col(i) += bump * nu;
  }
  return {DiscreteCurve(std::move(x)), first, last};
}

}  // namespace obstacle_path::testing
