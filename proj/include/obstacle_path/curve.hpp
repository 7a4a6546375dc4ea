#pragma once

/// \file curve.hpp
/// Polygonal curves on the uniform parameter grid t_i = i / N.
///
/// The discrete energy N * sum |x_{i+1} - x_i|^2 is the exact energy of the
/// piecewise-linear interpolant, so length^2 <= energy holds exactly (discrete
/// Cauchy-Schwarz) with equality iff all segments have equal length.

#include <algorithm>
#include <cmath>
#include <utility>

#include "obstacle_path/error.hpp"
#include "obstacle_path/obstacle.hpp"

namespace obstacle_path {

class DiscreteCurve {
 public:
  explicit DiscreteCurve(Nodes nodes) : nodes_(std::move(nodes)) {
    if (nodes_.cols() < 2) throw Error(ErrorCode::InvalidArgument, "a curve needs at least two nodes");
    if (nodes_.rows() < 1) throw Error(ErrorCode::InvalidArgument, "a curve needs a positive dimension");
    if (!nodes_.allFinite()) throw Error(ErrorCode::InvalidArgument, "curve nodes must be finite");
  }

  /// Uniformly sampled straight segment from p to q with n_segments pieces.
  static DiscreteCurve straight(const PointRef& p, const PointRef& q, int n_segments) {
    if (n_segments < 1) throw Error(ErrorCode::InvalidArgument, "n_segments must be >= 1");
    if (p.size() != q.size()) throw Error(ErrorCode::InvalidArgument, "endpoint dimensions differ");
    Nodes x(p.size(), n_segments + 1);
    for (int i = 0; i <= n_segments; ++i) {
      const double t = static_cast<double>(i) / n_segments;
      x.col(i) = (1.0 - t) * p + t * q;
    }
    x.col(0) = p;
    x.col(n_segments) = q;
    return DiscreteCurve(std::move(x));
  }

  int dimension() const { return static_cast<int>(nodes_.rows()); }
  int segments() const { return static_cast<int>(nodes_.cols()) - 1; }
  const Nodes& nodes() const { return nodes_; }
  auto node(int i) const { return nodes_.col(i); }
  auto front() const { return nodes_.col(0); }
  auto back() const { return nodes_.col(nodes_.cols() - 1); }

 private:
  Nodes nodes_;
};

inline double energy(const Nodes& x) {
  const Eigen::Index n = x.cols() - 1;
  return static_cast<double>(n) * (x.rightCols(n) - x.leftCols(n)).colwise().squaredNorm().sum();
}

inline double length(const Nodes& x) {
  const Eigen::Index n = x.cols() - 1;
  return (x.rightCols(n) - x.leftCols(n)).colwise().norm().sum();
}

inline double energy(const DiscreteCurve& c) { return energy(c.nodes()); }
inline double length(const DiscreteCurve& c) { return length(c.nodes()); }

/// (max - min) / mean of the segment lengths; 0 for a degenerate curve.
inline double speed_variation(const DiscreteCurve& c) {
  const auto& x = c.nodes();
  const Eigen::Index n = x.cols() - 1;
  const Eigen::RowVectorXd seg = (x.rightCols(n) - x.leftCols(n)).colwise().norm();
  const double mean = seg.mean();
  if (!(mean > 0.0)) return 0.0;
  return (seg.maxCoeff() - seg.minCoeff()) / mean;
}

/// Places the nodes at equal arclength along the same polyline. Endpoints
/// are copied exactly.
inline DiscreteCurve reparameterize_constant_speed(const DiscreteCurve& c) {
  const auto& x = c.nodes();
  const int n = c.segments();
  Eigen::VectorXd cum(n + 1);
  cum(0) = 0.0;
  for (int i = 0; i < n; ++i) cum(i + 1) = cum(i) + (x.col(i + 1) - x.col(i)).norm();
  const double total = cum(n);
  if (!(total >= 1e-14)) throw Error(ErrorCode::DegenerateCurve, "curve length below 1e-14");

  Nodes out(x.rows(), n + 1);
  out.col(0) = x.col(0);
  out.col(n) = x.col(n);
  int seg = 0;
  for (int i = 1; i < n; ++i) {
    const double s = total * static_cast<double>(i) / n;
    while (seg < n - 1 && cum(seg + 1) < s) ++seg;
    const double span = cum(seg + 1) - cum(seg);
    const double w = span > 0.0 ? std::clamp((s - cum(seg)) / span, 0.0, 1.0) : 0.0;
    out.col(i) = (1.0 - w) * x.col(seg) + w * x.col(seg + 1);
  }
  return DiscreteCurve(std::move(out));
}

/// Inserts factor - 1 equally spaced nodes into every segment.
inline DiscreteCurve refine(const DiscreteCurve& c, int factor) {
  if (factor < 2) throw Error(ErrorCode::InvalidArgument, "refine factor must be >= 2");
  const auto& x = c.nodes();
  const int n = c.segments();
  Nodes out(x.rows(), n * factor + 1);
  for (int i = 0; i < n; ++i) {
    out.col(i * factor) = x.col(i);
    for (int k = 1; k < factor; ++k) {
      const double w = static_cast<double>(k) / factor;
      out.col(i * factor + k) = (1.0 - w) * x.col(i) + w * x.col(i + 1);
    }
  }
  out.col(n * factor) = x.col(n);
  return DiscreteCurve(std::move(out));
}

/// Max over interior nodes of |x_{i+1} - 2 x_i + x_{i-1}| / h^2 with
/// h = length / N. Throws NotConstantSpeed when the segment lengths vary by
/// more than 1%.
inline double max_discrete_curvature(const DiscreteCurve& c) {
  if (speed_variation(c) > 0.01) throw Error(ErrorCode::NotConstantSpeed, "segment lengths vary by more than 1%");
  const auto& x = c.nodes();
  const int n = c.segments();
  if (n < 2) return 0.0;
  const double h = length(c) / n;
  if (!(h > 0.0)) throw Error(ErrorCode::DegenerateCurve, "zero-length curve");
  const double acc = (x.rightCols(n - 1) - 2.0 * x.middleCols(1, n - 1) + x.leftCols(n - 1))
                         .colwise()
                         .norm()
                         .maxCoeff();
  return acc / (h * h);
}

/// Every node satisfies phi(node) >= -tol (default boundary_tol).
inline bool is_feasible(const DiscreteCurve& c, const ConvexObstacle& obstacle, double tol = -1.0) {
  const double t = tol >= 0.0 ? tol : obstacle.boundary_tol();
  for (int i = 0; i <= c.segments(); ++i)
    if (obstacle.level(c.node(i)) < -t) return false;
  return true;
}

}  // namespace obstacle_path
