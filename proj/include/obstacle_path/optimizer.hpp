#pragma once

/// \file optimizer.hpp
/// Projected gradient descent on the discrete energy with multi-start
/// initialization.
///
/// Each iteration takes a gradient step and projects every interior node that
/// entered the obstacle back onto the boundary (nearest point). With step
/// size 1/L, L = 8N the Lipschitz constant of the gradient, the energy never
/// increases. Optional Nesterov extrapolation with function-value restart
/// keeps that guarantee (a step that would increase the energy is redone
/// without momentum) while cutting the iteration count from O(N^2) to O(N).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "obstacle_path/curve.hpp"
#include "obstacle_path/log.hpp"
#include "obstacle_path/obstacle.hpp"

namespace obstacle_path {

enum class StepRule { FixedStep, BacktrackingArmijo };

struct SolveConfig {
  int n_segments = 512;
  long max_iters = 200000;
  StepRule step_rule = StepRule::FixedStep;
  double step_size = 0.0;  // 0 selects 1 / (8N)
  double armijo_c = 1e-4;
  double armijo_shrink = 0.5;
  /// Convergence when max|gradient mapping| / N <= grad_tol.
  double grad_tol = 1e-10;
  int n_starts = 8;
  std::uint64_t seed = 0;
  bool momentum = true;
  /// Reparameterize to constant speed every this many iterations, but only
  /// while the segment lengths vary by more than reparam_trigger.
  int reparam_every = 500;
  double reparam_trigger = 1e-3;
  /// Stop early (unconverged) when the best stationarity seen has not
  /// improved by 10% over this many iterations. 0 disables.
  long stall_window = 20000;

  void validate() const {
    if (n_segments < 2) throw Error(ErrorCode::InvalidArgument, "n_segments must be >= 2");
    if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
    if (!(grad_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "grad_tol must be positive");
    if (n_starts < 1) throw Error(ErrorCode::InvalidArgument, "n_starts must be >= 1");
    if (step_size < 0.0) throw Error(ErrorCode::InvalidArgument, "step_size must be non-negative");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw Error(ErrorCode::InvalidArgument, "armijo_c must be in (0,1)");
    if (!(armijo_shrink > 0.0 && armijo_shrink < 1.0))
      throw Error(ErrorCode::InvalidArgument, "armijo_shrink must be in (0,1)");
    if (reparam_every < 1) throw Error(ErrorCode::InvalidArgument, "reparam_every must be >= 1");
  }
};

struct SolveResult {
  DiscreteCurve curve;         // constant speed, feasible
  double energy = 0.0;         // energy of `curve`
  double length = 0.0;
  double raw_energy = 0.0;     // energy of the last iterate before reparameterization
  double raw_length = 0.0;
  long iterations = 0;
  bool converged = false;
  int start_index = 0;
  double stationarity = 0.0;   // max|gradient mapping| / N at exit
  bool monotone = true;        // no accepted step increased the energy
};

inline bool any_converged(const std::vector<SolveResult>& results) {
  return std::any_of(results.begin(), results.end(), [](const SolveResult& r) { return r.converged; });
}

namespace detail {

/// splitmix64; deterministic across platforms.
struct SplitMix {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double gaussian() {
    const double u1 = std::max(uniform(), 1e-300);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
};

/// Orthonormal basis (columns) of the complement of the unit vector v.
inline Eigen::MatrixXd orthogonal_complement(const Point& v) {
  const Eigen::Index n = v.size();
  Eigen::MatrixXd basis(n, n - 1);
  Eigen::Index found = 0;
  for (Eigen::Index k = 0; k < n && found < n - 1; ++k) {
    Point e = Point::Unit(n, k);
    e -= e.dot(v) * v;
    for (Eigen::Index j = 0; j < found; ++j) e -= e.dot(basis.col(j)) * basis.col(j);
    const double en = e.norm();
    if (en > 1e-6) basis.col(found++) = e / en;
  }
  return basis;
}

inline void project_interior_nodes(Nodes& x, const ConvexObstacle& obstacle) {
  const Eigen::Index n = x.cols() - 1;
  for (Eigen::Index i = 1; i < n; ++i) {
    auto col = x.col(i);
    if (obstacle.level(col) < 0.0) obstacle.project_in_place(col);
  }
}

inline void energy_gradient(const Nodes& x, Nodes& g) {
  const Eigen::Index n = x.cols() - 1;
  g.resize(x.rows(), x.cols());
  g.col(0).setZero();
  g.col(n).setZero();
  g.middleCols(1, n - 1).noalias() =
      (2.0 * static_cast<double>(n)) * (2.0 * x.middleCols(1, n - 1) - x.leftCols(n - 1) - x.rightCols(n - 1));
}

/// Polyline through `waypoints` sampled at constant speed with n segments.
inline Nodes sample_polyline(const std::vector<Point>& waypoints, int n) {
  std::vector<double> cum{0.0};
  for (std::size_t k = 1; k < waypoints.size(); ++k)
    cum.push_back(cum.back() + (waypoints[k] - waypoints[k - 1]).norm());
  const double total = cum.back();
  Nodes x(waypoints.front().size(), n + 1);
  std::size_t seg = 0;
  for (int i = 0; i <= n; ++i) {
    const double s = total * static_cast<double>(i) / n;
    while (seg + 2 < waypoints.size() && cum[seg + 1] < s) ++seg;
    const double span = cum[seg + 1] - cum[seg];
    const double w = span > 0.0 ? std::clamp((s - cum[seg]) / span, 0.0, 1.0) : 0.0;
    x.col(i) = (1.0 - w) * waypoints[seg] + w * waypoints[seg + 1];
  }
  x.col(0) = waypoints.front();
  x.col(n) = waypoints.back();
  return x;
}

}  // namespace detail

/// Replaces every interior node with phi < 0 by its boundary projection.
inline DiscreteCurve project_curve_feasible(const DiscreteCurve& curve, const ConvexObstacle& obstacle) {
  Nodes x = curve.nodes();
  detail::project_interior_nodes(x, obstacle);
  return DiscreteCurve(std::move(x));
}

/// Replaces nodes first..last (inclusive, interior indices) by their boundary
/// projections regardless of which side they are on.
inline DiscreteCurve project_run_to_boundary(const DiscreteCurve& curve, const ConvexObstacle& obstacle,
                                             int first, int last) {
  if (first < 1 || last > curve.segments() - 1 || first > last)
    throw Error(ErrorCode::InvalidArgument, "run must lie strictly inside the curve");
  Nodes x = curve.nodes();
  for (int i = first; i <= last; ++i) {
    auto col = x.col(i);
    obstacle.project_in_place(col);
  }
  return DiscreteCurve(std::move(x));
}

inline void require_exterior_endpoints(const PointRef& p, const PointRef& q, const ConvexObstacle& obstacle) {
  if (p.size() != obstacle.dimension() || q.size() != obstacle.dimension())
    throw Error(ErrorCode::InvalidArgument, "endpoint dimension does not match the obstacle");
  if (!obstacle.strictly_exterior(p))
    throw Error(ErrorCode::InfeasibleEndpoints, "p is not strictly outside the obstacle");
  if (!obstacle.strictly_exterior(q))
    throw Error(ErrorCode::InfeasibleEndpoints, "q is not strictly outside the obstacle");
}

/// Feasible starting curves. When the segment pq misses the obstacle, start 0
/// is that segment; the remaining starts (all of them otherwise) bend around
/// the obstacle through a waypoint offset in a direction orthogonal to q - p:
/// alternating sides in R^2, evenly spaced angles with a seeded phase in R^3,
/// seeded random directions in higher dimensions.
inline std::vector<DiscreteCurve> initial_curves(const PointRef& p, const PointRef& q,
                                                 const ConvexObstacle& obstacle, int n_starts,
                                                 std::uint64_t seed, int n_segments = 512) {
  require_exterior_endpoints(p, q, obstacle);
  if (n_starts < 1) throw Error(ErrorCode::InvalidArgument, "n_starts must be >= 1");
  const int n = obstacle.dimension();
  std::vector<DiscreteCurve> starts;
  starts.reserve(static_cast<std::size_t>(n_starts));

  const Point v = q - p;
  const double dist = v.norm();
  const bool misses = obstacle.segment_misses(p, q);
  if (misses || dist < 1e-14) starts.push_back(DiscreteCurve::straight(p, q, n_segments));
  if (static_cast<int>(starts.size()) == n_starts || dist < 1e-14) return starts;

  const Point vhat = dist > 0.0 ? Point(v / dist) : Point(Point::Unit(n, 0));
  const Eigen::MatrixXd comp = detail::orthogonal_complement(vhat);
  const Point& c = obstacle.center();
  const double tc = dist > 0.0 ? std::clamp((c - p).dot(v) / (dist * dist), 0.0, 1.0) : 0.0;
  const Point m = p + tc * v;
  const double base = 1.5 * obstacle.circumradius() + (m - c).norm();

  detail::SplitMix rng{seed ^ 0xD1B54A32D192ED03ULL};
  const int n_detours = n_starts - static_cast<int>(starts.size());
  const double phase = rng.uniform() * 2.0 * std::numbers::pi / std::max(n_detours, 1);
  std::vector<double> jitter((static_cast<std::size_t>(n_detours) + 1) / 2 + 1);
  for (auto& u : jitter) u = rng.uniform();

  for (int k = 0; k < n_detours; ++k) {
    Point d(n);
    double height = base;
    if (n == 2) {
      d = (k % 2 == 0 ? 1.0 : -1.0) * comp.col(0);
      height *= 1.0 + 0.25 * jitter[static_cast<std::size_t>(k / 2)];
    } else if (n == 3) {
      const double angle = phase + 2.0 * std::numbers::pi * k / n_detours;
      d = std::cos(angle) * comp.col(0) + std::sin(angle) * comp.col(1);
      height *= 1.0 + 0.25 * jitter[static_cast<std::size_t>(k / 2)];
    } else {
      Eigen::VectorXd coeff(n - 1);
      for (int j = 0; j < n - 1; ++j) coeff(j) = rng.gaussian();
      d = comp * coeff.normalized();
      height *= 1.0 + 0.25 * rng.uniform();
    }
    const Point w = m + height * d;
    Nodes x = detail::sample_polyline({Point(p), w, Point(q)}, n_segments);
    detail::project_interior_nodes(x, obstacle);
    starts.emplace_back(std::move(x));
  }
  return starts;
}

namespace detail {

class Descent {
 public:
  Descent(const ConvexObstacle& obstacle, const SolveConfig& config)
      : obstacle_(obstacle), config_(config) {}

  SolveResult run(const DiscreteCurve& start, int start_index) const {
    Nodes x = start.nodes();
    project_interior_nodes(x, obstacle_);
    const Eigen::Index n = x.cols() - 1;
    const double nd = static_cast<double>(n);
    const double eta_ref = 1.0 / (8.0 * nd);
    const double eta = config_.step_size > 0.0 ? config_.step_size : eta_ref;
    const double eta_armijo = 2.0 * eta_ref;

    Nodes x_prev = x, y = x, g, trial;
    double e = energy(x);
    double t = 1.0;
    bool monotone = true;
    bool converged = false;
    double stationarity = std::numeric_limits<double>::infinity();
    long it = 0;

    auto take_step = [&](const Nodes& from, double e_from, Nodes& out) -> double {
      energy_gradient(from, g);
      if (config_.step_rule == StepRule::FixedStep) {
        out.noalias() = from - eta * g;
        project_interior_nodes(out, obstacle_);
        return energy(out);
      }
      double step = eta_armijo;
      double e_out = 0.0;
      for (int k = 0; k < 60; ++k) {
        out.noalias() = from - step * g;
        project_interior_nodes(out, obstacle_);
        e_out = energy(out);
        const double decrease = (g.array() * (out - from).array()).sum();
        if (e_out <= e_from + config_.armijo_c * decrease) break;
        step *= config_.armijo_shrink;
      }
      return e_out;
    };

    double best_stat = std::numeric_limits<double>::infinity();
    double window_stat = best_stat;
    for (; it < config_.max_iters; ++it) {
      if (config_.stall_window > 0 && it > 0 && it % config_.stall_window == 0) {
        if (best_stat > 0.9 * window_stat) {
          log::debug("start " + std::to_string(start_index) + ": stationarity stalled");
          break;
        }
        window_stat = best_stat;
      }
      if (it % 10 == 0) {
        stationarity = gradient_mapping_norm(x, eta_ref) / nd;
        best_stat = std::min(best_stat, stationarity);
        if (stationarity <= config_.grad_tol) {
          converged = true;
          break;
        }
      }

      // Energy differences near convergence sit at rounding level, so the
      // momentum restart uses the gradient-mapping direction and the energy
      // test only catches increases beyond rounding.
      const double rounding = 1e-13 * e;
      double e_new = 0.0;
      if (config_.momentum && t > 1.0) {
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double beta = (t - 1.0) / t_next;
        y.noalias() = x + beta * (x - x_prev);
        e_new = take_step(y, energy(y), trial);
        t = t_next;
        if (e_new > e + rounding) {
          e_new = take_step(x, e, trial);
          t = 1.0;
        } else if (((y - trial).array() * (trial - x).array()).sum() > 0.0) {
          t = 1.0;
        }
      } else {
        e_new = take_step(x, e, trial);
        t = config_.momentum ? 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t)) : 1.0;
      }
      if (e_new > e + rounding) monotone = false;
      x_prev.swap(x);
      x.swap(trial);
      e = e_new;

      if ((it + 1) % config_.reparam_every == 0) {
        DiscreteCurve cur(x);
        if (speed_variation(cur) > config_.reparam_trigger && length(cur) >= 1e-14) {
          Nodes r = reparameterize_constant_speed(cur).nodes();
          project_interior_nodes(r, obstacle_);
          const double er = energy(r);
          if (er <= e) {
            x = std::move(r);
            x_prev = x;
            e = er;
            t = 1.0;
          }
        }
      }
    }

    if (!converged) stationarity = gradient_mapping_norm(x, eta_ref) / nd;
    const DiscreteCurve raw(x);
    SolveResult res{raw, 0.0, 0.0, energy(raw), length(raw), it, converged, start_index, stationarity, monotone};
    if (res.raw_length >= 1e-14) {
      Nodes r = reparameterize_constant_speed(raw).nodes();
      project_interior_nodes(r, obstacle_);
      res.curve = DiscreteCurve(std::move(r));
    }
    res.energy = energy(res.curve);
    res.length = length(res.curve);
    log::debug("start " + std::to_string(start_index) + ": iterations=" + std::to_string(it) +
               " energy=" + std::to_string(res.energy) + " converged=" + (converged ? "yes" : "no"));
    return res;
  }

  /// max |(x - P(x - eta g)) / eta| over all coordinates.
  double gradient_mapping_norm(const Nodes& x, double eta) const {
    Nodes g;
    energy_gradient(x, g);
    Nodes z = x - eta * g;
    project_interior_nodes(z, obstacle_);
    return (x - z).cwiseAbs().maxCoeff() / eta;
  }

 private:
  const ConvexObstacle& obstacle_;
  const SolveConfig& config_;
};

}  // namespace detail

/// Runs the descent from a single starting curve.
inline SolveResult solve_from(const DiscreteCurve& start, const ConvexObstacle& obstacle,
                              const SolveConfig& config, int start_index = 0) {
  config.validate();
  return detail::Descent(obstacle, config).run(start, start_index);
}

/// Multi-start solve. Results are sorted by energy, then start index. When no
/// start converges the results are still returned with converged == false.
inline std::vector<SolveResult> solve(const PointRef& p, const PointRef& q, const ConvexObstacle& obstacle,
                                      const SolveConfig& config) {
  config.validate();
  const auto starts = initial_curves(p, q, obstacle, config.n_starts, config.seed, config.n_segments);
  std::vector<SolveResult> results;
  results.reserve(starts.size());
  const detail::Descent descent(obstacle, config);
  for (std::size_t k = 0; k < starts.size(); ++k) {
    if ((q - p).norm() < 1e-14) {
      const DiscreteCurve& c = starts[k];
      results.push_back(SolveResult{c, 0.0, 0.0, 0.0, 0.0, 0, true, static_cast<int>(k), 0.0, true});
      continue;
    }
    results.push_back(descent.run(starts[k], static_cast<int>(k)));
  }
  std::stable_sort(results.begin(), results.end(), [](const SolveResult& a, const SolveResult& b) {
    if (a.energy != b.energy) return a.energy < b.energy;
    return a.start_index < b.start_index;
  });
  if (!any_converged(results)) log::info("no start converged within max_iters");
  return results;
}

}  // namespace obstacle_path
