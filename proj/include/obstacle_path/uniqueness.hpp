#pragma once

/// \file uniqueness.hpp
/// Empirical uniqueness map for a fixed p: multi-start solves over a grid of
/// q, single-linkage clustering of the converged minimizers, and a
/// box-counting dimension estimate of the non-uniqueness set.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "obstacle_path/curve.hpp"
#include "obstacle_path/log.hpp"
#include "obstacle_path/obstacle.hpp"
#include "obstacle_path/optimizer.hpp"

namespace obstacle_path {

struct MinimizerCluster {
  DiscreteCurve representative;
  double energy = 0.0;
  int members = 0;
  std::vector<int> start_indices;
};

/// Discrete Hausdorff distance between the node sets of two curves.
inline double hausdorff_distance(const DiscreteCurve& a, const DiscreteCurve& b) {
  auto directed = [](const Nodes& x, const Nodes& y) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
      const double best = (y.colwise() - x.col(i)).colwise().squaredNorm().minCoeff();
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  return std::max(directed(a.nodes(), b.nodes()), directed(b.nodes(), a.nodes()));
}

/// Single-linkage clusters (Hausdorff distance <= cluster_tol) of the
/// converged results, sorted by energy. Only clusters whose energy is within
/// energy_equal_tol (relative) of the best are returned. Throws EmptyInput
/// when no result converged.
inline std::vector<MinimizerCluster> cluster_minimizers(const std::vector<SolveResult>& results, double cluster_tol,
                                                        double energy_equal_tol = 1e-5) {
  std::vector<const SolveResult*> admitted;
  for (const auto& r : results)
    if (r.converged) admitted.push_back(&r);
  if (admitted.empty()) throw Error(ErrorCode::EmptyInput, "no converged results to cluster");

  const std::size_t m = admitted.size();
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      if (find(i) == find(j)) continue;
      if (admitted[i]->curve.dimension() != admitted[j]->curve.dimension()) continue;
      if (hausdorff_distance(admitted[i]->curve, admitted[j]->curve) <= cluster_tol) parent[find(i)] = find(j);
    }

  std::vector<MinimizerCluster> clusters;
  std::vector<std::size_t> root_of_cluster;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t root = find(i);
    auto it = std::find(root_of_cluster.begin(), root_of_cluster.end(), root);
    const SolveResult& r = *admitted[i];
    if (it == root_of_cluster.end()) {
      root_of_cluster.push_back(root);
      clusters.push_back(MinimizerCluster{r.curve, r.energy, 1, {r.start_index}});
      continue;
    }
    auto& c = clusters[static_cast<std::size_t>(it - root_of_cluster.begin())];
    ++c.members;
    c.start_indices.push_back(r.start_index);
    if (r.energy < c.energy) {
      c.energy = r.energy;
      c.representative = r.curve;
    }
  }
  std::stable_sort(clusters.begin(), clusters.end(),
                   [](const MinimizerCluster& a, const MinimizerCluster& b) { return a.energy < b.energy; });
  const double best = clusters.front().energy;
  const double cutoff = best + energy_equal_tol * std::abs(best);
  clusters.erase(std::remove_if(clusters.begin(), clusters.end(),
                                [&](const MinimizerCluster& c) { return c.energy > cutoff; }),
                 clusters.end());
  return clusters;
}

enum class ScanLabel { Unique, NonUnique, Infeasible, Unconverged };

constexpr std::string_view to_string(ScanLabel l) noexcept {
  switch (l) {
    case ScanLabel::Unique: return "Unique";
    case ScanLabel::NonUnique: return "NonUnique";
    case ScanLabel::Infeasible: return "Infeasible";
    case ScanLabel::Unconverged: return "Unconverged";
  }
  return "?";
}

/// Axis-aligned box of q-points. lo[k] == hi[k] pins axis k (a slice).
struct ScanRegion {
  Point lo;
  Point hi;
};

struct ScanConfig {
  SolveConfig solver;
  double cluster_tol = 0.0;  // 0 selects 0.02 * obstacle diameter
  double energy_equal_tol = 1e-5;
  int jobs = 0;  // 0 selects the hardware concurrency
};

/// Rectangular lattice of q-points (axis 0 varies fastest) and per-point
/// results keyed by lattice index.
struct ScanMap {
  Point p;
  ScanRegion region;
  double delta = 0.0;
  std::vector<int> shape;
  std::vector<Point> points;
  std::vector<ScanLabel> labels;
  std::vector<double> energies;  // NaN when no converged result
  std::vector<int> cluster_counts;

  std::size_t size() const { return points.size(); }

  std::vector<int> lattice_index(std::size_t flat) const {
    std::vector<int> idx(shape.size());
    for (std::size_t k = 0; k < shape.size(); ++k) {
      idx[k] = static_cast<int>(flat % static_cast<std::size_t>(shape[k]));
      flat /= static_cast<std::size_t>(shape[k]);
    }
    return idx;
  }

  /// Flat index of a lattice index, or -1 when outside the grid.
  long flat_index(const std::vector<int>& idx) const {
    long flat = 0;
    for (std::size_t k = shape.size(); k-- > 0;) {
      if (idx[k] < 0 || idx[k] >= shape[k]) return -1;
      flat = flat * shape[k] + idx[k];
    }
    return flat;
  }

  /// Flat indices of the lattice neighbours (the 3^n - 1 surrounding cells).
  std::vector<std::size_t> neighbours(std::size_t flat) const {
    const auto base = lattice_index(flat);
    const std::size_t n = shape.size();
    std::vector<std::size_t> out;
    std::vector<int> off(n, -1);
    while (true) {
      bool zero = true;
      std::vector<int> idx = base;
      for (std::size_t k = 0; k < n; ++k) {
        idx[k] += off[k];
        if (off[k] != 0) zero = false;
      }
      if (!zero) {
        const long f = flat_index(idx);
        if (f >= 0) out.push_back(static_cast<std::size_t>(f));
      }
      std::size_t k = 0;
      while (k < n && off[k] == 1) off[k++] = -1;
      if (k == n) break;
      ++off[k];
    }
    return out;
  }
};

namespace detail {

inline int axis_count(double lo, double hi, double delta) {
  const double span = hi - lo;
  if (span <= 0.0) return 1;
  return static_cast<int>(std::floor(span / delta + 1e-9)) + 1;
}

inline std::uint64_t point_seed(std::uint64_t seed, std::size_t index) {
  SplitMix mix{seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1))};
  return mix.next();
}

struct PointOutcome {
  ScanLabel label = ScanLabel::Unconverged;
  double energy = std::numeric_limits<double>::quiet_NaN();
  int clusters = 0;
};

inline PointOutcome scan_point(const Point& p, const Point& q, const ConvexObstacle& obstacle, SolveConfig solver,
                               double cluster_tol, double energy_equal_tol, std::uint64_t seed) {
  PointOutcome out;
  if (!obstacle.strictly_exterior(q)) {
    out.label = ScanLabel::Infeasible;
    return out;
  }
  solver.seed = seed;
  try {
    const auto results = solve(p, q, obstacle, solver);
    if (!any_converged(results)) return out;
    const auto clusters = cluster_minimizers(results, cluster_tol, energy_equal_tol);
    out.energy = clusters.front().energy;
    out.clusters = static_cast<int>(clusters.size());
    out.label = clusters.size() >= 2 ? ScanLabel::NonUnique : ScanLabel::Unique;
  } catch (const Error& e) {
    log::debug(std::string("scan point failed: ") + e.what());
    out.label = ScanLabel::Unconverged;
  }
  return out;
}

}  // namespace detail

/// Labels every lattice point of the region. Points that are not strictly
/// exterior are Infeasible; per-point failures become labels. The result
/// depends only on the inputs and config.solver.seed, not on the job count.
inline ScanMap scan(const PointRef& p, const ConvexObstacle& obstacle, const ScanRegion& region, double delta,
                    const ScanConfig& config) {
  const Eigen::Index n = obstacle.dimension();
  if (p.size() != n || region.lo.size() != n || region.hi.size() != n)
    throw Error(ErrorCode::InvalidArgument, "scan dimensions do not match the obstacle");
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "scan spacing must be positive");
  for (Eigen::Index k = 0; k < n; ++k)
    if (!(region.lo(k) <= region.hi(k))) throw Error(ErrorCode::InvalidArgument, "scan region has lo > hi");
  require_exterior_endpoints(p, p, obstacle);
  config.solver.validate();

  ScanMap map;
  map.p = p;
  map.region = region;
  map.delta = delta;
  std::size_t total = 1;
  for (Eigen::Index k = 0; k < n; ++k) {
    map.shape.push_back(detail::axis_count(region.lo(k), region.hi(k), delta));
    total *= static_cast<std::size_t>(map.shape.back());
  }
  if (total > 50'000'000) throw Error(ErrorCode::InvalidArgument, "scan grid is too large");
  map.points.reserve(total);
  for (std::size_t f = 0; f < total; ++f) {
    const auto idx = map.lattice_index(f);
    Point q(n);
    for (Eigen::Index k = 0; k < n; ++k) q(k) = region.lo(k) + idx[static_cast<std::size_t>(k)] * delta;
    map.points.push_back(std::move(q));
  }
  map.labels.assign(total, ScanLabel::Unconverged);
  map.energies.assign(total, std::numeric_limits<double>::quiet_NaN());
  map.cluster_counts.assign(total, 0);

  const double cluster_tol = config.cluster_tol > 0.0 ? config.cluster_tol : 0.02 * obstacle.diameter();
  unsigned jobs = config.jobs > 0 ? static_cast<unsigned>(config.jobs) : std::thread::hardware_concurrency();
  jobs = std::clamp<unsigned>(jobs, 1u, static_cast<unsigned>(std::max<std::size_t>(total, 1)));
  const Point pp = p;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f = next++; f < total; f = next++) {
      const auto o = detail::scan_point(pp, map.points[f], obstacle, config.solver, cluster_tol,
                                        config.energy_equal_tol, detail::point_seed(config.solver.seed, f));
      map.labels[f] = o.label;
      map.energies[f] = o.energy;
      map.cluster_counts[f] = o.clusters;
    }
  };
  log::info("scan: " + std::to_string(total) + " points on " + std::to_string(jobs) + " worker(s)");
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return map;
}

/// Box-counting dimension of the NonUnique lattice points. Boxes of side
/// delta * 2^k, k = 0..n_scales-1; at each scale the count is minimised over
/// all lattice-aligned box offsets. Returns the least-squares slope of
/// log count against log(1 / side). Throws InsufficientData below 10 points.
inline double estimate_dimension(const ScanMap& map, int n_scales = 4) {
  if (n_scales < 4) throw Error(ErrorCode::InvalidArgument, "at least four scales are required");
  std::vector<std::vector<int>> pts;
  for (std::size_t f = 0; f < map.size(); ++f)
    if (map.labels[f] == ScanLabel::NonUnique) pts.push_back(map.lattice_index(f));
  if (pts.size() < 10)
    throw Error(ErrorCode::InsufficientData, "need at least 10 NonUnique points, found " + std::to_string(pts.size()));

  const std::size_t dim = map.shape.size();
  std::vector<double> xs, ys;
  for (int k = 0; k < n_scales; ++k) {
    const int side = 1 << k;
    // Offsets only matter along axes that the points actually span.
    std::vector<int> max_off(dim, 0);
    for (std::size_t a = 0; a < dim; ++a) max_off[a] = map.shape[a] > 1 ? side - 1 : 0;
    std::vector<int> off(dim, 0);
    std::size_t best = std::numeric_limits<std::size_t>::max();
    while (true) {
      std::vector<std::vector<int>> boxes;
      boxes.reserve(pts.size());
      for (const auto& idx : pts) {
        std::vector<int> b(dim);
        for (std::size_t a = 0; a < dim; ++a) b[a] = (idx[a] + off[a]) / side;
        boxes.push_back(std::move(b));
      }
      std::sort(boxes.begin(), boxes.end());
      const auto count = static_cast<std::size_t>(std::unique(boxes.begin(), boxes.end()) - boxes.begin());
      best = std::min(best, count);
      std::size_t a = 0;
      while (a < dim && off[a] == max_off[a]) off[a++] = 0;
      if (a == dim) break;
      ++off[a];
    }
    xs.push_back(-std::log(map.delta * side));
    ys.push_back(std::log(static_cast<double>(best)));
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace obstacle_path
