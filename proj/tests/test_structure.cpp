#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "obstacle_path/analytic.hpp"
#include "obstacle_path/optimizer.hpp"
#include "obstacle_path/structure.hpp"
#include "test_support.hpp"

using namespace obstacle_path;
using obstacle_path::testing::unit_ball;
using obstacle_path::testing::vec;

namespace {

DiscreteCurve canonical_analytic(int n) {
  return sphere_solution_to_curve(solve_sphere(unit_ball(2), vec({-2, 0}), vec({2, 0})), n);
}

bool mentions(const StructureReport& rep, const std::string& what) {
  return std::any_of(rep.failures.begin(), rep.failures.end(),
                     [&](const std::string& f) { return f.find(what) != std::string::npos; });
}

}  // namespace

TEST(Coincidence, SegmentCaseHasNoRuns) {
  const auto c = DiscreteCurve::straight(vec({-2, 0}), vec({0, 2}), 64);
  EXPECT_TRUE(extract_coincidence(c, unit_ball(2), 1e-6).empty());
  const auto rep = verify_structure(c, unit_ball(2), vec({-2, 0}), vec({0, 2}));
  EXPECT_TRUE(rep.passed);
  EXPECT_FALSE(rep.through_obstacle);
}

TEST(Coincidence, AnalyticCurveHasOneRunOverTheArc) {
  const auto c = canonical_analytic(512);
  const auto runs = extract_coincidence(c, unit_ball(2), 2e-6);
  ASSERT_EQ(runs.size(), 1u);
  for (int i = 0; i <= 512; ++i) {
    const bool on = std::abs(c.node(i).norm() - 1.0) < 1e-12;
    EXPECT_EQ(on, i >= runs[0].first && i <= runs[0].last) << i;
  }
  // About (pi/3) / (2 sqrt 3 + pi/3) of the nodes.
  EXPECT_NEAR(runs[0].size(), 512 * (std::numbers::pi / 3) / (2 * std::sqrt(3.0) + std::numbers::pi / 3), 2.0);
}

TEST(Coincidence, TwoSeparatePatches) {
  // Radius profile over the upper half plane: on the circle for angles in
  // [60, 80] and [100, 120] degrees, lifted elsewhere.
  const int n = 180;
  Nodes x(2, n + 1);
  for (int i = 0; i <= n; ++i) {
    const double deg = 180.0 - i;
    const bool on = (deg >= 60 && deg <= 80) || (deg >= 100 && deg <= 120);
    const double r = on ? 1.0 : 1.1;
    const double a = deg * std::numbers::pi / 180.0;
    x(0, i) = r * std::cos(a);
    x(1, i) = r * std::sin(a);
  }
  const DiscreteCurve c(std::move(x));
  const auto runs = extract_coincidence(c, unit_ball(2), 1e-9);
  ASSERT_EQ(runs.size(), 2u);
  EXPECT_EQ(runs[0], (IndexRun{60, 80}));
  EXPECT_EQ(runs[1], (IndexRun{100, 120}));
  const auto rep = verify_structure(c, unit_ball(2), c.front(), c.back());
  EXPECT_FALSE(rep.passed);
  EXPECT_TRUE(mentions(rep, "exactly one coincidence run"));
}

TEST(VerifyStructure, AnalyticCanonicalCurve) {
  const auto c = canonical_analytic(512);
  const auto rep = verify_structure(c, unit_ball(2), vec({-2, 0}), vec({2, 0}));
  EXPECT_TRUE(rep.passed) << (rep.failures.empty() ? "" : rep.failures.front());
  EXPECT_TRUE(rep.through_obstacle);
  EXPECT_EQ(rep.coincidence_runs.size(), 1u);
  EXPECT_LT(rep.straightness_residual, 1e-10);
  EXPECT_LT(rep.tangency_residual_p, 1e-8);
  EXPECT_LT(rep.tangency_residual_q, 1e-8);
  EXPECT_LT(rep.geodesic_residual, 1e-3);
  EXPECT_LE(rep.curvature_ratio, 1.01);
  EXPECT_LE(rep.junction_angle, 2.0 * std::numbers::pi / 512);
}

TEST(VerifyStructure, OptimizerCanonicalCurve) {
  SolveConfig cfg;
  cfg.n_segments = 512;
  cfg.n_starts = 2;
  const Point p = vec({-2, 0}), q = vec({2, 0});
  const auto res = solve(p, q, unit_ball(2), cfg);
  ASSERT_TRUE(res.front().converged);
  const auto rep = verify_structure(res.front().curve, unit_ball(2), p, q);
  EXPECT_TRUE(rep.passed) << (rep.failures.empty() ? "" : rep.failures.front());
  EXPECT_LT(rep.geodesic_residual, 5e-3);
  EXPECT_LE(rep.curvature_ratio, 1.05);
}

TEST(VerifyStructure, TangentiallyDisplacedContactNodeIsFlagged) {
  auto c = canonical_analytic(512);
  const auto runs = extract_coincidence(c, unit_ball(2), 2e-6);
  ASSERT_EQ(runs.size(), 1u);
  const int mid = (runs[0].first + runs[0].last) / 2;
  // Move the node 0.01 along the circle so it stays in contact.
  Nodes x = c.nodes();
  const double a = std::atan2(x(1, mid), x(0, mid)) + 0.01;
  x(0, mid) = std::cos(a);
  x(1, mid) = std::sin(a);
  const DiscreteCurve bad(std::move(x));
  const auto rep = verify_structure(bad, unit_ball(2), vec({-2, 0}), vec({2, 0}));
  EXPECT_EQ(rep.coincidence_runs.size(), 1u);
  EXPECT_GT(rep.geodesic_residual, 0.05);
  EXPECT_FALSE(rep.passed);
  EXPECT_TRUE(mentions(rep, "geodesic"));
}

TEST(VerifyStructure, NonConstantSpeedIsReportedAsFailure) {
  const auto c = DiscreteCurve(Nodes((Nodes(2, 3) << -2, 1.5, 2, 2, 2, 2).finished()));
  const auto rep = verify_structure(c, unit_ball(2), c.front(), c.back());
  EXPECT_FALSE(rep.passed);
  EXPECT_TRUE(mentions(rep, "constant-speed"));
}

TEST(VerifyStructure, EllipsoidOptimizerCurve) {
  const auto ell = ConvexObstacle::ellipsoid(vec({0, 0, 0}), vec({2, 1, 1}));
  SolveConfig cfg;
  cfg.n_segments = 256;
  cfg.n_starts = 4;
  const Point p = vec({-4, 0, 0}), q = vec({3.5, 0.4, 0.3});
  const auto res = solve(p, q, ell, cfg);
  ASSERT_TRUE(res.front().converged);
  const auto rep = verify_structure(res.front().curve, ell, p, q);
  EXPECT_TRUE(rep.passed) << (rep.failures.empty() ? "" : rep.failures.front());
  EXPECT_LE(rep.curvature_ratio, 1.05);
}

TEST(ElResidual, StraightSegmentIsZero) {
  for (int n : {16, 256, 1024}) {
    const auto c = DiscreteCurve::straight(vec({-2, 0.3}), vec({1.5, 2}), n);
    const auto prof = el_residual_profile(c, unit_ball(2));
    EXPECT_LT(*std::max_element(prof.residual.begin(), prof.residual.end()), 1e-9 * n * n) << n;
    EXPECT_TRUE(prof.junction_nodes.empty());
  }
}

TEST(ElResidual, ArcNodesConvergeSecondOrder) {
  double prev = 0.0;
  for (int n : {128, 256, 512}) {
    const auto prof = el_residual_profile(canonical_analytic(n), unit_ball(2), 0.0, 0.02);
    if (prev > 0.0) {
      EXPECT_GT(std::log2(prev / prof.contact_interior_max), 1.8) << n;
    }
    prev = prof.contact_interior_max;
  }
}

TEST(ElResidual, JunctionResidualIsBoundedButNotSmall) {
  const auto ball = unit_ball(2);
  for (int n : {128, 256, 512}) {
    const auto c = canonical_analytic(n);
    const auto prof = el_residual_profile(c, ball, 0.0, 0.02);
    ASSERT_EQ(prof.junction_nodes.size(), 2u);
    const double speed2 = std::pow(length(c), 2);
    for (double r : prof.junction_residual) {
      EXPECT_LE(r, 2.0 * ball.kappa_max() * speed2) << n;
      EXPECT_GT(r, 0.1 * ball.kappa_max() * speed2) << n;
    }
  }
}

TEST(ElResidual, NotConstantSpeedThrows) {
  const auto c = DiscreteCurve(Nodes((Nodes(2, 3) << -2, 1.5, 2, 2, 2, 2).finished()));
  try {
    el_residual_profile(c, unit_ball(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotConstantSpeed);
  }
}

TEST(StructureProperty, ProjectingAnExcursionDecreasesEnergy) {
  std::mt19937_64 rng(21);
  const ConvexObstacle obstacles[] = {unit_ball(2), unit_ball(3),
                                      ConvexObstacle::ellipsoid(vec({0, 0}), vec({2, 1})),
                                      ConvexObstacle::ellipsoid(vec({0.5, 0, -1}), vec({2, 1, 1.5}))};
  for (int k = 0; k < 100; ++k) {
    const auto& obs = obstacles[k % 4];
    const auto ex = obstacle_path::testing::random_excursion(rng, obs, 64 + k);
    ASSERT_TRUE(is_feasible(ex.curve, obs));
    const auto projected = project_run_to_boundary(ex.curve, obs, ex.first, ex.last);
    EXPECT_LT(energy(projected), energy(ex.curve)) << k;
    EXPECT_EQ(extract_coincidence(projected, obs, 1e-9).size(), 1u) << k;
  }
}
