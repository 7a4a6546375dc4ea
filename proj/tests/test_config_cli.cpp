#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "obstacle_path.hpp"
#include "test_support.hpp"

using namespace obstacle_path;
using obstacle_path::testing::unit_ball;
using obstacle_path::testing::vec;
namespace fs = std::filesystem;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "accepted: " << text;
  return {};
}

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("obstacle_path_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path path = dir_ / name;
    std::ofstream(path) << text;
    return path;
  }

  static std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  CliRun run(const std::string& args) const {
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = std::string(OBSTACLE_PATH_CLI) + " " + args + " 2>" + err.string();
    CliRun r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) return r;
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err);
    return r;
  }

  std::string circle_config(const std::string& q, const std::string& extra = "",
                            const std::string& solver = R"({"n_segments": 128, "n_starts": 2})") const {
    return R"({"obstacle": {"kind": "sphere", "center": [0, 0], "radius": 1}, "p": [-2, 0], "q": )" + q +
           R"(, "solver": )" + solver + extra + R"(, "output": {"dir": ")" +
           (dir_ / "out").string() + R"("}})";
  }

  fs::path dir_;
};

}  // namespace

TEST(Config, ParsesFullConfig) {
  const auto c = parse_run_config(R"({
    "schema_version": 1,
    "obstacle": {"kind": "ellipsoid", "center": [0, 0, 0], "semi_axes": [2, 1, 1]},
    "p": [-4, 0, 0], "q": [3.5, 0.4, 0.3],
    "solver": {"n_segments": 256, "n_starts": 4, "grad_tol": 1e-9, "max_iters": 1000, "seed": 5,
               "step_rule": "armijo", "momentum": false},
    "structure": {"geodesic": 0.01},
    "scan": {"region": {"lo": [1, -1, -1], "hi": [2, 1, 1]}, "delta": 0.25, "jobs": 2},
    "output": {"dir": "x", "format": "json"}
  })");
  EXPECT_EQ(c.obstacle.kind, "ellipsoid");
  EXPECT_EQ(c.obstacle.build().dimension(), 3);
  EXPECT_EQ(*c.q, vec({3.5, 0.4, 0.3}));
  EXPECT_EQ(c.solver.n_segments, 256);
  EXPECT_EQ(c.solver.n_starts, 4);
  EXPECT_EQ(c.solver.grad_tol, 1e-9);
  EXPECT_EQ(c.solver.max_iters, 1000);
  EXPECT_EQ(c.solver.seed, 5u);
  EXPECT_EQ(c.solver.step_rule, StepRule::BacktrackingArmijo);
  EXPECT_FALSE(c.solver.momentum);
  EXPECT_EQ(c.structure.geodesic, 0.01);
  ASSERT_TRUE(c.scan.has_value());
  EXPECT_EQ(c.scan->delta, 0.25);
  EXPECT_EQ(c.scan->jobs, 2);
  EXPECT_EQ(c.output.format, "json");
}

TEST(Config, DefaultsApplyWhenSectionsAreMissing) {
  const auto c = parse_run_config(R"({"obstacle": {"kind": "sphere", "center": [0, 0], "radius": 2}})");
  EXPECT_FALSE(c.p.has_value());
  EXPECT_FALSE(c.scan.has_value());
  EXPECT_EQ(c.solver.n_segments, SolveConfig{}.n_segments);
  EXPECT_EQ(c.output.format, "csv");
}

TEST(Config, RejectsBadInput) {
  EXPECT_NE(config_error(R"({"obstacle": {"kind": "sphere", "center": [0, 0], "radius": 1}, "solver": {"foo": 1}})")
                .find("solver.foo"),
            std::string::npos);
  EXPECT_NE(config_error("{\n  \"obstacle\": {\n    \"kind\": \"sphere\",, \"radius\": 1}}").find("line 3"),
            std::string::npos);
  config_error(R"({"p": [0, 1]})");
  config_error(R"({"schema_version": 2, "obstacle": {"kind": "sphere", "center": [0, 0], "radius": 1}})");
  config_error(R"({"obstacle": {"kind": "torus", "center": [0, 0], "radius": 1}})");
  config_error(R"({"obstacle": {"kind": "sphere", "center": [0, 0], "radius": -1}})");
  config_error(R"({"obstacle": {"kind": "sphere", "center": [0, 0], "radius": 1}, "p": [1, 2, 3]})");
  config_error(R"({"obstacle": {"kind": "sphere", "center": [0, 0], "radius": 1}, "solver": {"n_segments": 1}})");
  config_error(R"({"obstacle": {"kind": "sphere", "center": [0, 0], "radius": 1}, "solver": {"n_starts": "8"}})");
  config_error(R"({"obstacle": {"kind": "sphere", "center": [0, 0], "radius": 1}, "output": {"format": "xml"}})");
  config_error(
      R"({"obstacle": {"kind": "sphere", "center": [0, 0], "radius": 1}, "scan": {"region": {"lo": [1, 1], "hi": [0, 2]}}})");
  config_error(
      R"({"obstacle": {"kind": "sphere", "center": [0, 0], "radius": 1}, "scan": {"region": {"lo": [0, 0], "hi": [1, 1]}, "dimension_scales": 3}})");
}

TEST(Config, ShippedConfigsParse) {
  for (const char* name : {"canonical_circle", "off_axis_circle", "collinear_sphere3d", "ellipsoid3d", "scan_circle",
                           "scan_circle_coarse"}) {
    EXPECT_NO_THROW(load_run_config(std::string(OBSTACLE_PATH_CONFIG_DIR) + "/" + name + ".json")) << name;
  }
  EXPECT_THROW(load_run_config("/nonexistent/config.json"), Error);
}

TEST_F(CliTest, SolveWritesArtifactsAndExitsZero) {
  const auto cfg = write("c.json", circle_config("[2, 0.5]"));
  const auto r = run("solve --config " + cfg.string());
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"curve.csv", "solve_results.json", "structure.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
    EXPECT_NE(r.out.find(f), std::string::npos) << f;
  }
  const auto results = nlohmann::json::parse(slurp(dir_ / "out" / "solve_results.json"));
  EXPECT_EQ(results["schema_version"], 1);
  EXPECT_TRUE(results["converged"].get<bool>());
  const double exact = solve_sphere(unit_ball(2), vec({-2, 0}), vec({2, 0.5})).energy;
  EXPECT_NEAR(results["energy"].get<double>() / exact, 1.0, 1e-3);
  const auto curve = load_curve((dir_ / "out" / "curve.csv").string());
  EXPECT_EQ(curve.segments(), 128);
  EXPECT_TRUE(r.err.empty()) << r.err;
}

TEST_F(CliTest, SolveFlagsOverrideTheConfig) {
  const auto cfg = write("c.json", circle_config("[2, 0.5]"));
  const auto r = run("solve --config " + cfg.string() + " --out " + (dir_ / "other").string() +
                     " --format json --seed 9");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "other" / "curve.json"));
  const auto results = nlohmann::json::parse(slurp(dir_ / "other" / "solve_results.json"));
  EXPECT_EQ(results["seed"], 9);
}

TEST_F(CliTest, SolveReportsNoConvergence) {
  const auto cfg =
      write("c.json", circle_config("[2, 0.5]", "", R"({"n_segments": 128, "n_starts": 2, "max_iters": 5})"));
  const auto r = run("solve --config " + cfg.string());
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_NE(r.err.find("NoConvergence"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "solve_results.json"));
}

TEST_F(CliTest, ConfigErrorsExitOne) {
  EXPECT_EQ(run("solve --config " + (dir_ / "missing.json").string()).code, 1);
  EXPECT_EQ(run("solve --config " + write("bad.json", "{").string()).code, 1);
  const auto inside = run("solve --config " + write("in.json", circle_config("[0.5, 0]")).string());
  EXPECT_EQ(inside.code, 1);
  EXPECT_NE(inside.err.find("InfeasibleEndpoints"), std::string::npos) << inside.err;
  EXPECT_EQ(run("solve").code, 1);
  EXPECT_EQ(run("bogus --config x").code, 1);
  EXPECT_EQ(run("solve --config x --format xml").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(CliTest, AnalyticThenVerifyPasses) {
  // At N = 512 the per-piece rounding keeps the speed variation under 1%.
  const auto cfg = write("c.json", circle_config("[2, 0]", "", R"({"n_segments": 512})"));
  const auto a = run("analytic --config " + cfg.string());
  ASSERT_EQ(a.code, 0) << a.err;
  const auto sol = nlohmann::json::parse(slurp(dir_ / "out" / "sphere_solution.json"));
  EXPECT_EQ(sol["multiplicity"], "RotationalFamily");
  EXPECT_NEAR(sol["energy"].get<double>(), std::pow(2 * std::sqrt(3.0) + std::numbers::pi / 3, 2), 1e-12);
  const auto v = run("verify --config " + cfg.string() + " --curve " + (dir_ / "out" / "curve.csv").string());
  EXPECT_EQ(v.code, 0) << v.err;
  const auto rep = nlohmann::json::parse(slurp(dir_ / "out" / "structure.json"));
  EXPECT_TRUE(rep["passed"].get<bool>());
}

TEST_F(CliTest, AnalyticRejectsEllipsoid) {
  const auto cfg = write("e.json", R"({"obstacle": {"kind": "ellipsoid", "center": [0, 0], "semi_axes": [2, 1]},
                                       "p": [-3, 0], "q": [3, 0]})");
  const auto r = run("analytic --config " + cfg.string());
  EXPECT_EQ(r.code, 1);
}

TEST_F(CliTest, VerifyFlagsACorruptedCurveAndStillWritesTheReport) {
  const auto sol = solve_sphere(unit_ball(2), vec({-2, 0}), vec({2, 0}));
  Nodes x = sphere_solution_to_curve(sol, 128).nodes();
  const int mid = 64;
  const double a = std::atan2(x(1, mid), x(0, mid)) + 0.01;
  x(0, mid) = std::cos(a);
  x(1, mid) = std::sin(a);
  const auto curve = write("bad.csv", curve_to_csv(DiscreteCurve(std::move(x))));
  const auto cfg = write("c.json", circle_config("[2, 0]"));
  const auto r = run("verify --config " + cfg.string() + " --curve " + curve.string());
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "structure.json"));
  EXPECT_NE(r.err.find("geodesic"), std::string::npos);
}

TEST_F(CliTest, VerifyRejectsMalformedCurves) {
  const auto cfg = write("c.json", circle_config("[2, 0]"));
  const auto good = curve_to_csv(DiscreteCurve::straight(vec({-2, 0}), vec({2, 3}), 16));
  const auto truncated = write("t.csv", good.substr(0, good.size() / 2));
  EXPECT_EQ(run("verify --config " + cfg.string() + " --curve " + truncated.string()).code, 1);
  EXPECT_EQ(run("verify --config " + cfg.string() + " --curve " + (dir_ / "none.csv").string()).code, 1);
  EXPECT_EQ(run("verify --config " + cfg.string()).code, 1);
}

TEST_F(CliTest, ScanWritesCsvAndJson) {
  const auto cfg = write("s.json", circle_config("[2, 0]", R"(, "scan": {"region": {"lo": [1.5, -0.5], "hi": [2.5, 0.5]}, "delta": 0.25})"));
  const auto r = run("scan --config " + cfg.string() + " --jobs 2 --format json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = slurp(dir_ / "out" / "scan.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "qx,qy,label,energy,clusters");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 26);
  const auto j = nlohmann::json::parse(slurp(dir_ / "out" / "scan.json"));
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_TRUE(j.contains("points"));
  EXPECT_TRUE(j["dimension_estimate"].is_null());
  EXPECT_TRUE(j.contains("dimension_note"));
  const auto missing = run("scan --config " + write("n.json", circle_config("[2, 0]")).string());
  EXPECT_EQ(missing.code, 1);
}

TEST_F(CliTest, DebugLoggingGoesToStderrOnly) {
  const auto cfg = write("c.json", circle_config("[2, 0.5]"));
  const auto r = run("solve --config " + cfg.string());
  const std::string quiet_out = r.out;
  setenv("OBSTACLE_PATH_LOG", "debug", 1);
  const auto d = run("solve --config " + cfg.string());
  unsetenv("OBSTACLE_PATH_LOG");
  ASSERT_EQ(d.code, 0);
  EXPECT_EQ(d.out, quiet_out);
  EXPECT_FALSE(d.err.empty());
}
