// obstacle-path: solve, analytic, verify and scan subcommands.
//
// Exit codes: 0 success, 1 configuration or parse error, 2 no start
// converged (solve), 3 structure thresholds failed (verify).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "obstacle_path.hpp"

namespace fs = std::filesystem;
using namespace obstacle_path;

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::string format;
  std::optional<long> seed;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration")->required();
  cmd->add_option("--out", f.out, "output directory (overrides output.dir)");
  cmd->add_option("--format", f.format, "curve/scan output format")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--seed", f.seed, "initialization seed (overrides solver.seed)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--jobs", f.jobs, "worker threads for scan (overrides scan.jobs)")->check(CLI::PositiveNumber);
}

RunConfig load_with_overrides(const CommonFlags& f) {
  RunConfig c = load_run_config(f.config);
  if (!f.out.empty()) c.output.dir = f.out;
  if (!f.format.empty()) c.output.format = f.format;
  if (f.seed) c.solver.seed = static_cast<std::uint64_t>(*f.seed);
  if (f.jobs && c.scan) c.scan->jobs = *f.jobs;
  validate(c);
  return c;
}

const Point& require_point(const std::optional<Point>& x, const char* name) {
  if (!x) throw Error(ErrorCode::ConfigError, std::string("missing field '") + name + "'");
  return *x;
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::ConfigError, "cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::ConfigError, "write failed for '" + path.string() + "'");
  std::cout << path.string() << '\n';
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

void write_curve(const fs::path& dir, const DiscreteCurve& c, const std::string& format) {
  if (format == "json") {
    nlohmann::json j = curve_to_json(c);
    j["schema_version"] = kSchemaVersion;
    write_json(dir / "curve.json", j);
  } else {
    write_file(dir / "curve.csv", curve_to_csv(c));
  }
}

int fail(const std::exception& e, int code) {
  std::cerr << "error: " << e.what() << '\n';
  return code;
}

int cmd_solve(const CommonFlags& f) {
  RunConfig cfg;
  ConvexObstacle obstacle = ConvexObstacle::sphere(Point::Zero(2), 1.0);
  Point p, q;
  try {
    cfg = load_with_overrides(f);
    obstacle = cfg.obstacle.build();
    p = require_point(cfg.p, "p");
    q = require_point(cfg.q, "q");
    require_exterior_endpoints(p, q, obstacle);
  } catch (const std::exception& e) {
    return fail(e, 1);
  }
  try {
    const auto results = solve(p, q, obstacle, cfg.solver);
    const fs::path dir = prepare_dir(cfg.output.dir);
    const SolveResult& best = results.front();
    write_curve(dir, best.curve, cfg.output.format);
    write_json(dir / "solve_results.json", solve_results_to_json(results, obstacle, p, q, cfg.solver));
    write_json(dir / "structure.json",
               structure_report_to_json(verify_structure(best.curve, obstacle, p, q, cfg.structure)));
    log::info("best energy " + format_double(best.energy));
    if (!any_converged(results)) {
      std::cerr << "error: NoConvergence: no start reached grad_tol within max_iters\n";
      return 2;
    }
    return 0;
  } catch (const Error& e) {
    return fail(e, e.code() == ErrorCode::NonConvergence ? 2 : 1);
  } catch (const std::exception& e) {
    return fail(e, 1);
  }
}

int cmd_analytic(const CommonFlags& f) {
  try {
    const RunConfig cfg = load_with_overrides(f);
    const ConvexObstacle obstacle = cfg.obstacle.build();
    if (!obstacle.is_sphere())
      throw Error(ErrorCode::InvalidArgument, "analytic requires a sphere obstacle, got " + obstacle.kind_name());
    const Point& p = require_point(cfg.p, "p");
    const Point& q = require_point(cfg.q, "q");
    require_exterior_endpoints(p, q, obstacle);
    const SphereSolution sol = solve_sphere(obstacle, p, q);
    const fs::path dir = prepare_dir(cfg.output.dir);
    write_json(dir / "sphere_solution.json", sphere_solution_to_json(sol));
    write_curve(dir, sphere_solution_to_curve(sol, cfg.solver.n_segments), cfg.output.format);
    return 0;
  } catch (const std::exception& e) {
    return fail(e, 1);
  }
}

int cmd_verify(const CommonFlags& f, const std::string& curve_path) {
  RunConfig cfg;
  std::optional<DiscreteCurve> curve;
  std::optional<ConvexObstacle> obstacle;
  try {
    cfg = load_with_overrides(f);
    obstacle = cfg.obstacle.build();
    curve = load_curve(curve_path);
    if (curve->dimension() != obstacle->dimension())
      throw Error(ErrorCode::ParseError, "curve dimension " + std::to_string(curve->dimension()) +
                                             " does not match the obstacle dimension " +
                                             std::to_string(obstacle->dimension()));
  } catch (const std::exception& e) {
    return fail(e, 1);
  }
  try {
    const Point p = cfg.p ? *cfg.p : Point(curve->front());
    const Point q = cfg.q ? *cfg.q : Point(curve->back());
    require_exterior_endpoints(p, q, *obstacle);
    const StructureReport rep = verify_structure(*curve, *obstacle, p, q, cfg.structure);
    const fs::path dir = prepare_dir(cfg.output.dir);
    write_json(dir / "structure.json", structure_report_to_json(rep));
    if (!rep.passed) {
      for (const auto& why : rep.failures) std::cerr << "threshold failure: " << why << '\n';
      return 3;
    }
    return 0;
  } catch (const std::exception& e) {
    return fail(e, 1);
  }
}

int cmd_scan(const CommonFlags& f) {
  RunConfig cfg;
  ConvexObstacle obstacle = ConvexObstacle::sphere(Point::Zero(2), 1.0);
  Point p;
  try {
    cfg = load_with_overrides(f);
    if (!cfg.scan) throw Error(ErrorCode::ConfigError, "missing field 'scan'");
    obstacle = cfg.obstacle.build();
    p = require_point(cfg.p, "p");
    require_exterior_endpoints(p, p, obstacle);
  } catch (const std::exception& e) {
    return fail(e, 1);
  }
  try {
    const ScanSpec& s = *cfg.scan;
    ScanConfig sc;
    sc.solver = cfg.solver;
    sc.cluster_tol = s.cluster_tol;
    sc.energy_equal_tol = s.energy_equal_tol;
    sc.jobs = s.jobs;
    const ScanMap map = scan(p, obstacle, s.region, s.delta, sc);
    std::optional<double> dimension;
    std::string note;
    try {
      dimension = estimate_dimension(map, s.dimension_scales);
    } catch (const Error& e) {
      note = e.what();
      log::info(note);
    }
    const fs::path dir = prepare_dir(cfg.output.dir);
    write_file(dir / "scan.csv", scan_map_to_csv(map));
    write_json(dir / "scan.json", scan_map_to_json(map, obstacle, dimension, note, cfg.output.format == "json"));
    return 0;
  } catch (const std::exception& e) {
    return fail(e, 1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-minimizing curves around a convex obstacle"};
  app.name("obstacle-path");
  app.require_subcommand(1);

  CommonFlags solve_f, analytic_f, verify_f, scan_f;
  std::string curve_path;
  auto* solve_cmd = app.add_subcommand("solve", "multi-start projected gradient solve");
  add_common(solve_cmd, solve_f);
  auto* analytic_cmd = app.add_subcommand("analytic", "closed-form solution around a sphere");
  add_common(analytic_cmd, analytic_f);
  auto* verify_cmd = app.add_subcommand("verify", "structure report for a curve file");
  add_common(verify_cmd, verify_f);
  verify_cmd->add_option("--curve", curve_path, "curve file (.csv or .json)")->required();
  auto* scan_cmd = app.add_subcommand("scan", "uniqueness map over a grid of q");
  add_common(scan_cmd, scan_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (*solve_cmd) return cmd_solve(solve_f);
  if (*analytic_cmd) return cmd_analytic(analytic_f);
  if (*verify_cmd) return cmd_verify(verify_f, curve_path);
  return cmd_scan(scan_f);
}
