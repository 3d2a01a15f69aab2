#include <CLI11.hpp>
#include <omp.h>

#include <cstdlib>
#include <iostream>
#include <utility>
#include <json.hpp>

#include "billiards/errors.hpp"
#include "billiards/io.hpp"
#include "billiards/kernels.hpp"
#include "run_config.hpp"

using namespace billiards;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { ok = 0, config = 1, failed = 2, inconclusive = 3, internal = 4 };

struct Globals {
  std::string config_path;
  std::string out_dir;
  std::string out_file;
  std::string spectrum_out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

int exit_for(Verdict v) {
  switch (v) {
    case Verdict::pass:
    case Verdict::report_only: return ok;
    case Verdict::fail: return failed;
    case Verdict::inconclusive: return inconclusive;
  }
  return internal;
}

const char* class_name(NodeClass c) {
  switch (c) {
    case NodeClass::interior: return "interior";
    case NodeClass::obstacle: return "obstacle";
    case NodeClass::slit: return "slit";
    case NodeClass::slit_adjacent: return "slit_adjacent";
    case NodeClass::outer_boundary: return "outer_boundary";
  }
  return "?";
}

const char* kind_name(DomainKind k) {
  switch (k) {
    case DomainKind::rectangle: return "rectangle";
    case DomainKind::torus: return "torus";
    case DomainKind::sinai: return "sinai";
    case DomainKind::slit_torus: return "slit_torus";
    case DomainKind::stadium: return "stadium";
  }
  return "?";
}

class Runner {
 public:
  explicit Runner(const Globals& g) : g_(g) {
    cfg_ = cli::load_config(g.config_path);
    if (g.seed_set) {
      cfg_.seed = g.seed;
      cfg_.window.solver.seed = g.seed;
      cfg_.control.seed = g.seed;
    }
    if (!g.out_dir.empty()) cfg_.out_dir = g.out_dir;
    fs::create_directories(cfg_.out_dir);
  }

  int rasterize_cmd() {
    const Grid grid = rasterize(cfg_.domain, cfg_.window.nx, cfg_.window.ny);
    CsvWriter csv(cfg_.out_dir / "grid.csv");
    csv.header({"i", "j", "x", "y", "class"});
    std::size_t unknowns = 0;
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        const Point p = grid.position(i, j);
        csv.row(std::vector<std::string>{std::to_string(i), std::to_string(j), format_real(p.x), format_real(p.y),
                                         class_name(grid.node_class[static_cast<std::size_t>(grid.index(i, j))])});
        unknowns += grid.is_unknown(grid.index(i, j)) ? 1U : 0U;
      }
    json j = header("rasterize");
    j["grid"] = {{"nx", grid.nx}, {"ny", grid.ny}, {"dx", grid.dx}, {"dy", grid.dy}, {"unknowns", unknowns}};
    write_json(cfg_.out_dir / "rasterize.json", j);
    return ok;
  }

  int solve_cmd() {
    const WindowSolve ws = spectrum();
    CsvWriter csv(cfg_.out_dir / "eigenvalues.csv");
    csv.header({"index", "lambda", "h", "residual", "cluster"});
    for (std::size_t k = 0; k < ws.pairs.size(); ++k) {
      const auto& p = ws.pairs[k];
      csv.row({static_cast<double>(k), p.lambda, p.h(), p.residual, static_cast<double>(p.cluster)});
    }
    json j = header("solve");
    j["count"] = ws.pairs.size();
    j["resolution_limited"] = ws.resolution_limited;
    if (!ws.pairs.empty()) j["lambda_range"] = {ws.pairs.front().lambda, ws.pairs.back().lambda};
    write_json(cfg_.out_dir / "solve.json", j);
    return ws.resolution_limited ? inconclusive : ok;
  }

  int husimi_cmd() {
    const WindowSolve ws = spectrum();
    std::vector<int> idx = cfg_.husimi_indices;
    if (idx.empty()) {
      for (std::size_t k = 0; k < ws.pairs.size(); ++k) idx.push_back(static_cast<int>(k));
    }
    CsvWriter csv(cfg_.out_dir / "husimi_summary.csv");
    csv.header({"index", "lambda", "h", "total_mass", "off_shell_0.2"});
    for (int k : idx) {
      if (k < 0 || static_cast<std::size_t>(k) >= ws.pairs.size()) throw Error(ErrorKind::config_error, "husimi index out of range");
      const auto& p = ws.pairs[static_cast<std::size_t>(k)];
      const PhaseMeasure pm = husimi(torus_field(cfg_.domain, ws.grid, p.vector), p.h(), cfg_.phase);
      write_phase_measure(cfg_.out_dir / ("husimi_" + std::to_string(k) + ".csv"), pm);
      csv.row({static_cast<double>(k), p.lambda, p.h(), pm.total(), sigma_support_test(pm, 0.2)});
    }
    write_json(cfg_.out_dir / "husimi.json", header("husimi"));
    return ok;
  }

  int trace_cmd() {
    const Trajectory tr = trajectory();
    CsvWriter csv(cfg_.out_dir / "trajectory.csv");
    csv.header({"x0", "y0", "x1", "y1"});
    for (const Segment& s : tr.segments) csv.row({s.p0.x, s.p0.y, s.p1.x, s.p1.y});
    json j = header("trace");
    j["length"] = tr.length;
    j["segments"] = tr.segments.size();
    j["slit_reflections"] = tr.slit_reflections;
    j["terminated_by"] = termination(tr.terminated_by);
    j["direction"] = direction_json(tr.direction);
    if (cfg_.domain.kind() == DomainKind::slit_torus) {
      const XBoundedness xb = classify_x_bounded(cfg_.domain, tr);
      j["x_bounded"] = {{"bounded", xb.bounded}, {"inconclusive", xb.inconclusive}, {"x_min", xb.x_min}, {"x_max", xb.x_max}};
    }
    write_json(cfg_.out_dir / "trace.json", j);
    return ok;
  }

  int maxrect_cmd() {
    const auto& tc = trajectory_config();
    const MaximalRectangle r = maximal_rectangle(cfg_.domain, tc.direction, tc.origin);
    CsvWriter csv(cfg_.out_dir / "maxrect.csv");
    csv.header({"length", "width", "theta", "offset", "band_low", "band_high", "x0", "y0", "x1", "y1"});
    csv.row({r.length, r.width, r.theta, r.offset, r.band_low, r.band_high, r.center_line.p0.x, r.center_line.p0.y,
             r.center_line.p1.x, r.center_line.p1.y});
    json j = header("maxrect");
    j["length"] = r.length;
    j["width"] = r.width;
    j["theta"] = r.theta;
    write_json(cfg_.out_dir / "maxrect.json", j);
    return ok;
  }

  int unfold_cmd() {
    const UnfoldingPlan plan = unfold(cfg_.domain, trajectory());
    CsvWriter csv(cfg_.out_dir / "unfold_strips.csv");
    csv.header({"stage", "x_left", "x_right", "reflection"});
    for (std::size_t k = 0; k < plan.strips.size(); ++k) {
      const auto& s = plan.strips[k];
      csv.row({static_cast<double>(k + 1), s.x_left, s.x_right, s.reflection});
    }
    write_json(cfg_.out_dir / "unfold.json", plan_json(plan));
    return ok;
  }

  int control_cmd() {
    const ControlEstimate est = estimate_control_constant(cfg_.control);
    CsvWriter csv(cfg_.out_dir / "control_probes.csv");
    csv.header({"k", "z", "ratio", "resonant"});
    for (const auto& p : est.probes) csv.row({static_cast<double>(p.k), p.z, p.ratio, p.resonant ? 1.0 : 0.0});
    json j = header("control-estimate");
    j["omega"] = {est.omega.first, est.omega.second};
    j["k_max"] = est.k_max;
    j["c_empirical"] = est.c_empirical;
    j["c_low_half"] = est.c_low_half;
    j["c_high_half"] = est.c_high_half;
    j["argmax"] = {{"k", est.argmax_k}, {"z", est.argmax_z}, {"resonant", est.argmax_resonant}};
    write_json(cfg_.out_dir / "control.json", j);
    return ok;
  }

  int verify_mass(const std::string& which) {
    const WindowSolve ws = spectrum();
    MassReport rep;
    if (which == "sinai") {
      rep = verify_sinai(cfg_.domain, cfg_.eps, ws);
    } else {
      if (cfg_.regions.empty()) throw Error(ErrorKind::config_error, "rectangle harness needs analysis.bands");
      rep = verify_rectangle_nonconcentration(cfg_.domain, cfg_.regions, ws);
    }
    const fs::path out = report_path(which);
    CsvWriter csv(fs::path(out).replace_extension(".csv"));
    csv.header({"lambda", "h", "mass_in_v", "mass_in_r", "ratio"});
    for (const auto& r : rep.rows) csv.row({r.lambda, r.h, r.mass_in_v, r.mass_in_r, r.ratio});
    json j = header("verify " + which);
    j["eps"] = cfg_.eps;
    j["rows"] = rep.rows.size();
    j["min_ratio"] = rep.min_ratio;
    j["empirical_constant"] = rep.min_ratio > 0.0 ? 1.0 / rep.min_ratio : 0.0;
    j["slope"] = std::isfinite(rep.slope) ? json(rep.slope) : json(nullptr);
    j["floor"] = rep.floor;
    j["slope_min"] = rep.slope_min;
    j["resolution_limited"] = rep.resolution_limited;
    j["verdict"] = to_string(rep.verdict);
    write_json(out, j);
    std::cout << which << ": " << to_string(rep.verdict) << " min_ratio=" << format_real(rep.min_ratio)
              << " slope=" << format_real(rep.slope) << "\n";
    return exit_for(rep.verdict);
  }

  int verify_tube() {
    const Trajectory gamma = trajectory();
    // Precondition first, before the eigensolve.
    const XBoundedness xb = classify_x_bounded(cfg_.domain, gamma);
    if (!xb.bounded) {
      throw Error(xb.inconclusive ? ErrorKind::inconclusive_lift : ErrorKind::not_x_bounded, "trajectory is not x-bounded");
    }
    const WindowSolve ws = spectrum();
    const TubeReport rep = verify_slit_tube(cfg_.domain, gamma, ws, cfg_.tube);
    std::vector<TubeRow> control;
    if (!cfg_.control_js.empty()) control = aligned_wave_control(gamma, *cfg_.domain.torus(), cfg_.control_grid, cfg_.control_js, cfg_.tube);

    const fs::path out = report_path("slit-tube");
    {
      CsvWriter csv(fs::path(out).replace_extension(".csv"));
      csv.header({"lambda", "h", "tube_mass", "husimi_total", "edge_mass"});
      for (const auto& r : rep.rows) csv.row({r.lambda, r.h, r.tube_mass, r.husimi_total, r.edge_mass});
    }
    double control_min = 1.0;
    if (!control.empty()) {
      CsvWriter csv(out.parent_path() / (out.stem().string() + "_control.csv"));
      csv.header({"j", "lambda", "h", "tube_mass", "husimi_total"});
      for (std::size_t k = 0; k < control.size(); ++k) {
        const auto& r = control[k];
        csv.row({static_cast<double>(cfg_.control_js[k]), r.lambda, r.h, r.tube_mass, r.husimi_total});
        control_min = std::min(control_min, r.tube_mass);
      }
    }
    json j = header("verify slit-tube");
    j["eps"] = rep.eps;
    j["delta"] = rep.delta;
    j["edge_radius"] = rep.edge_radius;
    j["cap"] = rep.cap;
    j["rows"] = rep.rows.size();
    j["max_tube_mass"] = rep.max_tube;
    j["edges_carry_mass"] = rep.edges_carry_mass;
    j["x_strip"] = {xb.x_min, xb.x_max};
    j["direction"] = direction_json(gamma.direction);
    if (!control.empty()) j["control_min_tube_mass"] = control_min;
    j["resolution_limited"] = rep.resolution_limited;
    j["verdict"] = to_string(rep.verdict);
    write_json(out, j);
    std::cout << "slit-tube: " << to_string(rep.verdict) << " max_tube=" << format_real(rep.max_tube);
    if (!control.empty()) std::cout << " control_min=" << format_real(control_min);
    std::cout << "\n";
    return exit_for(rep.verdict);
  }

  int verify_unfold() {
    const UnfoldingPlan plan = unfold(cfg_.domain, trajectory());
    const WindowSolve ws = spectrum();
    if (cfg_.unfold_index < 0 || static_cast<std::size_t>(cfg_.unfold_index) >= ws.pairs.size()) {
      throw Error(ErrorKind::config_error, "analysis.unfold_index out of range");
    }
    const UnfoldReport rep = verify_unfolding_residual(cfg_.domain, ws.grid, ws.pairs[static_cast<std::size_t>(cfg_.unfold_index)], plan);
    const fs::path out = report_path("unfold-residual");
    {
      CsvWriter csv(fs::path(out).replace_extension(".csv"));
      csv.header({"i", "j", "residual"});
      for (int jj = 0; jj < rep.ny; ++jj)
        for (int i = 0; i < rep.nx; ++i) csv.row({static_cast<double>(i), static_cast<double>(jj), rep.residual[static_cast<std::size_t>(jj * rep.nx + i)]});
    }
    json j = header("verify unfold-residual");
    j["plan"] = plan_json(plan);
    j["lambda"] = ws.pairs[static_cast<std::size_t>(cfg_.unfold_index)].lambda;
    j["eigen_residual"] = rep.eigen_residual;
    j["masked_residual"] = rep.masked_residual;
    j["line_residual"] = rep.line_residual;
    j["threshold"] = rep.threshold;
    j["mask_margin"] = rep.mask_margin;
    j["verdict"] = to_string(rep.verdict);
    write_json(out, j);
    std::cout << "unfold-residual: " << to_string(rep.verdict) << " masked=" << format_real(rep.masked_residual)
              << " threshold=" << format_real(rep.threshold) << "\n";
    return exit_for(rep.verdict);
  }

 private:
  json header(const std::string& command) const {
    return {{"command", command},
            {"config", cfg_.source.string()},
            {"seed", cfg_.seed},
            {"domain", kind_name(cfg_.domain.kind())},
            {"grid", {cfg_.window.nx, cfg_.window.ny}}};
  }

  fs::path report_path(const std::string& which) const {
    if (!g_.out_file.empty()) {
      fs::path p = g_.out_file;
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      return p;
    }
    return cfg_.out_dir / ("verify_" + which + ".json");
  }

  WindowSolve spectrum() const {
    WindowSolve ws;
    if (cfg_.spectrum) {
      const SpectrumFile f = read_spectrum(*cfg_.spectrum);
      ws.grid = rasterize(cfg_.domain, f.nx, f.ny);
      if (std::abs(ws.grid.dx - f.dx) > 1e-12 || std::abs(ws.grid.dy - f.dy) > 1e-12 || ws.grid.periodic != f.periodic) {
        throw Error(ErrorKind::config_error, "spectrum file does not match the configured domain");
      }
      ws.pairs = f.pairs;
      std::sort(ws.pairs.begin(), ws.pairs.end(), [](const EigenPair& a, const EigenPair& b) { return a.lambda < b.lambda; });
      ws.resolution_limited = !ws.pairs.empty() && !resolved(ws.grid, ws.pairs.back().lambda);
    } else if (cfg_.target) {
      ws.grid = rasterize(cfg_.domain, cfg_.window.nx, cfg_.window.ny);
      ws.pairs = eigs_window(assemble_laplacian(ws.grid), {*cfg_.target, cfg_.window.count}, cfg_.window.solver);
      std::sort(ws.pairs.begin(), ws.pairs.end(), [](const EigenPair& a, const EigenPair& b) { return a.lambda < b.lambda; });
      ws.resolution_limited = !ws.pairs.empty() && !resolved(ws.grid, ws.pairs.back().lambda);
    } else {
      ws = solve_window(cfg_.domain, cfg_.window);
    }
    if (!g_.spectrum_out.empty()) {
      write_spectrum(g_.spectrum_out, ws.grid, ws.pairs, {{"config", cfg_.source.string()}, {"seed", cfg_.seed}});
    } else if (!cfg_.spectrum) {
      write_spectrum(cfg_.out_dir / "spectrum.bin", ws.grid, ws.pairs, {{"config", cfg_.source.string()}, {"seed", cfg_.seed}});
    }
    return ws;
  }

  const cli::TrajectoryConfig& trajectory_config() const {
    if (!cfg_.trajectory) throw Error(ErrorKind::config_error, "missing [trajectory] section");
    return *cfg_.trajectory;
  }

  Trajectory trajectory() const {
    const auto& tc = trajectory_config();
    double len = tc.max_length;
    if (len == 0.0) {
      const TorusSpec* t = cfg_.domain.torus();
      len = tc.direction.is_rational() && t != nullptr ? 2.0 * closed_length(*t, tc.direction) : 50.0;
    }
    return trace(cfg_.domain, tc.origin, tc.direction, len);
  }

  static const char* termination(Termination t) {
    switch (t) {
      case Termination::period_closed: return "period_closed";
      case Termination::obstacle_hit: return "obstacle_hit";
      case Termination::slit_hit: return "slit_hit";
      case Termination::time_cap: return "time_cap";
    }
    return "?";
  }

  static json direction_json(const Direction& d) {
    if (d.is_rational()) return {{"kind", "rational"}, {"m", d.m}, {"n", d.n}};
    return {{"kind", "irrational"}, {"angle", d.angle}, {"resolution_limited", d.resolution_limited}};
  }

  json plan_json(const UnfoldingPlan& plan) const {
    json strips = json::array();
    for (const auto& s : plan.strips) strips.push_back({{"x_left", s.x_left}, {"x_right", s.x_right}, {"reflection", s.reflection}});
    return {{"stages", plan.stages()},
            {"strips", strips},
            {"c0", {plan.x_left, plan.x_right}},
            {"period", plan.period},
            {"residual_lines", plan.residual_lines},
            {"wall_crossings_y", plan.wall_crossings_y},
            {"residual_support_clear", residual_support_clear(cfg_.domain, plan)}};
  }

  Globals g_;
  cli::RunConfig cfg_;
};

int threads_from_env() {
  const char* s = std::getenv("BILLIARD_THREADS");
  if (s == nullptr || *s == '\0') return 0;
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (*end != '\0' || v < 1 || v > 4096) throw Error(ErrorKind::config_error, "BILLIARD_THREADS must be a positive integer");
  return static_cast<int>(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum billiard eigenfunctions, phase-space measures and non-concentration checks"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "INI run configuration")->check(CLI::ExistingFile);
  app.add_option("--out-dir", g.out_dir, "directory for artifacts (overrides [output] dir)");
  auto* seed = app.add_option("--seed", g.seed, "64-bit seed for all randomness");
  app.add_option("--threads", g.threads, "worker threads (default: BILLIARD_THREADS or all cores)")->check(CLI::PositiveNumber);
  app.add_option("--spectrum-out", g.spectrum_out, "write the computed spectrum here");

  std::string which;
  std::function<int(Runner&)> action;
  auto sub = [&](const char* name, const char* help, int (Runner::*fn)()) {
    app.add_subcommand(name, help)->callback([&action, fn] { action = [fn](Runner& r) { return (r.*fn)(); }; });
  };
  sub("rasterize", "classify grid nodes", &Runner::rasterize_cmd);
  sub("solve", "compute an eigenpair window", &Runner::solve_cmd);
  sub("husimi", "Husimi measures of selected eigenfunctions", &Runner::husimi_cmd);
  sub("trace", "trace a billiard trajectory", &Runner::trace_cmd);
  sub("maxrect", "maximal rectangle of closed geodesics", &Runner::maxrect_cmd);
  sub("unfold", "unfolding plan for an x-bounded slit-torus path", &Runner::unfold_cmd);
  sub("control-estimate", "empirical control constant of the 1D mode problems", &Runner::control_cmd);
  auto* verify = app.add_subcommand("verify", "non-concentration harnesses");
  verify->add_option("--out", g.out_file, "report JSON path (CSV written alongside)");
  verify->require_subcommand(1);
  verify->fallthrough();
  const std::pair<const char*, const char*> checks[] = {
      {"sinai", "mass near the obstacle stays bounded below"},
      {"rectangle", "mass in the bands over mass in the rectangle (stadium: report only)"},
      {"slit-tube", "eigenfunctions do not concentrate on the trajectory tube"},
      {"unfold-residual", "unfolded eigenfunction solves the periodic problem away from the walls"}};
  for (const auto& check : checks) {
    const char* name = check.first;
    verify->add_subcommand(name, check.second)->fallthrough()->callback([&which, &action, name] {
      which = name;
      action = [name](Runner& r) {
        const std::string w = name;
        if (w == "slit-tube") return r.verify_tube();
        if (w == "unfold-residual") return r.verify_unfold();
        return r.verify_mass(w);
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config;
  }
  g.seed_set = seed->count() > 0;

  try {
    if (g.config_path.empty()) throw Error(ErrorKind::config_error, "--config is required");
    const int threads = g.threads > 0 ? g.threads : threads_from_env();
    if (threads > 0) omp_set_num_threads(threads);
    Runner runner(g);
    return action(runner);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::config_error:
      case ErrorKind::invalid_geometry:
      case ErrorKind::empty_region:
      case ErrorKind::not_x_bounded:
      case ErrorKind::degenerate_start:
      case ErrorKind::trajectory_hits_obstacle:
      case ErrorKind::gamma_not_on_grid:
      case ErrorKind::plan_mismatch:
      case ErrorKind::phase_grid_too_coarse:
      case ErrorKind::io_error: return config;
      case ErrorKind::resolution_too_coarse:
      case ErrorKind::inconclusive_lift: return inconclusive;
      default: return internal;
    }
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return internal;
  }
}
