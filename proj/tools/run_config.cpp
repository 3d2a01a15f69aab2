#include "run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <sstream>

#include "billiards/errors.hpp"

namespace billiards::cli {

namespace pt = boost::property_tree;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::config_error, what); }

template <class T>
T require(const pt::ptree& tree, const std::string& key) {
  try {
    return tree.get<T>(key);
  } catch (const pt::ptree_bad_path&) {
    bad("missing key " + key);
  } catch (const pt::ptree_bad_data&) {
    bad("cannot parse " + key);
  }
}

template <class T>
T get(const pt::ptree& tree, const std::string& key, T fallback) {
  if (!tree.get_child_optional(key)) return fallback;
  return require<T>(tree, key);
}

std::vector<double> numbers(const std::string& text, const std::string& key) {
  std::string s = text;
  for (char& c : s) {
    if (c == ',' || c == ';') c = ' ';
  }
  std::istringstream in(s);
  std::vector<double> out;
  double v = 0.0;
  while (in >> v) out.push_back(v);
  if (!in.eof()) bad("cannot parse " + key);
  return out;
}

BoundaryCondition boundary(const std::string& s, const std::string& key) {
  if (s == "dirichlet") return BoundaryCondition::dirichlet;
  if (s == "neumann") return BoundaryCondition::neumann;
  if (s == "periodic") return BoundaryCondition::periodic;
  bad(key + " must be dirichlet, neumann or periodic");
}

DomainSpec parse_domain(const pt::ptree& t) {
  const auto kind = require<std::string>(t, "domain.kind");
  const double a = get(t, "domain.a", 1.0);
  const double b = get(t, "domain.b", 1.0);
  DomainSpec spec;
  if (kind == "rectangle") {
    spec = make_rectangle(get(t, "domain.width", 1.0), get(t, "domain.height", 1.0),
                          boundary(get<std::string>(t, "domain.outer_bc", "dirichlet"), "domain.outer_bc"));
  } else if (kind == "torus") {
    spec = make_torus(a, b);
  } else if (kind == "sinai") {
    const auto shape = get<std::string>(t, "domain.obstacle", "disk");
    ObstacleSpec obstacle;
    if (shape == "disk") {
      obstacle = Disk{{get(t, "domain.cx", 0.5 * a), get(t, "domain.cy", 0.5 * b)}, require<double>(t, "domain.r")};
    } else if (shape == "square") {
      const double s = 0.5 * require<double>(t, "domain.side");
      const double cx = get(t, "domain.cx", 0.5 * a);
      const double cy = get(t, "domain.cy", 0.5 * b);
      obstacle = Polygon{{{cx - s, cy - s}, {cx + s, cy - s}, {cx + s, cy + s}, {cx - s, cy + s}}};
    } else if (shape == "polygon") {
      const auto v = numbers(require<std::string>(t, "domain.vertices"), "domain.vertices");
      if (v.size() < 6 || v.size() % 2 != 0) bad("domain.vertices needs three or more x y pairs");
      Polygon p;
      for (std::size_t k = 0; k < v.size(); k += 2) p.vertices.push_back({v[k], v[k + 1]});
      obstacle = p;
    } else {
      bad("domain.obstacle must be disk, square or polygon");
    }
    spec = make_sinai({a, b}, obstacle, boundary(get<std::string>(t, "domain.inner_bc", "dirichlet"), "domain.inner_bc"));
  } else if (kind == "slit_torus") {
    spec = make_slit_torus({a, b}, {require<double>(t, "domain.slit_x"), require<double>(t, "domain.slit_y0"),
                                    require<double>(t, "domain.slit_y1")});
  } else if (kind == "stadium") {
    spec = make_stadium(get(t, "domain.rect_width", 1.0), get(t, "domain.cap_radius", 0.5));
  } else {
    bad("domain.kind must be rectangle, torus, sinai, slit_torus or stadium");
  }
  return build_domain(spec);
}

std::vector<Region> parse_regions(const std::string& text) {
  const auto v = numbers(text, "analysis.bands");
  if (v.empty() || v.size() % 4 != 0) bad("analysis.bands needs groups of x0 x1 y0 y1");
  std::vector<Region> out;
  for (std::size_t k = 0; k < v.size(); k += 4) {
    if (!(v[k] < v[k + 1]) || !(v[k + 2] < v[k + 3])) bad("analysis.bands has an empty rectangle");
    out.push_back(SubRectangle{v[k], v[k + 1], v[k + 2], v[k + 3]});
  }
  return out;
}

std::vector<int> integers(const std::string& text, const std::string& key) {
  std::vector<int> out;
  for (double v : numbers(text, key)) {
    if (v != static_cast<int>(v) || v < 0) bad(key + " must hold nonnegative integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) bad("config file not found: " + path.string());
  pt::ptree t;
  try {
    pt::read_ini(path.string(), t);
  } catch (const pt::ini_parser_error& e) {
    bad(e.what());
  }
  RunConfig c;
  c.source = path;
  c.seed = get<std::uint64_t>(t, "run.seed", c.seed);
  c.domain = parse_domain(t);

  c.window.nx = get(t, "solver.nx", 128);
  c.window.ny = get(t, "solver.ny", c.window.nx);
  c.window.lambda_min = get(t, "solver.lambda_min", 40.0);
  c.window.count = get(t, "solver.count", 20);
  c.window.solver.tol = get(t, "solver.tol", 1e-8);
  c.window.solver.seed = c.seed;
  const auto mode = get<std::string>(t, "solver.mode", "automatic");
  if (mode == "automatic") {
    c.window.solver.mode = SolverMode::automatic;
  } else if (mode == "direct") {
    c.window.solver.mode = SolverMode::direct;
  } else if (mode == "iterative") {
    c.window.solver.mode = SolverMode::iterative;
  } else {
    bad("solver.mode must be automatic, direct or iterative");
  }
  if (t.get_optional<double>("solver.target")) c.target = get(t, "solver.target", 0.0);
  if (c.window.nx < 8 || c.window.ny < 8 || c.window.nx > 4096 || c.window.ny > 4096) bad("solver.nx, ny must be in [8, 4096]");
  if (c.window.count < 1 || c.window.count > 2000) bad("solver.count must be in [1, 2000]");
  if (!(c.window.lambda_min >= 0.0)) bad("solver.lambda_min must be nonnegative");
  if (!(c.window.solver.tol > 0.0 && c.window.solver.tol < 1e-2)) bad("solver.tol must be in (0, 0.01)");

  if (t.get_child_optional("trajectory")) {
    TrajectoryConfig tr;
    tr.origin = {require<double>(t, "trajectory.x"), require<double>(t, "trajectory.y")};
    if (t.get_optional<std::string>("trajectory.angle")) {
      tr.direction = irrational_direction(require<double>(t, "trajectory.angle"));
    } else {
      const long m = require<long>(t, "trajectory.m");
      const long n = require<long>(t, "trajectory.n");
      if (m == 0 && n == 0) bad("trajectory direction must be nonzero");
      tr.direction = rational_direction(m, n);
    }
    tr.max_length = get(t, "trajectory.max_length", 0.0);
    tr.q_max = get(t, "trajectory.q_max", 1000L);
    if (tr.max_length < 0.0) bad("trajectory.max_length must be nonnegative");
    c.trajectory = tr;
  }

  c.eps = get(t, "analysis.eps", c.eps);
  if (!(c.eps > 0.0)) bad("analysis.eps must be positive");
  if (auto bands = t.get_optional<std::string>("analysis.bands")) c.regions = parse_regions(*bands);
  c.tube.eps = get(t, "analysis.tube_eps", c.tube.eps);
  c.tube.delta = get(t, "analysis.tube_delta", c.tube.delta);
  c.tube.edge_radius = get(t, "analysis.edge_radius", c.tube.edge_radius);
  c.tube.cap = get(t, "analysis.cap", c.tube.cap);
  c.phase.px = get(t, "analysis.px", c.phase.px);
  c.phase.py = get(t, "analysis.py", c.phase.px);
  c.phase.n1 = get(t, "analysis.n1", c.phase.n1);
  c.phase.n2 = get(t, "analysis.n2", c.phase.n1);
  c.phase.xi_max = get(t, "analysis.xi_max", c.phase.xi_max);
  if (c.phase.px < 1 || c.phase.py < 1 || c.phase.n1 < 1 || c.phase.n2 < 1 || !(c.phase.xi_max > 0.0)) {
    bad("phase grid sizes must be positive");
  }
  c.tube.phase = c.phase;
  if (!(c.tube.eps > 0.0) || !(c.tube.delta > 0.0) || !(c.tube.edge_radius > 0.0)) bad("tube radii must be positive");
  if (auto js = t.get_optional<std::string>("analysis.control_j")) c.control_js = integers(*js, "analysis.control_j");
  c.control_grid = get(t, "analysis.control_grid", c.control_grid);
  if (auto idx = t.get_optional<std::string>("analysis.indices")) c.husimi_indices = integers(*idx, "analysis.indices");
  if (auto sp = t.get_optional<std::string>("analysis.spectrum")) {
    std::filesystem::path p = *sp;
    if (p.is_relative()) p = path.parent_path() / p;
    if (!std::filesystem::exists(p)) bad("spectrum file not found: " + p.string());
    c.spectrum = p;
  }
  c.unfold_index = get(t, "analysis.unfold_index", 0);

  c.control.omega = {get(t, "control.omega_lo", 0.0), get(t, "control.omega_hi", 0.1)};
  c.control.k_max = get(t, "control.k_max", c.control.k_max);
  c.control.z_max = get(t, "control.z_max", c.control.z_max);
  c.control.z_samples = get(t, "control.z_samples", c.control.z_samples);
  c.control.f_samples = get(t, "control.f_samples", c.control.f_samples);
  c.control.modes = get(t, "control.modes", c.control.modes);
  c.control.a = get(t, "control.a", c.control.a);
  c.control.seed = c.seed;

  c.out_dir = get<std::string>(t, "output.dir", c.out_dir.string());
  return c;
}

}  // namespace billiards::cli
