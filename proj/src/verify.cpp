#include "billiards/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "billiards/errors.hpp"
#include "billiards/kernels.hpp"

namespace billiards {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::inconclusive: return "INCONCLUSIVE";
    case Verdict::report_only: return "REPORT";
  }
  return "?";
}

bool resolved(const Grid& grid, double lambda) {
  if (!(lambda > 0.0)) return true;
  return 2.0 * M_PI / std::sqrt(lambda) >= 10.0 * std::max(grid.dx, grid.dy) * (1.0 - 1e-12);
}

WindowSolve solve_window(const DomainSpec& domain, const VerifyWindow& window) {
  if (window.count < 1) throw Error(ErrorKind::config_error, "window count must be positive");
  WindowSolve out;
  out.grid = rasterize(domain, window.nx, window.ny);
  const SparseOperator op = assemble_laplacian(out.grid);
  out.pairs = eigs_above(op, window.lambda_min, window.count, window.solver);
  std::sort(out.pairs.begin(), out.pairs.end(), [](const EigenPair& a, const EigenPair& b) { return a.lambda < b.lambda; });
  out.resolution_limited = !out.pairs.empty() && !resolved(out.grid, out.pairs.back().lambda);
  return out;
}

MassReport mass_report(const Grid& grid, const std::vector<EigenPair>& pairs, const NodeMask& v, const NodeMask& r,
                       double floor, double slope_min) {
  MassReport rep;
  rep.floor = floor;
  rep.slope_min = slope_min;
  for (const EigenPair& p : pairs) {
    MassRow row;
    row.lambda = p.lambda;
    row.h = p.h();
    row.mass_in_v = mass_in_region(p, v, grid);
    row.mass_in_r = mass_in_region(p, r, grid);
    row.ratio = row.mass_in_r > 0.0 ? row.mass_in_v / row.mass_in_r : 0.0;
    rep.rows.push_back(row);
    if (!resolved(grid, p.lambda)) rep.resolution_limited = true;
  }
  std::sort(rep.rows.begin(), rep.rows.end(), [](const MassRow& a, const MassRow& b) { return a.lambda < b.lambda; });
  if (rep.rows.empty()) {
    rep.verdict = Verdict::inconclusive;
    return rep;
  }
  rep.min_ratio = rep.rows.front().ratio;
  for (const MassRow& row : rep.rows) rep.min_ratio = std::min(rep.min_ratio, row.ratio);

  std::vector<double> lam, ratio;
  for (const MassRow& row : rep.rows) {
    lam.push_back(row.lambda);
    ratio.push_back(row.ratio);
  }
  const bool distinct = lam.size() >= 2 && lam.back() > lam.front();
  if (rep.min_ratio > 0.0 && distinct) {
    rep.slope = fit_power(lam, ratio).exponent;
  } else if (rep.min_ratio > 0.0) {
    rep.slope = 0.0;
  } else {
    rep.slope = -std::numeric_limits<double>::infinity();
  }

  const bool ok = rep.min_ratio > floor && rep.slope >= slope_min;
  if (rep.resolution_limited) {
    rep.verdict = Verdict::inconclusive;
  } else {
    rep.verdict = ok ? Verdict::pass : Verdict::fail;
  }
  return rep;
}

MassReport verify_rectangle_nonconcentration(const DomainSpec& domain, const std::vector<Region>& v, const WindowSolve& solved) {
  const Grid& grid = solved.grid;
  NodeMask r;
  bool report_only = false;
  switch (domain.kind()) {
    case DomainKind::rectangle:
      r = domain_mask(grid);
      break;
    case DomainKind::stadium: {
      const auto& s = std::get<StadiumSpec>(domain.shape);
      r = region_mask(domain, SubRectangle{s.cap_radius, s.cap_radius + s.rect_width, 0.0, s.rect_height}, grid);
      report_only = true;
      break;
    }
    default:
      throw Error(ErrorKind::invalid_geometry, "rectangle harness needs a rectangle or stadium");
  }
  if (v.empty()) throw Error(ErrorKind::empty_region, "no neighbourhood given");
  NodeMask vm = region_mask(domain, v.front(), grid);
  for (std::size_t k = 1; k < v.size(); ++k) vm = mask_union(vm, region_mask(domain, v[k], grid));
  MassReport rep = mass_report(grid, solved.pairs, vm, r, 0.0);
  if (report_only) rep.verdict = Verdict::report_only;
  return rep;
}

MassReport verify_rectangle_nonconcentration(const DomainSpec& domain, const std::vector<Region>& v, const VerifyWindow& window) {
  return verify_rectangle_nonconcentration(domain, v, solve_window(domain, window));
}

MassReport verify_sinai(const DomainSpec& domain, double eps, const WindowSolve& solved) {
  if (domain.kind() != DomainKind::sinai) throw Error(ErrorKind::invalid_geometry, "Sinai harness needs a Sinai billiard");
  if (!(eps > 0.0)) throw Error(ErrorKind::config_error, "eps must be positive");
  const Grid& grid = solved.grid;
  return mass_report(grid, solved.pairs, region_mask(domain, ObstacleNeighborhood{eps}, grid), domain_mask(grid), 0.001);
}

MassReport verify_sinai(const DomainSpec& domain, double eps, const VerifyWindow& window) {
  return verify_sinai(domain, eps, solve_window(domain, window));
}

Tube trajectory_tube(const Trajectory& gamma, double eps, double delta) {
  Tube t;
  t.path = gamma.segments;
  t.eps = eps;
  t.delta = delta;
  auto add = [&](Point d) {
    for (const Point& e : t.directions) {
      if (norm(e - d) < 1e-9) return;
    }
    t.directions.push_back(d);
  };
  for (const Segment& s : gamma.segments) {
    const Point d = s.p1 - s.p0;
    const double len = norm(d);
    if (len <= 0.0) continue;
    const Point u = (1.0 / len) * d;
    add(u);
    add({-u.x, u.y});
    add({u.x, -u.y});
    add({-u.x, -u.y});
  }
  return t;
}

namespace {

bool near_path(const Tube& tube, const TorusSpec& torus, Point x) {
  for (const Segment& s : tube.path) {
    for (int sx = -1; sx <= 1; ++sx)
      for (int sy = -1; sy <= 1; ++sy) {
        if (distance_to_segment({x.x + sx * torus.a, x.y + sy * torus.b}, s) < tube.eps) return true;
      }
  }
  return false;
}

bool aligned(const Tube& tube, Point xi) {
  const double r = norm(xi);
  if (r <= 0.0) return false;
  const Point u = (1.0 / r) * xi;
  return std::any_of(tube.directions.begin(), tube.directions.end(), [&](Point d) { return norm(u - d) < tube.delta; });
}

}  // namespace

bool in_tube(const Tube& tube, const TorusSpec& torus, Point x, Point xi) {
  return aligned(tube, xi) && near_path(tube, torus, x);
}

TubeRow tube_row(const TorusField& u, double h, const Tube& tube, const PhaseGridSpec& phase) {
  // The predicate only ever sees cell centres, so both factors are tabulated.
  const double a = u.torus.a;
  const double b = u.torus.b;
  std::vector<std::uint8_t> pos(static_cast<std::size_t>(phase.px * phase.py));
  for (int iy = 0; iy < phase.py; ++iy)
    for (int ix = 0; ix < phase.px; ++ix)
      pos[static_cast<std::size_t>(iy * phase.px + ix)] = near_path(tube, u.torus, {ix * a / phase.px, iy * b / phase.py});
  const double d1 = 2.0 * phase.xi_max / phase.n1;
  const double d2 = 2.0 * phase.xi_max / phase.n2;
  std::vector<std::uint8_t> dir(static_cast<std::size_t>(phase.n1 * phase.n2));
  for (int c2 = 0; c2 < phase.n2; ++c2)
    for (int c1 = 0; c1 < phase.n1; ++c1)
      dir[static_cast<std::size_t>(c2 * phase.n1 + c1)] =
          aligned(tube, {-phase.xi_max + (c1 + 0.5) * d1, -phase.xi_max + (c2 + 0.5) * d2});

  auto inside = [&](Point x, Point xi) {
    const long ix = std::lround(x.x * phase.px / a);
    const long iy = std::lround(x.y * phase.py / b);
    const long c1 = std::clamp(static_cast<long>(std::floor((xi.x + phase.xi_max) / d1)), 0L, static_cast<long>(phase.n1 - 1));
    const long c2 = std::clamp(static_cast<long>(std::floor((xi.y + phase.xi_max) / d2)), 0L, static_cast<long>(phase.n2 - 1));
    return dir[static_cast<std::size_t>(c2 * phase.n1 + c1)] != 0U && pos[static_cast<std::size_t>(iy * phase.px + ix)] != 0U;
  };
  const RegionMass m = husimi_region_mass(u, h, phase, inside);
  TubeRow row;
  row.h = h;
  row.husimi_total = m.total;
  row.tube_mass = m.total > 0.0 ? m.inside / m.total : 0.0;
  return row;
}

TubeReport verify_slit_tube(const DomainSpec& slit_torus, const Trajectory& gamma, const WindowSolve& solved,
                            const TubeOptions& options) {
  const SlitSpec* slit = slit_torus.slit();
  if (slit == nullptr) throw Error(ErrorKind::invalid_geometry, "tube harness needs a slit torus");
  const XBoundedness xb = classify_x_bounded(slit_torus, gamma);
  if (!xb.bounded) {
    throw Error(xb.inconclusive ? ErrorKind::inconclusive_lift : ErrorKind::not_x_bounded,
                "trajectory is not x-bounded");
  }
  const Grid& grid = solved.grid;
  const Tube tube = trajectory_tube(gamma, options.eps, options.delta);
  const NodeMask edges = mask_union(
      region_mask(slit_torus, SegmentNeighborhood{{{slit->x_pos, slit->y0}, {slit->x_pos, slit->y0}}, options.edge_radius}, grid),
      region_mask(slit_torus, SegmentNeighborhood{{{slit->x_pos, slit->y1}, {slit->x_pos, slit->y1}}, options.edge_radius}, grid));

  TubeReport rep;
  rep.eps = options.eps;
  rep.delta = options.delta;
  rep.edge_radius = options.edge_radius;
  rep.cap = options.cap;
  rep.resolution_limited = solved.resolution_limited;
  for (const EigenPair& p : solved.pairs) {
    TubeRow row = tube_row(torus_field(slit_torus, grid, p.vector), p.h(), tube, options.phase);
    row.lambda = p.lambda;
    row.edge_mass = mass_in_region(p, edges, grid);
    rep.max_tube = std::max(rep.max_tube, row.tube_mass);
    if (row.tube_mass > 0.5 && !(row.edge_mass > options.edge_floor)) rep.edges_carry_mass = false;
    rep.rows.push_back(row);
  }
  if (rep.rows.empty() || rep.resolution_limited) {
    rep.verdict = Verdict::inconclusive;
  } else {
    rep.verdict = rep.max_tube <= rep.cap && rep.edges_carry_mass ? Verdict::pass : Verdict::fail;
  }
  return rep;
}

TubeReport verify_slit_tube(const DomainSpec& slit_torus, const Trajectory& gamma, const VerifyWindow& window,
                            const TubeOptions& options) {
  // Check the precondition before paying for the eigensolve.
  const XBoundedness xb = classify_x_bounded(slit_torus, gamma);
  if (!xb.bounded) {
    throw Error(xb.inconclusive ? ErrorKind::inconclusive_lift : ErrorKind::not_x_bounded,
                "trajectory is not x-bounded");
  }
  return verify_slit_tube(slit_torus, gamma, solve_window(slit_torus, window), options);
}

std::vector<TubeRow> aligned_wave_control(const Trajectory& gamma, const TorusSpec& torus, int n_grid,
                                          const std::vector<int>& js, const TubeOptions& options) {
  if (!gamma.direction.is_rational()) throw Error(ErrorKind::config_error, "control needs a rational direction");
  if (std::abs(torus.a - torus.b) > 1e-12 * torus.a) throw Error(ErrorKind::config_error, "control needs a square torus");
  const DomainSpec plain = build_domain(make_torus(torus.a, torus.b));
  const double length = closed_length(torus, gamma.direction);
  const Trajectory free = trace(plain, gamma.origin, gamma.direction, 1.5 * length);
  const Tube tube = trajectory_tube(free, options.eps, options.delta);
  const long m = gamma.direction.m;
  const long n = gamma.direction.n;
  std::vector<TubeRow> rows;
  for (int j : js) {
    if (j < 1 || 2 * j * std::max(std::labs(m), std::labs(n)) >= n_grid) {
      throw Error(ErrorKind::config_error, "control frequency out of range for the grid");
    }
    TorusField u = plane_wave(torus, n_grid, n_grid, j * m, j * n);
    const TorusField v = plane_wave(torus, n_grid, n_grid, -j * m, -j * n);
    for (std::size_t k = 0; k < u.values.size(); ++k) u.values[k] = (u.values[k] + v.values[k]) / std::sqrt(2.0);
    const double kappa = 2.0 * M_PI * j * std::hypot(static_cast<double>(m), static_cast<double>(n)) / torus.a;
    const double h = 1.0 / kappa;
    PhaseGridSpec phase;
    phase.xi_max = 1.1;
    phase.n1 = phase.n2 = static_cast<int>(std::ceil(2.0 * phase.xi_max / std::sqrt(0.5 * h)));
    const double need = 10.5 / (2.0 * M_PI * std::sqrt(h));
    int px = n_grid;
    while (px % 2 == 0 && px / 2 >= need) px /= 2;
    phase.px = phase.py = px;
    TubeRow row = tube_row(u, h, tube, phase);
    row.lambda = kappa * kappa;
    rows.push_back(row);
  }
  return rows;
}

UnfoldReport verify_unfolding_residual(const DomainSpec& slit_torus, const Grid& grid, const EigenPair& pair,
                                       const UnfoldingPlan& plan, int margin) {
  if (slit_torus.slit() == nullptr) throw Error(ErrorKind::plan_mismatch, "unfolding needs a slit torus");
  if (margin < 0) throw Error(ErrorKind::config_error, "mask margin must be nonnegative");
  const SparseOperator op = assemble_laplacian(grid);
  UnfoldReport rep;
  rep.mask_margin = margin;
  rep.eigen_residual = residual_norm(op, pair.lambda, pair.vector);

  const UnfoldedGrid uf = unfold_function(plan, grid, pair.vector);
  rep.nx = uf.nx;
  rep.ny = uf.ny;
  rep.residual.resize(uf.values.size());
  kernels::periodic_stencil(uf.nx, uf.ny, uf.dx, uf.dy, uf.values, rep.residual);
  for (std::size_t k = 0; k < rep.residual.size(); ++k) rep.residual[k] -= pair.lambda * uf.values[k];

  // Source column on the slit torus of each unfolded column.
  std::vector<long> source(static_cast<std::size_t>(uf.nx));
  if (plan.stages() == 0) {
    for (int c = 0; c < uf.nx; ++c) source[static_cast<std::size_t>(c)] = c;
  } else {
    const long i_left = std::lround((plan.x_left - grid.x_offset) / grid.dx);
    const long w = uf.nx / 2;
    for (long c = 0; c < uf.nx; ++c) {
      const long off = c <= w ? c : reflect_column(plan, 1, c, grid.dx);
      source[static_cast<std::size_t>(c)] = (((i_left + off) % grid.nx) + grid.nx) % grid.nx;
    }
  }

  std::vector<std::uint8_t> keep(uf.values.size(), 1U);
  auto drop_around = [&](int c, int j) {
    for (int dj = -margin; dj <= margin; ++dj)
      for (int dc = -margin; dc <= margin; ++dc) {
        const int cc = ((c + dc) % uf.nx + uf.nx) % uf.nx;
        const int jj = ((j + dj) % uf.ny + uf.ny) % uf.ny;
        keep[static_cast<std::size_t>(jj * uf.nx + cc)] = 0U;
      }
  };
  for (int col : uf.residual_columns)
    for (int j = 0; j < uf.ny; ++j) drop_around(col, j);
  for (int j = 0; j < uf.ny; ++j)
    for (int c = 0; c < uf.nx; ++c) {
      const long src = source[static_cast<std::size_t>(c)];
      if (grid.node_class[static_cast<std::size_t>(grid.index(static_cast<int>(src), j))] == NodeClass::slit) drop_around(c, j);
    }

  double kept = 0.0, dropped = 0.0, total = 0.0;
  for (std::size_t k = 0; k < uf.values.size(); ++k) {
    total += uf.values[k] * uf.values[k];
    const double r2 = rep.residual[k] * rep.residual[k];
    (keep[k] != 0U ? kept : dropped) += r2;
  }
  const double unorm = std::sqrt(total);
  if (!(unorm > 0.0)) throw Error(ErrorKind::config_error, "zero eigenvector");
  rep.masked_residual = std::sqrt(kept) / unorm;
  rep.line_residual = std::sqrt(dropped) / unorm;
  rep.threshold = 10.0 * rep.eigen_residual + 1e-12;
  rep.verdict = rep.masked_residual <= rep.threshold ? Verdict::pass : Verdict::fail;
  return rep;
}

}  // namespace billiards
