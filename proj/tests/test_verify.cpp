#include <doctest.h>

#include <cmath>
#include <vector>

#include "billiards/errors.hpp"
#include "billiards/verify.hpp"

using namespace billiards;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::config_error;
}

const DomainSpec& slit_torus() {
  static const DomainSpec d = build_domain(make_slit_torus({1.0, 1.0}, {0.5, 0.25, 0.75}));
  return d;
}

EigenPair sampled(const Grid& g, double lambda, double (*f)(Point)) {
  EigenPair p;
  p.lambda = lambda;
  p.vector.resize(static_cast<std::size_t>(g.size()));
  double s = 0.0;
  for (int idx = 0; idx < g.size(); ++idx) {
    const double v = g.is_unknown(idx) ? f(g.position(idx)) : 0.0;
    p.vector[static_cast<std::size_t>(idx)] = v;
    s += v * v;
  }
  for (double& v : p.vector) v /= std::sqrt(s * g.cell_area());
  return p;
}

double ground(Point p) { return std::sin(M_PI * p.x) * std::sin(M_PI * p.y); }
double striped(Point p) { return std::sin(M_PI * p.x) * std::sin(50.0 * M_PI * p.y); }

const std::vector<Region> side_bands{SubRectangle{-1.0, 0.1, -1.0, 2.0}, SubRectangle{0.9, 2.0, -1.0, 2.0}};

}  // namespace

TEST_CASE("rectangle band ratio matches a 1D quadrature oracle") {
  const DomainSpec d = build_domain(make_rectangle(1.0, 1.0));
  WindowSolve ws;
  ws.grid = rasterize(d, 201, 201);
  ws.pairs = {sampled(ws.grid, 2.0 * M_PI * M_PI, ground)};
  auto rep = verify_rectangle_nonconcentration(d, side_bands, ws);
  REQUIRE(rep.rows.size() == 1);

  // The y factor cancels, leaving sums over node columns.
  double band = 0.0, all = 0.0;
  for (int i = 0; i < ws.grid.nx; ++i) {
    const double x = ws.grid.position(i, 0).x;
    const double w = std::pow(std::sin(M_PI * x), 2);
    all += w;
    if (x < 0.1 || x >= 0.9) band += w;
  }
  CHECK(rep.rows[0].ratio == doctest::Approx(band / all).epsilon(1e-10));
  // Continuum value 2 (0.1 - sin(0.2 pi) / (2 pi)), up to the band-edge quadrature error.
  CHECK(rep.rows[0].ratio == doctest::Approx(2.0 * (0.1 - std::sin(0.2 * M_PI) / (2.0 * M_PI))).epsilon(0.05));
  CHECK(rep.rows[0].mass_in_r == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rectangle ratio depends only on the x profile and not on scale") {
  const DomainSpec d = build_domain(make_rectangle(1.0, 1.0));
  WindowSolve ws;
  ws.grid = rasterize(d, 201, 201);
  EigenPair a = sampled(ws.grid, 2.0 * M_PI * M_PI, ground);
  EigenPair b = sampled(ws.grid, 2501.0 * M_PI * M_PI, striped);
  EigenPair c = a;
  for (double& v : c.vector) v *= -3.7;
  ws.pairs = {a, b, c};
  auto rep = verify_rectangle_nonconcentration(d, side_bands, ws);
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].ratio == doctest::Approx(rep.rows[1].ratio).epsilon(1e-12));
  CHECK(rep.rows[2].ratio == doctest::Approx(rep.rows[0].ratio).epsilon(1e-12));
  CHECK(rep.rows[0].lambda <= rep.rows[2].lambda);
}

TEST_CASE("solved rectangle and stadium reports") {
  const DomainSpec rect = build_domain(make_rectangle(1.0, 1.0));
  VerifyWindow w{64, 64, 40.0, 10, {}};
  auto rep = verify_rectangle_nonconcentration(rect, side_bands, w);
  REQUIRE(rep.rows.size() == 10);
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    CHECK(rep.rows[k].ratio > 0.0);
    CHECK(rep.rows[k].ratio <= 1.0);
    if (k > 0) CHECK(rep.rows[k - 1].lambda <= rep.rows[k].lambda);
  }
  CHECK(rep.verdict == Verdict::pass);

  const DomainSpec stadium = build_domain(make_stadium(1.0, 0.5));
  auto st = verify_rectangle_nonconcentration(stadium, {SubRectangle{0.4, 0.6, 0.0, 1.0}}, VerifyWindow{80, 40, 40.0, 5, {}});
  CHECK(st.rows.size() == 5);
  CHECK(st.verdict == Verdict::report_only);
}

TEST_CASE("Sinai masses are monotone in eps and reach 1 on the whole billiard") {
  const DomainSpec d = build_domain(make_sinai({1.0, 1.0}, Disk{{0.5, 0.5}, 0.2}));
  const WindowSolve ws = solve_window(d, VerifyWindow{64, 64, 40.0, 8, {}});
  REQUIRE(ws.pairs.size() == 8);
  auto narrow = verify_sinai(d, 0.05, ws);
  auto wide = verify_sinai(d, 0.1, ws);
  auto all = verify_sinai(d, 0.8, ws);
  for (std::size_t k = 0; k < ws.pairs.size(); ++k) {
    CHECK(narrow.rows[k].mass_in_v <= wide.rows[k].mass_in_v);
    CHECK(all.rows[k].ratio == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(all.slope == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(wide.min_ratio > 0.0);

  const DomainSpec sq = build_domain(make_sinai({1.0, 1.0}, Polygon{{{0.35, 0.35}, {0.65, 0.35}, {0.65, 0.65}, {0.35, 0.65}}}));
  auto sr = verify_sinai(sq, 0.1, VerifyWindow{64, 64, 40.0, 4, {}});
  CHECK(sr.rows.size() == 4);
  CHECK(sr.min_ratio > 0.0);
}

TEST_CASE("resolution limit makes a report inconclusive") {
  const DomainSpec d = build_domain(make_rectangle(1.0, 1.0));
  WindowSolve ws;
  ws.grid = rasterize(d, 21, 21);
  ws.pairs = {sampled(ws.grid, 2.0 * M_PI * M_PI, ground), sampled(ws.grid, 1e4, ground)};
  CHECK(resolved(ws.grid, ws.pairs[0].lambda));
  CHECK_FALSE(resolved(ws.grid, ws.pairs[1].lambda));
  CHECK(verify_rectangle_nonconcentration(d, side_bands, ws).verdict == Verdict::inconclusive);
}

TEST_CASE("tube directions and membership") {
  auto diag = trace(slit_torus(), {0.1, 0.1}, rational_direction(1, 1), 5.0);
  const Tube t = trajectory_tube(diag, 0.05, 0.1);
  CHECK(t.directions.size() == 4);
  const TorusSpec unit{1.0, 1.0};
  const Point on = diag.segments.front().p0 + 0.5 * (diag.segments.front().p1 - diag.segments.front().p0);
  const Point v = diag.segments.front().p1 - diag.segments.front().p0;
  CHECK(in_tube(t, unit, on, 3.0 * v));
  CHECK(in_tube(t, unit, on, -1.0 * v));
  CHECK_FALSE(in_tube(t, unit, on, {v.x, 0.0}));
  CHECK_FALSE(in_tube(t, unit, on + Point{0.2, -0.2}, v));
  CHECK_FALSE(in_tube(t, unit, on, {0.0, 0.0}));
}

TEST_CASE("tube mass is 1 on all of phase space and monotone in eps and delta") {
  const DomainSpec& d = slit_torus();
  const Grid g = rasterize(d, 64, 64);
  auto pairs = eigs_above(assemble_laplacian(g), 300.0, 1);
  REQUIRE_FALSE(pairs.empty());
  const TorusField u = torus_field(d, g, pairs[0].vector);
  const double h = pairs[0].h();
  auto diag = trace(d, {0.1, 0.1}, rational_direction(1, 1), 5.0);
  const PhaseGridSpec phase{32, 32, 48, 48, 2.0};

  Tube everything = trajectory_tube(diag, 10.0, 2.5);
  CHECK(tube_row(u, h, everything, phase).tube_mass == doctest::Approx(1.0).epsilon(1e-12));

  double prev = -1.0;
  for (double eps : {0.02, 0.05, 0.1, 0.2}) {
    const double m = tube_row(u, h, trajectory_tube(diag, eps, 0.2), phase).tube_mass;
    CHECK(m >= prev);
    prev = m;
  }
  prev = -1.0;
  for (double delta : {0.05, 0.1, 0.3, 0.6}) {
    const double m = tube_row(u, h, trajectory_tube(diag, 0.1, delta), phase).tube_mass;
    CHECK(m >= prev);
    prev = m;
  }
}

TEST_CASE("aligned plane waves fill their tube on the torus") {
  const TorusSpec unit{1.0, 1.0};
  const DomainSpec torus = build_domain(make_torus(1.0, 1.0));
  auto path = trace(torus, {0.1, 0.5}, rational_direction(1, 2), 5.0);
  const Tube t = trajectory_tube(path, 0.5, 0.3);
  // Real standing wave cos(2 pi (4x + 8y)): xi = +-(4, 8) / |(4, 8)| at h = 1 / |kappa|.
  // The Husimi spread across the direction is sqrt(h / 2) = 0.094, so delta = 0.3
  // holds erf(0.3 / 0.133) of the mass.
  const int n = 128;
  TorusField u = plane_wave(unit, n, n, 4, 8);
  const TorusField v = plane_wave(unit, n, n, -4, -8);
  for (std::size_t k = 0; k < u.values.size(); ++k) u.values[k] = (u.values[k] + v.values[k]) / std::sqrt(2.0);
  const double h = 1.0 / (2.0 * M_PI * std::sqrt(80.0));
  const TubeRow aligned = tube_row(u, h, t, PhaseGridSpec{32, 32, 64, 64, 1.5});
  CHECK(aligned.husimi_total == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(aligned.tube_mass > 0.99);

  TorusField w = plane_wave(unit, n, n, 9, 0);
  const TubeRow crossed = tube_row(w, 1.0 / (2.0 * M_PI * 9.0), t, PhaseGridSpec{32, 32, 64, 64, 1.5});
  CHECK(crossed.tube_mass < 1e-3);
}

TEST_CASE("slit tube harness rejects x-unbounded paths") {
  auto drift = trace(slit_torus(), {0.1, 0.3 - 0.4 / 3.0}, rational_direction(3, 1), 5.0);
  CHECK(kind_of([&] { verify_slit_tube(slit_torus(), drift, WindowSolve{}); }) == ErrorKind::not_x_bounded);
  CHECK(kind_of([&] { verify_slit_tube(slit_torus(), drift, VerifyWindow{}); }) == ErrorKind::not_x_bounded);
}

TEST_CASE("slit tube harness on a small window") {
  auto diag = trace(slit_torus(), {0.1, 0.1}, rational_direction(1, 1), 5.0);
  const WindowSolve ws = solve_window(slit_torus(), VerifyWindow{64, 64, 100.0, 4, {}});
  auto rep = verify_slit_tube(slit_torus(), diag, ws, TubeOptions{0.05, 0.1, 0.05, 1e-6, 0.95, {32, 32, 48, 48, 2.0}});
  REQUIRE(rep.rows.size() == 4);
  for (const auto& r : rep.rows) {
    CHECK(r.tube_mass >= 0.0);
    CHECK(r.tube_mass <= 1.0);
    CHECK(r.husimi_total == doctest::Approx(1.0).epsilon(2e-2));
    CHECK(r.edge_mass > 0.0);
  }
  CHECK(rep.max_tube <= 1.0);
}

TEST_CASE("odd extension of a torus mode solves the equation off the reflection lines") {
  const DomainSpec& d = slit_torus();
  const Grid g = rasterize(d, 64, 64);
  auto diag = trace(d, {0.1, 0.1}, rational_direction(1, 1), 5.0);
  const UnfoldingPlan plan = unfold(d, diag);
  REQUIRE(plan.stages() == 1);
  // cos(2 pi (3x + 2y)) is a discrete eigenvector of the periodic stencil but
  // even about the slit column, so its odd extension jumps on the lines.
  EigenPair p;
  p.lambda = 4.0 / (g.dx * g.dx) * std::pow(std::sin(M_PI * 3.0 * g.dx), 2) +
             4.0 / (g.dy * g.dy) * std::pow(std::sin(M_PI * 2.0 * g.dy), 2);
  p.vector.resize(static_cast<std::size_t>(g.size()));
  for (int idx = 0; idx < g.size(); ++idx) {
    const Point x = g.position(idx);
    p.vector[static_cast<std::size_t>(idx)] = std::cos(2.0 * M_PI * (3.0 * x.x + 2.0 * x.y));
  }
  auto rep = verify_unfolding_residual(d, g, p, plan);
  CHECK(rep.masked_residual < 1e-8);
  CHECK(rep.line_residual > 1e-2);
  REQUIRE(rep.nx == 128);
  // Residual lives on the reflection columns and their stencil neighbours only.
  for (int j = 0; j < rep.ny; ++j)
    for (int c = 0; c < rep.nx; ++c) {
      const int dist = std::min({std::abs(c), std::abs(c - 64), std::abs(c - 128)});
      if (dist > 1) CHECK(std::abs(rep.residual[static_cast<std::size_t>(j * rep.nx + c)]) < 1e-8 * p.lambda);
    }
}

TEST_CASE("genuine slit eigenfunctions pass the unfolding residual check") {
  const DomainSpec& d = slit_torus();
  const Grid g = rasterize(d, 64, 64);
  auto pairs = eigs_above(assemble_laplacian(g), 40.0, 3);
  auto diag = trace(d, {0.1, 0.1}, rational_direction(1, 1), 5.0);
  auto vertical = trace(d, {0.1, 0.0}, rational_direction(0, 1), 5.0);
  const UnfoldingPlan p1 = unfold(d, diag);
  const UnfoldingPlan p0 = unfold(d, vertical);
  for (const EigenPair& p : pairs) {
    auto r1 = verify_unfolding_residual(d, g, p, p1);
    CHECK(r1.verdict == Verdict::pass);
    CHECK(r1.eigen_residual < 1e-6);
    auto r0 = verify_unfolding_residual(d, g, p, p0);
    CHECK(r0.verdict == Verdict::pass);
    CHECK(r0.masked_residual <= 1.5 * r0.eigen_residual + 1e-12);
  }
}

TEST_CASE("aligned-wave control concentrates once the Husimi spread is below delta") {
  const DomainSpec& d = slit_torus();
  auto gamma = trace(d, {0.1, 0.5}, rational_direction(1, 7), 40.0);
  const TorusSpec unit{1.0, 1.0};
  auto rows = aligned_wave_control(gamma, unit, 256, {2, 10});
  REQUIRE(rows.size() == 2);
  // Across-direction spread sqrt(h / 2) against delta = 0.1.
  CHECK(rows[0].tube_mass < 0.9);
  CHECK(rows[1].tube_mass > 0.99);
  CHECK(rows[1].husimi_total == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(rows[1].h == doctest::Approx(1.0 / (2.0 * M_PI * 10.0 * std::sqrt(50.0))));
  CHECK(kind_of([&] { aligned_wave_control(gamma, unit, 256, {19}); }) == ErrorKind::config_error);
  CHECK(kind_of([&] { aligned_wave_control(gamma, TorusSpec{1.0, 2.0}, 256, {1}); }) == ErrorKind::config_error);
}
