#include <doctest.h>

#include <cmath>
#include <vector>

#include "billiards/dynamics.hpp"
#include "billiards/errors.hpp"

using namespace billiards;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected billiards::Error");
  return ErrorKind::io_error;
}

const DomainSpec& sinai() {
  static const DomainSpec d = build_domain(make_sinai({1.0, 1.0}, Disk{{0.5, 0.5}, 0.2}));
  return d;
}

const DomainSpec& slit_torus() {
  static const DomainSpec d = build_domain(make_slit_torus({1.0, 1.0}, {0.5, 0.25, 0.75}));
  return d;
}

// Smallest lattice vector (i a, j b) parallel to v, by exhaustive search.
std::pair<long, long> brute_force_winding(const TorusSpec& t, Point v, long limit) {
  for (long s = 1; s <= 2 * limit; ++s)
    for (long i = -limit; i <= limit; ++i) {
      const long j_abs = s - std::labs(i);
      if (j_abs < 0 || j_abs > limit) continue;
      for (long j : {j_abs, -j_abs}) {
        const double cx = i * t.a;
        const double cy = j * t.b;
        if (std::abs(cx * v.y - cy * v.x) < 1e-12 && cx * v.x + cy * v.y > 0.0) return {i, j};
      }
    }
  return {0, 0};
}

// Exhaustive segment/slit intersection test.
bool crosses_slit(const Trajectory& tr, const SlitSpec& s) {
  for (const auto& seg : tr.segments) {
    const double x0 = seg.p0.x, x1 = seg.p1.x;
    if ((x0 - s.x_pos) * (x1 - s.x_pos) >= 0.0 || x0 == x1) continue;
    const double t = (s.x_pos - x0) / (x1 - x0);
    const double y = seg.p0.y + t * (seg.p1.y - seg.p0.y);
    if (y >= s.y0 && y <= s.y1) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("direction classification") {
  const TorusSpec unit{1.0, 1.0};
  auto d = classify_direction(unit, {1.0, 1.0}, 100);
  CHECK(d.is_rational());
  CHECK(d.m == 1);
  CHECK(d.n == 1);
  auto irr = classify_direction(unit, {1.0, std::sqrt(2.0)}, 1'000'000);
  CHECK_FALSE(irr.is_rational());
  CHECK(irr.resolution_limited);
  const TorusSpec t12{1.0, 2.0};
  auto r = classify_direction(t12, {2.0, 3.0}, 100);
  REQUIRE(r.is_rational());
  const auto [bi, bj] = brute_force_winding(t12, {2.0, 3.0}, 50);
  CHECK(r.m == bi);
  CHECK(r.n == bj);
  auto vertical = classify_direction(unit, {0.0, -2.0}, 10);
  CHECK(vertical.m == 0);
  CHECK(vertical.n == -1);
}

TEST_CASE("rational paths close after the geodesic length") {
  const DomainSpec torus = build_domain(make_torus(1.0, 2.0));
  const TorusSpec t{1.0, 2.0};
  for (auto [m, n] : std::vector<std::pair<long, long>>{{4, 3}, {1, 0}, {2, -5}, {-3, 1}}) {
    const Direction dir = rational_direction(m, n);
    const Trajectory tr = trace(torus, {0.123, 0.456}, dir, 1e3);
    CHECK(tr.terminated_by == Termination::period_closed);
    CHECK(tr.length == doctest::Approx(closed_length(t, dir)).epsilon(1e-12));
    CHECK(std::abs(tr.length - std::hypot(m * 1.0, n * 2.0)) < 1e-9);
  }
}

TEST_CASE("Sinai trace examples") {
  auto closed = trace(sinai(), {0.0, 0.0}, rational_direction(0, 1), 10.0);
  CHECK(closed.terminated_by == Termination::period_closed);
  CHECK(closed.length == doctest::Approx(1.0));
  auto hit = trace(sinai(), {0.5, 0.0}, rational_direction(0, 1), 10.0);
  CHECK(hit.terminated_by == Termination::obstacle_hit);
  CHECK(hit.segments.back().p1.y == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(kind_of([] { trace(sinai(), {0.5, 0.5}, rational_direction(1, 0), 1.0); }) == ErrorKind::degenerate_start);
  auto dense = trace(sinai(), {0.05, 0.0}, irrational_direction(std::atan(std::sqrt(2.0))), 200.0);
  CHECK(dense.terminated_by == Termination::obstacle_hit);
}

TEST_CASE("horizontal path passes below the slit") {
  const auto& s = *slit_torus().slit();
  auto tr = trace(slit_torus(), {0.1, 0.1}, rational_direction(1, 0), 10.0);
  CHECK(tr.terminated_by == Termination::period_closed);
  CHECK(tr.length == doctest::Approx(1.0));
  CHECK(tr.slit_reflections == 0);
  CHECK_FALSE(crosses_slit(tr, s));
  auto stop = trace(slit_torus(), {0.1, 0.5}, rational_direction(1, 0), 10.0, {.reflect_at_slit = false});
  CHECK(stop.terminated_by == Termination::slit_hit);
  auto bounce = trace(slit_torus(), {0.1, 0.5}, rational_direction(1, 0), 10.0);
  CHECK(bounce.terminated_by == Termination::period_closed);
  CHECK(bounce.slit_reflections == 2);
  CHECK(kind_of([] { trace(slit_torus(), {0.3, 0.05}, rational_direction(1, 1), 10.0); }) == ErrorKind::degenerate_start);
}

TEST_CASE("maximal rectangle in vertical and diagonal directions") {
  auto vert = maximal_rectangle(sinai(), rational_direction(0, 1), {0.0, 0.0});
  CHECK(vert.length == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(vert.width == doctest::Approx(0.6).epsilon(1e-12));
  auto diag = maximal_rectangle(sinai(), rational_direction(1, 1), {0.0, 0.5});
  CHECK(std::abs(diag.length - std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(diag.width - 2.0 * (std::sqrt(2.0) / 4.0 - 0.2)) < 1e-12);
  CHECK(kind_of([] { maximal_rectangle(sinai(), rational_direction(1, 1), {0.0, 0.0}); }) ==
        ErrorKind::trajectory_hits_obstacle);
  const DomainSpec big = build_domain(make_sinai({1.0, 1.0}, Disk{{0.5, 0.5}, 0.5 * std::sqrt(2.0) / 2.0}));
  CHECK(kind_of([&] { maximal_rectangle(big, rational_direction(1, 1), {0.0, 0.5}); }) ==
        ErrorKind::trajectory_hits_obstacle);
}

TEST_CASE("maximal rectangle width agrees with a sampled-boundary bisection") {
  // Lines y = x + c (mod 1) are blocked when sampled disk boundary points lie
  // on both sides. Bisect the free band edges from the centre line c = 0.5.
  const int samples = 200000;
  std::vector<Point> boundary;
  for (int k = 0; k < samples; ++k) {
    const double t = 2.0 * M_PI * k / samples;
    boundary.push_back({0.5 + 0.2 * std::cos(t), 0.5 + 0.2 * std::sin(t)});
  }
  auto blocked = [&](double c) {
    double lo = 1e9, hi = -1e9;
    for (const Point& p : boundary) {
      lo = std::min(lo, p.y - p.x);
      hi = std::max(hi, p.y - p.x);
    }
    for (int shift = -2; shift <= 2; ++shift)
      if (lo < c + shift && c + shift < hi) return true;
    return false;
  };
  auto edge = [&](double free_c, double blocked_c) {
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (free_c + blocked_c);
      (blocked(mid) ? blocked_c : free_c) = mid;
    }
    return free_c;
  };
  const double upper = edge(0.5, 1.0);
  const double lower = edge(0.5, 0.0);
  const double oracle = (upper - lower) / std::sqrt(2.0);
  auto diag = maximal_rectangle(sinai(), rational_direction(1, 1), {0.0, 0.5});
  CHECK(std::abs(diag.width - oracle) < 1e-6);
}

TEST_CASE("x-boundedness of slit-torus paths") {
  auto vertical = trace(slit_torus(), {0.1, 0.0}, rational_direction(0, 1), 5.0);
  auto xv = classify_x_bounded(slit_torus(), vertical);
  CHECK(xv.bounded);
  CHECK(xv.x_min == doctest::Approx(0.1));
  CHECK(xv.x_max == doctest::Approx(0.1));

  auto diag = trace(slit_torus(), {0.1, 0.1}, rational_direction(1, 1), 5.0);
  auto xd = classify_x_bounded(slit_torus(), diag);
  CHECK(xd.bounded);
  CHECK(xd.x_min == doctest::Approx(-0.5));
  CHECK(xd.x_max == doctest::Approx(0.5));

  auto two = trace(slit_torus(), {0.1, 0.5}, rational_direction(2, 1), 5.0);
  auto x2 = classify_x_bounded(slit_torus(), two);
  CHECK(x2.bounded);
  CHECK(x2.x_max - x2.x_min == doctest::Approx(2.0));

  // Two reflections out of three crossings per cycle: the lift drifts by one
  // period per cycle.
  auto drift = trace(slit_torus(), {0.1, 0.3 - 0.4 / 3.0}, rational_direction(3, 1), 5.0);
  auto xu = classify_x_bounded(slit_torus(), drift);
  CHECK_FALSE(xu.bounded);
  CHECK_FALSE(xu.inconclusive);

  auto miss = trace(slit_torus(), {0.1, 0.1}, rational_direction(1, 2), 5.0);
  CHECK_FALSE(classify_x_bounded(slit_torus(), miss).bounded);
}

TEST_CASE("unfolding plans") {
  auto vertical = trace(slit_torus(), {0.1, 0.0}, rational_direction(0, 1), 5.0);
  auto p0 = unfold(slit_torus(), vertical);
  CHECK(p0.stages() == 0);
  CHECK(p0.residual_lines.empty());
  CHECK(residual_support_clear(slit_torus(), p0));

  auto diag = trace(slit_torus(), {0.1, 0.1}, rational_direction(1, 1), 5.0);
  auto p1 = unfold(slit_torus(), diag);
  REQUIRE(p1.stages() == 1);
  CHECK(p1.strips[0].x_left == doctest::Approx(-0.5));
  CHECK(p1.strips[0].x_right == doctest::Approx(1.5));
  CHECK(p1.strips[0].reflection == doctest::Approx(0.5));
  CHECK(p1.period == doctest::Approx(2.0));
  REQUIRE(p1.residual_lines.size() == 2);
  CHECK(residual_support_clear(slit_torus(), p1));
  for (double y : p1.wall_crossings_y) CHECK(y == doctest::Approx(0.5));

  auto drift = trace(slit_torus(), {0.1, 0.3 - 0.4 / 3.0}, rational_direction(3, 1), 5.0);
  CHECK(kind_of([&] { unfold(slit_torus(), drift); }) == ErrorKind::not_x_bounded);
}

TEST_CASE("reflection maps are involutions") {
  auto diag = trace(slit_torus(), {0.1, 0.1}, rational_direction(1, 1), 5.0);
  auto plan = unfold(slit_torus(), diag);
  const double dx = 1.0 / 64.0;
  for (long c = -300; c <= 300; ++c) CHECK(reflect_column(plan, 1, reflect_column(plan, 1, c, dx), dx) == c);
  for (double x : {-0.5, -0.123, 0.0, 0.37, 0.5, 1.2}) {
    const Point p{x, 0.3};
    const Point back = apply_reflection(plan, 1, apply_reflection(plan, 1, p));
    CHECK(std::abs(back.x - x) <= 4.0 * std::numeric_limits<double>::epsilon());
    CHECK(back.y == p.y);
  }
}

TEST_CASE("unfold_function makes an odd 2W-periodic extension") {
  const DomainSpec& d = slit_torus();
  Grid g = rasterize(d, 32, 32);
  auto diag = trace(d, {0.1, 0.1}, rational_direction(1, 1), 5.0);
  auto plan = unfold(d, diag);
  std::vector<double> u(static_cast<std::size_t>(g.size()));
  for (int idx = 0; idx < g.size(); ++idx) u[static_cast<std::size_t>(idx)] = std::cos(1.0 + idx * 0.37);
  auto w = unfold_function(plan, g, u);
  REQUIRE(w.nx == 64);
  for (int j = 0; j < w.ny; ++j)
    for (int c = 1; c < 32; ++c) {
      CHECK(w.values[static_cast<std::size_t>(j * 64 + 32 + c)] == -w.values[static_cast<std::size_t>(j * 64 + 32 - c)]);
    }
  auto zero = unfold_function(plan, g, std::vector<double>(u.size(), 0.0));
  for (double v : zero.values) CHECK(v == 0.0);
  Grid coarse = rasterize(build_domain(make_slit_torus({1.0, 1.0}, {0.5, 0.25, 0.75})), 20, 20);
  auto shifted = plan;
  shifted.x_left += 0.01;
  shifted.x_right += 0.01;
  CHECK(kind_of([&] { unfold_function(shifted, coarse, std::vector<double>(static_cast<std::size_t>(coarse.size()), 0.0)); }) ==
        ErrorKind::plan_mismatch);
}
