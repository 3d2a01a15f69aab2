#include <doctest.h>

#include <cmath>

#include "billiards/errors.hpp"
#include "billiards/geometry.hpp"

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

}  // namespace

TEST_CASE("sinai disk must fit strictly inside the torus") {
  CHECK_NOTHROW(build_domain(make_sinai({1.0, 1.0}, Disk{{0.5, 0.5}, 0.2})));
  CHECK(kind_of([] { build_domain(make_sinai({1.0, 1.0}, Disk{{0.5, 0.5}, 0.5})); }) == ErrorKind::invalid_geometry);
  CHECK(kind_of([] { build_domain(make_sinai({1.0, 1.0}, Disk{{0.1, 0.5}, 0.2})); }) == ErrorKind::invalid_geometry);
}

TEST_CASE("slit endpoints are normalized and validated") {
  auto d = build_domain(make_slit_torus({1.0, 1.0}, {0.25, 0.6, 0.2}));
  REQUIRE(d.slit() != nullptr);
  CHECK(d.slit()->y0 == doctest::Approx(0.2));
  CHECK(d.slit()->y1 == doctest::Approx(0.6));
  CHECK(kind_of([] { build_domain(make_slit_torus({1.0, 1.0}, {1.2, 0.2, 0.6})); }) == ErrorKind::invalid_geometry);
  CHECK(kind_of([] { build_domain(make_slit_torus({1.0, 1.0}, {0.5, 0.3, 0.3})); }) == ErrorKind::invalid_geometry);
}

TEST_CASE("polygon obstacles are oriented counter-clockwise") {
  Polygon cw{{{0.4, 0.4}, {0.4, 0.6}, {0.6, 0.6}, {0.6, 0.4}}};
  auto d = build_domain(make_sinai({1.0, 1.0}, cw));
  const auto& poly = std::get<Polygon>(*d.obstacle());
  double area2 = 0.0;
  for (std::size_t k = 0; k < poly.vertices.size(); ++k) {
    const Point p = poly.vertices[k];
    const Point q = poly.vertices[(k + 1) % poly.vertices.size()];
    area2 += p.x * q.y - q.x * p.y;
  }
  CHECK(area2 > 0.0);
  CHECK(obstacle_area(*d.obstacle()) == doctest::Approx(0.04));
  Polygon bowtie{{{0.3, 0.3}, {0.7, 0.7}, {0.7, 0.3}, {0.3, 0.7}}};
  CHECK(kind_of([&] { build_domain(make_sinai({1.0, 1.0}, bowtie)); }) == ErrorKind::invalid_geometry);
}

TEST_CASE("rasterize rejects coarse grids and off-grid slits") {
  auto torus = build_domain(make_torus(1.0, 1.0));
  CHECK(kind_of([&] { rasterize(torus, 8, 64); }) == ErrorKind::resolution_too_coarse);
  auto slit = build_domain(make_slit_torus({1.0, 1.0}, {0.3, 0.2, 0.6}));
  CHECK(kind_of([&] { rasterize(slit, 64, 64); }) == ErrorKind::invalid_geometry);
  CHECK_NOTHROW(rasterize(slit, 80, 80));
}

TEST_CASE("slit nodes and their horizontal neighbours are classified") {
  auto d = build_domain(make_slit_torus({1.0, 1.0}, {0.25, 0.25, 0.75}));
  Grid g = rasterize(d, 64, 64);
  const int is = 16;
  int slit_nodes = 0;
  for (int j = 0; j < g.ny; ++j) {
    const double y = g.position(is, j).y;
    const bool on = y >= 0.25 && y <= 0.75;
    CHECK((g.node_class[static_cast<std::size_t>(g.index(is, j))] == NodeClass::slit) == on);
    if (on) {
      ++slit_nodes;
      CHECK(g.node_class[static_cast<std::size_t>(g.index(is - 1, j))] == NodeClass::slit_adjacent);
      CHECK(g.node_class[static_cast<std::size_t>(g.index(is + 1, j))] == NodeClass::slit_adjacent);
    }
  }
  CHECK(slit_nodes == 33);
}

TEST_CASE("disk obstacle node count approximates its area") {
  auto d = build_domain(make_sinai({1.0, 1.0}, Disk{{0.5, 0.5}, 0.2}));
  Grid g = rasterize(d, 200, 200);
  std::size_t inside = 0;
  for (auto c : g.node_class) inside += c == NodeClass::obstacle ? 1U : 0U;
  const double area = static_cast<double>(inside) * g.cell_area();
  CHECK(area == doctest::Approx(M_PI * 0.04).epsilon(0.02));
}

TEST_CASE("region masks use the torus metric and exclude the obstacle") {
  auto d = build_domain(make_sinai({1.0, 1.0}, Disk{{0.5, 0.5}, 0.2}));
  Grid g = rasterize(d, 100, 100);
  NodeMask ring = region_mask(d, ObstacleNeighborhood{0.05}, g);
  for (int idx = 0; idx < g.size(); ++idx) {
    if (ring[static_cast<std::size_t>(idx)] == 0U) continue;
    const Point p = g.position(idx);
    const double r = norm(p - Point{0.5, 0.5});
    CHECK(r >= 0.2 - 1e-12);
    CHECK(r < 0.25 + 1e-12);
  }
  // A segment crossing the seam reaches nodes on the far side.
  auto torus = build_domain(make_torus(1.0, 1.0));
  Grid t = rasterize(torus, 100, 100);
  NodeMask seam = region_mask(torus, SegmentNeighborhood{{{0.5, 0.0}, {0.5, 0.0}}, 0.035}, t);
  CHECK(seam[static_cast<std::size_t>(t.index(50, 99))] == 1U);
  CHECK(kind_of([&] { region_mask(torus, SubRectangle{0.101, 0.102, 0.0, 1.0}, t); }) == ErrorKind::empty_region);
}

TEST_CASE("torus_wrap returns the minimal image") {
  const TorusSpec t{2.0, 1.0};
  const Point w = torus_wrap({1.9, -0.8}, t);
  CHECK(w.x == doctest::Approx(-0.1));
  CHECK(w.y == doctest::Approx(0.2));
}
