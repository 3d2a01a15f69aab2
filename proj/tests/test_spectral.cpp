#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "billiards/errors.hpp"
#include "billiards/spectral.hpp"

using namespace billiards;

namespace {

// Closed-form spectra of the 5-point Laplacian on product grids.
enum class Axis { dirichlet, neumann, periodic };

std::vector<double> axis_spectrum(Axis kind, int n, double length) {
  const double h = length / n;
  std::vector<double> out;
  auto s2 = [](double t) { return std::sin(t) * std::sin(t); };
  switch (kind) {
    case Axis::dirichlet:
      for (int m = 1; m < n; ++m) out.push_back(4.0 / (h * h) * s2(M_PI * m / (2.0 * n)));
      break;
    case Axis::neumann:
      for (int m = 0; m < n; ++m) out.push_back(4.0 / (h * h) * s2(M_PI * m / (2.0 * n)));
      break;
    case Axis::periodic:
      for (int k = 0; k < n; ++k) out.push_back(4.0 / (h * h) * s2(M_PI * k / n));
      break;
  }
  return out;
}

std::vector<double> product_spectrum(Axis kind, int nx, int ny, double w, double hgt) {
  std::vector<double> out;
  for (double a : axis_spectrum(kind, nx, w))
    for (double b : axis_spectrum(kind, ny, hgt)) out.push_back(a + b);
  std::sort(out.begin(), out.end());
  return out;
}

long count_below(const std::vector<double>& sorted, double x) {
  return std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
}

}  // namespace

TEST_CASE("assembled operator is symmetric with the expected row sums") {
  Grid g = rasterize(build_domain(make_torus(1.0, 1.0)), 32, 32);
  SparseOperator op = assemble_laplacian(g);
  CHECK(op.dimension() == 32 * 32);
  const CsrMatrix diff = op.matrix - CsrMatrix(op.matrix.transpose());
  CHECK(diff.norm() == doctest::Approx(0.0));
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(op.dimension());
  CHECK((op.matrix * ones).norm() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("unit-square Dirichlet ground state") {
  Grid g = rasterize(build_domain(make_rectangle(1.0, 1.0)), 64, 64);
  SparseOperator op = assemble_laplacian(g);
  const auto exact = product_spectrum(Axis::dirichlet, 64, 64, 1.0, 1.0);
  auto pairs = eigs_window(op, {0.0, 1});
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].lambda == doctest::Approx(exact[0]).epsilon(1e-10));
  CHECK(pairs[0].lambda == doctest::Approx(2.0 * M_PI * M_PI).epsilon(2e-3));
  CHECK(pairs[0].residual < 1e-8);
  double mass = 0.0;
  for (double v : pairs[0].vector) mass += v * v * g.cell_area();
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("second Dirichlet level of the square is a double eigenvalue") {
  Grid g = rasterize(build_domain(make_rectangle(1.0, 1.0)), 48, 48);
  SparseOperator op = assemble_laplacian(g);
  auto pairs = eigs_window(op, {5.0 * M_PI * M_PI, 2});
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].lambda == doctest::Approx(pairs[1].lambda).epsilon(1e-10));
  CHECK(pairs[0].cluster == pairs[1].cluster);
  CHECK(pairs[0].lambda == doctest::Approx(5.0 * M_PI * M_PI).epsilon(5e-3));
}

TEST_CASE("Sturm count matches the closed-form spectrum") {
  Grid g = rasterize(build_domain(make_rectangle(1.0, 1.5)), 40, 60);
  SparseOperator op = assemble_laplacian(g);
  const auto exact = product_spectrum(Axis::dirichlet, 40, 60, 1.0, 1.5);
  for (double sigma : {10.0, 100.0, 777.7, 2500.0}) {
    CHECK(count_eigenvalues_below(op, sigma) == count_below(exact, sigma));
  }
}

TEST_CASE("eigs_interval returns every eigenvalue of a clustered torus window") {
  Grid g = rasterize(build_domain(make_torus(1.0, 1.0)), 32, 32);
  SparseOperator op = assemble_laplacian(g);
  const auto exact = product_spectrum(Axis::periodic, 32, 32, 1.0, 1.0);
  const double lo = 300.0;
  const double hi = 900.0;
  auto pairs = eigs_interval(op, lo, hi);
  std::vector<double> want;
  for (double e : exact)
    if (e >= lo && e <= hi) want.push_back(e);
  REQUIRE(pairs.size() == want.size());
  for (std::size_t k = 0; k < want.size(); ++k) CHECK(pairs[k].lambda == doctest::Approx(want[k]).epsilon(1e-10));
}

TEST_CASE("torus kernel is the constants") {
  Grid g = rasterize(build_domain(make_torus(1.0, 1.0)), 24, 24);
  SparseOperator op = assemble_laplacian(g);
  auto pairs = eigs_window(op, {-1.0, 1});
  REQUIRE(pairs.size() == 1);
  CHECK(std::abs(pairs[0].lambda) < 1e-9);
  const double c = pairs[0].vector[0];
  for (double v : pairs[0].vector) CHECK(v == doctest::Approx(c).epsilon(1e-8));
}

TEST_CASE("cell-centred Neumann rectangle spectrum") {
  Grid g = rasterize(build_domain(make_rectangle(2.0, 1.0, BoundaryCondition::neumann)), 40, 20);
  SparseOperator op = assemble_laplacian(g);
  const auto exact = product_spectrum(Axis::neumann, 40, 20, 2.0, 1.0);
  auto pairs = eigs_window(op, {0.0, 8});
  REQUIRE(pairs.size() >= 8);
  std::vector<double> got;
  for (const auto& p : pairs) got.push_back(p.lambda);
  std::sort(got.begin(), got.end());
  for (std::size_t k = 0; k < 8; ++k) CHECK(got[k] == doctest::Approx(exact[k]).epsilon(1e-9));
}

TEST_CASE("eigs_above slices upward from a threshold") {
  Grid g = rasterize(build_domain(make_rectangle(1.0, 1.0)), 40, 40);
  SparseOperator op = assemble_laplacian(g);
  const auto exact = product_spectrum(Axis::dirichlet, 40, 40, 1.0, 1.0);
  auto pairs = eigs_above(op, 400.0, 60);
  REQUIRE(pairs.size() >= 60);
  const long first = count_below(exact, 400.0);
  for (std::size_t k = 0; k < 60; ++k) {
    CHECK(pairs[k].lambda == doctest::Approx(exact[static_cast<std::size_t>(first) + k]).epsilon(1e-9));
  }
}

TEST_CASE("iterative inner solves agree with the factorization") {
  Grid g = rasterize(build_domain(make_rectangle(1.0, 1.0)), 24, 24);
  SparseOperator op = assemble_laplacian(g);
  SolverOptions it;
  it.mode = SolverMode::iterative;
  auto a = eigs_window(op, {100.0, 3});
  auto b = eigs_window(op, {100.0, 3}, it);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].lambda == doctest::Approx(b[k].lambda).epsilon(1e-9));
}

TEST_CASE("mass_in_region on a symmetric ground state") {
  DomainSpec d = build_domain(make_rectangle(1.0, 1.0));
  Grid g = rasterize(d, 64, 64);
  SparseOperator op = assemble_laplacian(g);
  auto p = eigs_window(op, {0.0, 1}).front();
  const double left = mass_in_region(p, region_mask(d, SubRectangle{0.0, 0.5, 0.0, 1.0}, g), g);
  const double right = mass_in_region(p, region_mask(d, SubRectangle{0.5 + 1e-9, 1.0, 0.0, 1.0}, g), g);
  const double mid = mass_in_region(p, region_mask(d, SubRectangle{0.5, 0.5 + 1e-9, 0.0, 1.0}, g), g);
  CHECK(left == doctest::Approx(right).epsilon(1e-10));
  CHECK(left + right + mid == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eigenvectors satisfy the slit Dirichlet condition") {
  DomainSpec d = build_domain(make_slit_torus({1.0, 1.0}, {0.25, 0.2, 0.8}));
  Grid g = rasterize(d, 48, 48);
  SparseOperator op = assemble_laplacian(g);
  auto pairs = eigs_window(op, {200.0, 4});
  for (const auto& p : pairs) {
    CHECK(p.residual < 1e-8);
    for (int idx = 0; idx < g.size(); ++idx) {
      if (g.node_class[static_cast<std::size_t>(idx)] == NodeClass::slit) CHECK(p.vector[static_cast<std::size_t>(idx)] == 0.0);
    }
    CHECK(rayleigh_quotient(op, p.vector) == doctest::Approx(p.lambda).epsilon(1e-10));
  }
}
