#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "billiards/geometry.hpp"
#include "billiards/kernels.hpp"
#include "billiards/spectral.hpp"

using namespace billiards;
using kernels::Backend;
using kernels::cplx;

namespace {

std::vector<double> noise(std::size_t n) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

Backend backend_of(const benchmark::State& s) { return s.range(0) == 0 ? Backend::serial : Backend::openmp; }

void label(benchmark::State& s) { s.SetLabel(s.range(0) == 0 ? "serial" : "openmp"); }

void BM_csr_apply(benchmark::State& state) {
  const Grid g = rasterize(build_domain(make_sinai({1.0, 1.0}, Disk{{0.5, 0.5}, 0.2})), 512, 512);
  const SparseOperator op = assemble_laplacian(g);
  const auto x = noise(static_cast<std::size_t>(op.dimension()));
  std::vector<double> y(x.size());
  for (auto _ : state) {
    kernels::csr_apply(op.matrix, x, y, backend_of(state));
    benchmark::DoNotOptimize(y.data());
  }
  label(state);
}

void BM_periodic_stencil(benchmark::State& state) {
  const int n = 1024;
  const auto u = noise(static_cast<std::size_t>(n * n));
  std::vector<double> out(u.size());
  for (auto _ : state) {
    kernels::periodic_stencil(n, n, 1.0 / n, 1.0 / n, u, out, backend_of(state));
    benchmark::DoNotOptimize(out.data());
  }
  label(state);
}

void BM_husimi_cells(benchmark::State& state) {
  const int n = 128;
  const auto re = noise(static_cast<std::size_t>(n * n));
  std::vector<cplx> coeff(re.begin(), re.end());
  std::vector<double> kappa(n);
  for (int k = 0; k < n; ++k) kappa[static_cast<std::size_t>(k)] = 2.0 * M_PI * (k <= (n - 1) / 2 ? k : k - n);
  std::vector<double> centres(32);
  for (int c = 0; c < 32; ++c) centres[static_cast<std::size_t>(c)] = -2.0 + (c + 0.5) * 0.125;
  kernels::HusimiInput in{n, n, coeff, kappa, kappa, 32, 32, centres, centres, 0.02, 1.0};
  std::vector<double> out(32 * 32 * 32 * 32);
  for (auto _ : state) {
    kernels::husimi_cells(in, out, backend_of(state));
    benchmark::DoNotOptimize(out.data());
  }
  label(state);
}

cplx symbol(const void*, double x1, double x2, double xi1, double xi2) {
  return {std::cos(2.0 * M_PI * x1) * std::exp(-xi1 * xi1), std::sin(2.0 * M_PI * x2) * xi2};
}

void BM_kn_apply_dense(benchmark::State& state) {
  const int n = 24;
  const auto re = noise(static_cast<std::size_t>(n * n));
  std::vector<cplx> uhat(re.begin(), re.end());
  std::vector<cplx> phase(static_cast<std::size_t>(n * n));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) phase[static_cast<std::size_t>(k * n + i)] = std::polar(1.0, 2.0 * M_PI * k * i / n);
  std::vector<double> xi(n), x(n);
  for (int i = 0; i < n; ++i) {
    xi[static_cast<std::size_t>(i)] = 0.1 * (i - n / 2);
    x[static_cast<std::size_t>(i)] = static_cast<double>(i) / n;
  }
  kernels::DenseQuantizationInput in{n, n, uhat, phase, phase, xi, xi, x, x};
  std::vector<cplx> out(uhat.size());
  for (auto _ : state) {
    kernels::kn_apply_dense(in, symbol, nullptr, out, backend_of(state));
    benchmark::DoNotOptimize(out.data());
  }
  label(state);
}

}  // namespace

BENCHMARK(BM_csr_apply)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_periodic_stencil)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_husimi_cells)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_kn_apply_dense)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
