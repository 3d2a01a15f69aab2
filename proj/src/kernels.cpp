#include "billiards/kernels.hpp"

#include <atomic>
#include <mutex>
#include <cmath>
#include <vector>

#include <fftw3.h>
#include <omp.h>

#include "billiards/errors.hpp"
#include "fft.hpp"

namespace billiards::kernels {

namespace {

std::atomic<Backend> g_backend{Backend::openmp};

// Rows are independent, so the OpenMP loop is the serial loop split by row.
inline double csr_row(const CsrMatrix& a, const double* x, int r) {
  const int* outer = a.outerIndexPtr();
  const int* inner = a.innerIndexPtr();
  const double* val = a.valuePtr();
  double s = 0.0;
  for (int p = outer[r]; p < outer[r + 1]; ++p) s += val[p] * x[inner[p]];
  return s;
}

inline double stencil_at(int nx, int ny, double wx, double wy, const double* u, int i, int j) {
  const int im = i == 0 ? nx - 1 : i - 1;
  const int ip = i == nx - 1 ? 0 : i + 1;
  const int jm = j == 0 ? ny - 1 : j - 1;
  const int jp = j == ny - 1 ? 0 : j + 1;
  const double c = u[j * nx + i];
  return wx * (2.0 * c - u[j * nx + im] - u[j * nx + ip]) + wy * (2.0 * c - u[jm * nx + i] - u[jp * nx + i]);
}

inline cplx kn_at(const DenseQuantizationInput& in, SymbolEvaluator symbol, const void* ctx, int ix, int iy) {
  cplx acc{0.0, 0.0};
  for (int ky = 0; ky < in.ny; ++ky) {
    const cplx py = in.phase_y[static_cast<std::size_t>(ky * in.ny + iy)];
    for (int kx = 0; kx < in.nx; ++kx) {
      const cplx a = symbol(ctx, in.x1[static_cast<std::size_t>(ix)], in.x2[static_cast<std::size_t>(iy)],
                            in.xi1[static_cast<std::size_t>(kx)], in.xi2[static_cast<std::size_t>(ky)]);
      acc += a * in.uhat[static_cast<std::size_t>(ky * in.nx + kx)] * in.phase_x[static_cast<std::size_t>(kx * in.nx + ix)] * py;
    }
  }
  return acc / static_cast<double>(in.nx * in.ny);
}

// One frequency cell: fold the Gaussian-windowed coefficients modulo (px, py)
// and evaluate the trigonometric polynomial at all positions with one DFT.
void husimi_cell(const HusimiInput& in, double xi1, double xi2, fftw_plan plan, fftw_complex* buf, double* out) {
  const int np = in.px * in.py;
  for (int q = 0; q < np; ++q) buf[q][0] = buf[q][1] = 0.0;
  const double inv2h = 1.0 / (2.0 * in.h);
  // Gaussian factors are separable: keep per axis only the indices whose
  // weight is not negligible against unit-size coefficients.
  auto axis = [&](int n, std::span<const double> kappa, double centre) {
    std::vector<std::pair<int, double>> keep;
    for (int k = 0; k < n; ++k) {
      const double d = in.h * kappa[static_cast<std::size_t>(k)] - centre;
      const double g = std::exp(-d * d * inv2h);
      if (g > 1e-18) keep.emplace_back(k, g);
    }
    return keep;
  };
  const auto gx = axis(in.nx, in.kappa1, xi1);
  const auto gy = axis(in.ny, in.kappa2, xi2);
  for (const auto& [ky, wy] : gy) {
    const int fy = ky % in.py;
    for (const auto& [kx, wx] : gx) {
      const cplx c = (wy * wx) * in.coeff[static_cast<std::size_t>(ky * in.nx + kx)];
      const int q = fy * in.px + (kx % in.px);
      buf[q][0] += c.real();
      buf[q][1] += c.imag();
    }
  }
  fftw_execute_dft(plan, buf, buf);
  const double scale = 1.0 / (M_PI * in.h * in.torus_area);
  for (int q = 0; q < np; ++q) out[q] = scale * (buf[q][0] * buf[q][0] + buf[q][1] * buf[q][1]);
}

}  // namespace

Backend default_backend() { return g_backend.load(); }
void set_default_backend(Backend backend) { g_backend.store(backend); }
int thread_count() { return omp_get_max_threads(); }

void csr_apply(const CsrMatrix& a, std::span<const double> x, std::span<double> y, Backend backend) {
  const int rows = static_cast<int>(a.rows());
  if (backend == Backend::serial) {
    for (int r = 0; r < rows; ++r) y[static_cast<std::size_t>(r)] = csr_row(a, x.data(), r);
    return;
  }
#pragma omp parallel for schedule(static) if (rows > 4096)
  for (int r = 0; r < rows; ++r) y[static_cast<std::size_t>(r)] = csr_row(a, x.data(), r);
}

void periodic_stencil(int nx, int ny, double dx, double dy, std::span<const double> u, std::span<double> out,
                      Backend backend) {
  const double wx = 1.0 / (dx * dx);
  const double wy = 1.0 / (dy * dy);
  if (backend == Backend::serial) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) out[static_cast<std::size_t>(j * nx + i)] = stencil_at(nx, ny, wx, wy, u.data(), i, j);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) out[static_cast<std::size_t>(j * nx + i)] = stencil_at(nx, ny, wx, wy, u.data(), i, j);
}

void kn_apply_dense(const DenseQuantizationInput& in, SymbolEvaluator symbol, const void* ctx, std::span<cplx> out,
                    Backend backend) {
  const int n = in.nx * in.ny;
  if (backend == Backend::serial) {
    for (int p = 0; p < n; ++p) out[static_cast<std::size_t>(p)] = kn_at(in, symbol, ctx, p % in.nx, p / in.nx);
    return;
  }
#pragma omp parallel for schedule(dynamic, 16)
  for (int p = 0; p < n; ++p) out[static_cast<std::size_t>(p)] = kn_at(in, symbol, ctx, p % in.nx, p / in.nx);
}

void husimi_cells(const HusimiInput& in, std::span<double> out, Backend backend) {
  const int n1 = static_cast<int>(in.xi1_centres.size());
  const int n2 = static_cast<int>(in.xi2_centres.size());
  const int np = in.px * in.py;
  if (out.size() != static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2) * static_cast<std::size_t>(np)) {
    throw Error(ErrorKind::config_error, "husimi output buffer has the wrong size");
  }
  fftw_complex* proto = fftw_alloc_complex(static_cast<std::size_t>(np));
  fftw_plan plan = nullptr;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    // Backward transform: sum_k c_k exp(+2 pi i k x / P).
    plan = fftw_plan_dft_2d(in.py, in.px, proto, proto, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  const int cells = n1 * n2;
  auto run = [&](int c, fftw_complex* buf) {
    const int c1 = c % n1;
    const int c2 = c / n1;
    husimi_cell(in, in.xi1_centres[static_cast<std::size_t>(c1)], in.xi2_centres[static_cast<std::size_t>(c2)], plan,
                buf, out.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(np));
  };
  if (backend == Backend::serial) {
    for (int c = 0; c < cells; ++c) run(c, proto);
  } else {
#pragma omp parallel
    {
      fftw_complex* buf = fftw_alloc_complex(static_cast<std::size_t>(np));
#pragma omp for schedule(dynamic, 1)
      for (int c = 0; c < cells; ++c) run(c, buf);
      fftw_free(buf);
    }
  }
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(proto);
}

}  // namespace billiards::kernels
