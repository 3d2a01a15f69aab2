#pragma once

// Data-parallel inner loops. Every kernel has a plain serial reference and an
// OpenMP variant with identical arithmetic per output element, so the two
// agree bit for bit; tests compare them and bench/ times them.

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "billiards/spectral.hpp"

namespace billiards::kernels {

using cplx = std::complex<double>;

enum class Backend : std::uint8_t { serial, openmp };

// Backend used by the library when the caller does not choose.
Backend default_backend();
void set_default_backend(Backend backend);
int thread_count();

// y = A x for a CSR matrix.
void csr_apply(const CsrMatrix& a, std::span<const double> x, std::span<double> y,
               Backend backend = default_backend());

// out = -Delta_h u on a fully periodic nx-by-ny grid (row-major, j * nx + i).
void periodic_stencil(int nx, int ny, double dx, double dy, std::span<const double> u,
                      std::span<double> out, Backend backend = default_backend());

// Left (Kohn-Nirenberg) quantization with a general symbol sampled on the
// grid: out(x_j) = sum_k symbol(j, k) * uhat_k * phase(j, k) / N, where
// `symbol_at(j, k)` returns a(x_j, h xi_k) and phases are exp(i xi_k . x_j).
struct DenseQuantizationInput {
  int nx = 0;
  int ny = 0;
  std::span<const cplx> uhat;          // unnormalized DFT of u, size nx * ny
  std::span<const cplx> phase_x;       // exp(2 pi i kx ix / nx), size nx * nx
  std::span<const cplx> phase_y;       // exp(2 pi i ky iy / ny), size ny * ny
  std::span<const double> xi1;         // h * xi for each kx index, size nx
  std::span<const double> xi2;         // h * xi for each ky index, size ny
  std::span<const double> x1;          // node coordinates, size nx
  std::span<const double> x2;          // size ny
};

using SymbolEvaluator = cplx (*)(const void* ctx, double x1, double x2, double xi1, double xi2);

void kn_apply_dense(const DenseQuantizationInput& in, SymbolEvaluator symbol, const void* ctx,
                    std::span<cplx> out, Backend backend = default_backend());

// Husimi weights on a phase grid. For each frequency cell c the coherent-state
// overlaps at the px-by-py positions are a trigonometric polynomial whose
// coefficients are the Gaussian-windowed Fourier coefficients of u folded
// modulo (px, py); one small inverse DFT per cell evaluates them.
struct HusimiInput {
  int nx = 0;
  int ny = 0;
  std::span<const cplx> coeff;         // orthonormal Fourier coefficients c_k, size nx * ny
  std::span<const double> kappa1;      // 2 pi k1 / a per kx index
  std::span<const double> kappa2;
  int px = 0;
  int py = 0;
  std::span<const double> xi1_centres; // frequency cell centres
  std::span<const double> xi2_centres;
  double h = 0.0;
  double torus_area = 1.0;
};

// out has size xi1_centres.size() * xi2_centres.size() * px * py and holds the
// Husimi density (not yet multiplied by cell volumes), ordered
// [(c2 * n1 + c1) * px * py + iy * px + ix].
void husimi_cells(const HusimiInput& in, std::span<double> out, Backend backend = default_backend());

}  // namespace billiards::kernels
