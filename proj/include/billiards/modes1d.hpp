#pragma once

// Fourier-mode decomposition on R = [0,1] x [0,a] and the one-dimensional
// control estimate.
//
// Grid functions on R live on the (nx+1) x (ny+1) nodes x_i = i/nx,
// y_j = j*a/ny, row-major with index j*(nx+1)+i. Boundary rows and columns are
// Dirichlet and are ignored on input. One-dimensional functions on [0,1] are
// stored at the interior nodes x_1 .. x_{n-1}.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace billiards {

struct ModeStack {
  int nx = 0;
  int ny = 0;
  double a = 1.0;
  // coefficients[k-1][i-1] = u_k(x_i) for the y-basis e_k(y) = sqrt(2/a) sin(k pi y / a).
  std::vector<std::vector<double>> coefficients;

  double l2_norm_squared() const;  // sum_k ||u_k||^2 with the dx quadrature
};

ModeStack mode_split(std::span<const double> u, int nx, int ny, double a);
std::vector<double> reconstruct(const ModeStack& stack);

// L2(R) norm squared of a grid function (interior nodes, dx dy quadrature).
double grid_l2_squared(std::span<const double> u, int nx, int ny, double a);

// Sine coefficients b_m, f(x_i) = sum_m b_m sin(m pi x_i), for m = 1 .. n-1.
std::vector<double> sine_coefficients(std::span<const double> f);
std::vector<double> from_sine_coefficients(std::span<const double> b);

// Solves (d^2/dx^2 - c) u = f with u(0) = u(1) = 0; the symbol on sin(m pi x)
// is -m^2 pi^2 - c. Throws Error{resonant_mode} when c = -m^2 pi^2.
std::vector<double> solve_shifted(double c, std::span<const double> f);

// Mode-k equation with the y-frequency 2 k pi / a:
// (d^2/dx^2 - (z + (2 k pi / a)^2)) u_k = f_k.
std::vector<double> solve_mode(double z, int k, double a, std::span<const double> f);

// (sum_m b_m^2 / (1 + m^2 pi^2))^{1/2} with b_m the sine coefficients of f.
double h_minus1_norm(std::span<const double> f);
double h_minus1_norm_from_coefficients(std::span<const double> b);

// int_{x0}^{x1} sin(m pi x) sin(m' pi x) dx for m, m' = 1 .. modes.
std::vector<double> restriction_gram(int modes, double x0, double x1);

struct ControlProbe {
  int k = 0;
  double z = 0.0;
  double ratio = 0.0;  // ||u||^2 / (||f||_{H^-1}^2 + ||u|_omega||^2)
  bool resonant = false;
};

struct ControlOptions {
  std::pair<double, double> omega{0.0, 0.1};
  int k_max = 50;
  double z_max = 1e4;
  int z_samples = 200;
  int f_samples = 4;  // random sources per (k, z)
  int modes = 64;     // sine modes carried by each source
  double a = 1.0;
  std::uint64_t seed = 0x5eedULL;
};

struct ControlEstimate {
  std::pair<double, double> omega;
  int k_max = 0;
  std::vector<double> z_samples;
  double c_empirical = 0.0;
  int argmax_k = 0;
  double argmax_z = 0.0;
  bool argmax_resonant = false;
  double c_low_half = 0.0;   // sup over k in [1, k_max/2]
  double c_high_half = 0.0;  // sup over k in (k_max/2, k_max]
  std::vector<ControlProbe> probes;
};

// Resonant probes use the kernel function sin(m pi x) with f = 0; its ratio
// is ||sin(m pi x)||^2 / ||sin(m pi x)|_omega||^2.
double resonant_ratio(int m, std::pair<double, double> omega);

ControlEstimate estimate_control_constant(const ControlOptions& options);

}  // namespace billiards
