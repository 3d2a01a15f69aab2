#include "billiards/modes1d.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>

#include <fftw3.h>

#include "billiards/errors.hpp"
#include "fft.hpp"

namespace billiards {

namespace {

// Unnormalized DST-I: Y_k = 2 sum_j X_j sin(pi (j+1)(k+1) / (n+1)).
std::vector<double> dst1(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> in(x.begin(), x.end());
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 0) return out;
  fftw_plan plan = nullptr;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    plan = fftw_plan_r2r_1d(n, in.data(), out.data(), FFTW_RODFT00, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

void check_nodes(std::span<const double> u, int nx, int ny) {
  if (nx < 2 || ny < 2) throw Error(ErrorKind::resolution_too_coarse, "mode grids need nx, ny >= 2");
  if (u.size() != static_cast<std::size_t>(nx + 1) * static_cast<std::size_t>(ny + 1)) {
    throw Error(ErrorKind::config_error, "grid function has the wrong number of nodes");
  }
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double symbol(int m, double c) { return -static_cast<double>(m) * m * M_PI * M_PI - c; }

bool is_resonant(double c) {
  if (c >= 0.0) return false;
  const double m = std::round(std::sqrt(-c) / M_PI);
  return m >= 1.0 && std::abs(symbol(static_cast<int>(m), c)) <= 1e-12 * std::max(1.0, std::abs(c));
}

double quadratic(const std::vector<double>& g, int modes, const std::vector<double>& u) {
  double s = 0.0;
  for (int m = 0; m < modes; ++m) {
    double row = 0.0;
    for (int q = 0; q < modes; ++q) row += g[static_cast<std::size_t>(m * modes + q)] * u[static_cast<std::size_t>(q)];
    s += u[static_cast<std::size_t>(m)] * row;
  }
  return s;
}

}  // namespace

double ModeStack::l2_norm_squared() const {
  const double dx = 1.0 / nx;
  double s = 0.0;
  for (const auto& uk : coefficients)
    for (double v : uk) s += v * v * dx;
  return s;
}

ModeStack mode_split(std::span<const double> u, int nx, int ny, double a) {
  check_nodes(u, nx, ny);
  if (!(a > 0.0)) throw Error(ErrorKind::invalid_geometry, "rectangle height must be positive");
  ModeStack s;
  s.nx = nx;
  s.ny = ny;
  s.a = a;
  const int kmax = ny - 1;
  s.coefficients.assign(static_cast<std::size_t>(kmax), std::vector<double>(static_cast<std::size_t>(nx - 1), 0.0));
  // u_k(x_i) = sum_j dy u(x_i, y_j) e_k(y_j) = dy sqrt(2/a) * DST(u(x_i, .)) / 2.
  const double scale = 0.5 * (a / ny) * std::sqrt(2.0 / a);
  std::vector<double> column(static_cast<std::size_t>(kmax));
  for (int i = 1; i < nx; ++i) {
    for (int j = 1; j < ny; ++j) column[static_cast<std::size_t>(j - 1)] = u[static_cast<std::size_t>(j * (nx + 1) + i)];
    const auto y = dst1(column);
    for (int k = 0; k < kmax; ++k) s.coefficients[static_cast<std::size_t>(k)][static_cast<std::size_t>(i - 1)] = scale * y[static_cast<std::size_t>(k)];
  }
  return s;
}

std::vector<double> reconstruct(const ModeStack& s) {
  const int nx = s.nx;
  const int ny = s.ny;
  std::vector<double> u(static_cast<std::size_t>(nx + 1) * static_cast<std::size_t>(ny + 1), 0.0);
  const int kmax = ny - 1;
  // u(x_i, y_j) = sum_k u_k(x_i) sqrt(2/a) sin(k pi j / ny) = sqrt(2/a) DST(u_.(x_i)) / 2.
  const double scale = 0.5 * std::sqrt(2.0 / s.a);
  std::vector<double> column(static_cast<std::size_t>(kmax));
  for (int i = 1; i < nx; ++i) {
    for (int k = 0; k < kmax; ++k) column[static_cast<std::size_t>(k)] = s.coefficients[static_cast<std::size_t>(k)][static_cast<std::size_t>(i - 1)];
    const auto y = dst1(column);
    for (int j = 1; j < ny; ++j) u[static_cast<std::size_t>(j * (nx + 1) + i)] = scale * y[static_cast<std::size_t>(j - 1)];
  }
  return u;
}

double grid_l2_squared(std::span<const double> u, int nx, int ny, double a) {
  check_nodes(u, nx, ny);
  double s = 0.0;
  for (int j = 1; j < ny; ++j)
    for (int i = 1; i < nx; ++i) {
      const double v = u[static_cast<std::size_t>(j * (nx + 1) + i)];
      s += v * v;
    }
  return s * (1.0 / nx) * (a / ny);
}

std::vector<double> sine_coefficients(std::span<const double> f) {
  const double n = static_cast<double>(f.size() + 1);
  auto b = dst1(f);
  for (auto& v : b) v /= n;
  return b;
}

std::vector<double> from_sine_coefficients(std::span<const double> b) {
  auto f = dst1(b);
  for (auto& v : f) v *= 0.5;
  return f;
}

std::vector<double> solve_shifted(double c, std::span<const double> f) {
  if (is_resonant(c)) {
    throw Error(ErrorKind::resonant_mode,
                "d^2/dx^2 - c is singular: c = -m^2 pi^2 with m = " + std::to_string(static_cast<int>(std::round(std::sqrt(-c) / M_PI))));
  }
  auto b = sine_coefficients(f);
  for (std::size_t m = 0; m < b.size(); ++m) b[m] /= symbol(static_cast<int>(m + 1), c);
  return from_sine_coefficients(b);
}

std::vector<double> solve_mode(double z, int k, double a, std::span<const double> f) {
  if (k < 1) throw Error(ErrorKind::config_error, "mode index must be >= 1");
  const double ky = 2.0 * k * M_PI / a;
  return solve_shifted(z + ky * ky, f);
}

double h_minus1_norm_from_coefficients(std::span<const double> b) {
  double s = 0.0;
  for (std::size_t m = 0; m < b.size(); ++m) {
    const double mp = static_cast<double>(m + 1) * M_PI;
    s += b[m] * b[m] / (1.0 + mp * mp);
  }
  return std::sqrt(s);
}

double h_minus1_norm(std::span<const double> f) {
  const auto b = sine_coefficients(f);
  return h_minus1_norm_from_coefficients(b);
}

std::vector<double> restriction_gram(int modes, double x0, double x1) {
  std::vector<double> g(static_cast<std::size_t>(modes) * static_cast<std::size_t>(modes));
  auto prim = [](double w, double x) { return std::sin(w * x) / w; };
  for (int m = 1; m <= modes; ++m) {
    for (int q = 1; q <= modes; ++q) {
      double v;
      if (m == q) {
        const double w = 2.0 * m * M_PI;
        v = 0.5 * ((x1 - x0) - (prim(w, x1) - prim(w, x0)));
      } else {
        const double wm = (m - q) * M_PI;
        const double wp = (m + q) * M_PI;
        v = 0.5 * ((prim(wm, x1) - prim(wm, x0)) - (prim(wp, x1) - prim(wp, x0)));
      }
      g[static_cast<std::size_t>((m - 1) * modes + (q - 1))] = v;
    }
  }
  return g;
}

double resonant_ratio(int m, std::pair<double, double> omega) {
  const double w = 2.0 * m * M_PI;
  const double full = 0.5;
  const double part = 0.5 * ((omega.second - omega.first) - (std::sin(w * omega.second) - std::sin(w * omega.first)) / w);
  return full / part;
}

ControlEstimate estimate_control_constant(const ControlOptions& o) {
  const auto [x0, x1] = o.omega;
  if (!(0.0 <= x0 && x0 < x1 && x1 <= 1.0)) throw Error(ErrorKind::config_error, "omega must be a nonempty subinterval of [0,1]");
  if (o.k_max < 1 || o.z_samples < 1 || o.f_samples < 1 || o.modes < 1) {
    throw Error(ErrorKind::config_error, "control estimate needs positive k_max, samples and modes");
  }
  ControlEstimate est;
  est.omega = o.omega;
  est.k_max = o.k_max;
  for (int s = 0; s < o.z_samples; ++s) {
    est.z_samples.push_back(o.z_samples == 1 ? 0.0 : -o.z_max + 2.0 * o.z_max * s / (o.z_samples - 1));
  }
  const int modes = o.modes;
  const auto gram = restriction_gram(modes, x0, x1);

  std::vector<std::vector<ControlProbe>> per_k(static_cast<std::size_t>(o.k_max));
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 1; k <= o.k_max; ++k) {
    auto& out = per_k[static_cast<std::size_t>(k - 1)];
    const double ky = 2.0 * k * M_PI / o.a;
    std::vector<double> b(static_cast<std::size_t>(modes));
    std::vector<double> u(static_cast<std::size_t>(modes));
    for (std::size_t zi = 0; zi < est.z_samples.size(); ++zi) {
      const double z = est.z_samples[zi];
      const double c = z + ky * ky;
      std::mt19937_64 rng(splitmix(o.seed ^ splitmix((static_cast<std::uint64_t>(k) << 32) | zi)));
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      double best = 0.0;
      for (int s = 0; s < o.f_samples; ++s) {
        for (int m = 1; m <= modes; ++m) b[static_cast<std::size_t>(m - 1)] = unit(rng) / m;
        if (is_resonant(c)) break;
        double l2 = 0.0;
        for (int m = 1; m <= modes; ++m) {
          u[static_cast<std::size_t>(m - 1)] = b[static_cast<std::size_t>(m - 1)] / symbol(m, c);
          l2 += 0.5 * u[static_cast<std::size_t>(m - 1)] * u[static_cast<std::size_t>(m - 1)];
        }
        const double hm1 = h_minus1_norm_from_coefficients(b);
        best = std::max(best, l2 / (hm1 * hm1 + quadratic(gram, modes, u)));
      }
      if (is_resonant(c)) {
        out.push_back({k, z, resonant_ratio(static_cast<int>(std::round(std::sqrt(-c) / M_PI)), o.omega), true});
      } else {
        out.push_back({k, z, best, false});
      }
    }
    // Homogeneous solutions at the resonant z inside the sampled range.
    for (int m = 1;; ++m) {
      const double z = -static_cast<double>(m) * m * M_PI * M_PI - ky * ky;
      if (z < -o.z_max) break;
      if (z > o.z_max) continue;
      out.push_back({k, z, resonant_ratio(m, o.omega), true});
    }
  }
  for (auto& v : per_k)
    for (auto& p : v) est.probes.push_back(p);

  const int half = o.k_max / 2;
  for (const auto& p : est.probes) {
    if (p.ratio > est.c_empirical) {
      est.c_empirical = p.ratio;
      est.argmax_k = p.k;
      est.argmax_z = p.z;
      est.argmax_resonant = p.resonant;
    }
    double& side = p.k <= half ? est.c_low_half : est.c_high_half;
    side = std::max(side, p.ratio);
  }
  return est;
}

}  // namespace billiards
