#include "billiards/microlocal.hpp"

#include <cmath>
#include <numeric>

#include "billiards/errors.hpp"
#include "billiards/io.hpp"
#include "billiards/kernels.hpp"
#include "fft.hpp"

namespace billiards {

namespace {

int signed_index(int k, int n) { return k <= (n - 1) / 2 ? k : k - n; }

std::vector<double> wavenumbers(int n, double period) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = 2.0 * M_PI * signed_index(k, n) / period;
  return out;
}

std::vector<cplx> spectrum_of(const TorusField& u) {
  std::vector<cplx> data = u.values;
  detail::Fft2(u.nx, u.ny).forward(data);
  return data;
}

TorusField like(const TorusField& u) {
  TorusField out;
  out.torus = u.torus;
  out.nx = u.nx;
  out.ny = u.ny;
  out.values.assign(u.values.size(), cplx{0.0, 0.0});
  return out;
}

void check_field(const TorusField& u) {
  if (u.nx < 2 || u.ny < 2 || u.values.size() != static_cast<std::size_t>(u.nx) * static_cast<std::size_t>(u.ny)) {
    throw Error(ErrorKind::config_error, "torus field has inconsistent dimensions");
  }
}

// g(h kappa) * U, transformed back and multiplied by f at every node.
void add_separable_term(const SymbolTerm& term, double h, const TorusField& u, const std::vector<cplx>& uhat,
                        const detail::Fft2& fft, TorusField& out) {
  const auto k1 = wavenumbers(u.nx, u.torus.a);
  const auto k2 = wavenumbers(u.ny, u.torus.b);
  std::vector<cplx> v(uhat.size());
  for (int j = 0; j < u.ny; ++j)
    for (int i = 0; i < u.nx; ++i) {
      const std::size_t p = static_cast<std::size_t>(j * u.nx + i);
      v[p] = term.g({h * k1[static_cast<std::size_t>(i)], h * k2[static_cast<std::size_t>(j)]}) * uhat[p];
    }
  fft.backward(v);
  const double inv_n = 1.0 / static_cast<double>(u.nx * u.ny);
  for (int j = 0; j < u.ny; ++j)
    for (int i = 0; i < u.nx; ++i) {
      const std::size_t p = static_cast<std::size_t>(j * u.nx + i);
      out.values[p] += term.f(u.position(i, j)) * v[p] * inv_n;
    }
}

cplx trampoline(const void* ctx, double x1, double x2, double xi1, double xi2) {
  return static_cast<const SymbolFn*>(ctx)->eval({x1, x2}, {xi1, xi2});
}

}  // namespace

double TorusField::norm() const {
  double s = 0.0;
  for (const cplx& v : values) s += std::norm(v);
  return std::sqrt(s * dx() * dy());
}

TorusField torus_field(const DomainSpec& domain, const Grid& grid, std::span<const double> u) {
  const TorusSpec* torus = domain.torus();
  if (torus == nullptr || !grid.periodic) throw Error(ErrorKind::config_error, "phase-space tools need a torus-type domain");
  if (u.size() != static_cast<std::size_t>(grid.size())) throw Error(ErrorKind::config_error, "grid function size mismatch");
  TorusField f;
  f.torus = *torus;
  f.nx = grid.nx;
  f.ny = grid.ny;
  f.values.assign(u.begin(), u.end());
  return f;
}

TorusField plane_wave(const TorusSpec& torus, int nx, int ny, long m, long n) {
  TorusField f;
  f.torus = torus;
  f.nx = nx;
  f.ny = ny;
  f.values.resize(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  const double amp = 1.0 / std::sqrt(torus.a * torus.b);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      // Reduce the phase in integers so large m, n stay exact.
      const double turns = static_cast<double>((m * i) % nx) / nx + static_cast<double>((n * j) % ny) / ny;
      f.values[static_cast<std::size_t>(j * nx + i)] = std::polar(amp, 2.0 * M_PI * turns);
    }
  return f;
}

cplx inner(const TorusField& u, const TorusField& v) {
  if (u.values.size() != v.values.size()) throw Error(ErrorKind::config_error, "inner product of mismatched fields");
  cplx s{0.0, 0.0};
  for (std::size_t p = 0; p < u.values.size(); ++p) s += u.values[p] * std::conj(v.values[p]);
  return s * u.dx() * u.dy();
}

SymbolFn separable_symbol(std::vector<SymbolTerm> terms, bool periodic_in_x, bool compact_in_xi) {
  SymbolFn a;
  a.terms = std::move(terms);
  a.eval = [t = a.terms](Point x, Point xi) {
    cplx s{0.0, 0.0};
    for (const auto& term : t) s += term.f(x) * term.g(xi);
    return s;
  };
  a.periodic_in_x = periodic_in_x;
  a.compact_in_xi = compact_in_xi;
  return a;
}

SymbolFn general_symbol(std::function<cplx(Point, Point)> eval, bool periodic_in_x, bool compact_in_xi) {
  SymbolFn a;
  a.eval = std::move(eval);
  a.periodic_in_x = periodic_in_x;
  a.compact_in_xi = compact_in_xi;
  return a;
}

SymbolFn constant_symbol(cplx c) {
  return separable_symbol({{[c](Point) { return c; }, [](Point) { return cplx{1.0, 0.0}; },
                            [](Point) { return std::array<cplx, 2>{}; }, true}});
}

SymbolFn bracket_with_p(const SymbolFn& a) {
  if (a.separable()) {
    std::vector<SymbolTerm> out;
    for (const auto& term : a.terms) {
      if (!term.grad_f) throw Error(ErrorKind::config_error, "bracket needs grad_f on every separable term");
      for (int d = 0; d < 2; ++d) {
        out.push_back({[grad = term.grad_f, d](Point x) { return grad(x)[static_cast<std::size_t>(d)]; },
                       [g = term.g, d](Point xi) { return 2.0 * (d == 0 ? xi.x : xi.y) * g(xi); },
                       {}});
      }
    }
    SymbolFn b = separable_symbol(std::move(out), a.periodic_in_x, a.compact_in_xi);
    b.order_class = a.order_class + " * <xi>";
    return b;
  }
  const double step = 1e-5;
  SymbolFn b = general_symbol(
      [eval = a.eval, step](Point x, Point xi) {
        const cplx d1 = (eval({x.x + step, x.y}, xi) - eval({x.x - step, x.y}, xi)) / (2.0 * step);
        const cplx d2 = (eval({x.x, x.y + step}, xi) - eval({x.x, x.y - step}, xi)) / (2.0 * step);
        return 2.0 * (xi.x * d1 + xi.y * d2);
      },
      a.periodic_in_x, a.compact_in_xi);
  b.order_class = a.order_class + " * <xi>";
  return b;
}

TorusField quantize_apply(const SymbolFn& a, double h, const TorusField& u, QuantizePath path) {
  check_field(u);
  if (path == QuantizePath::automatic) path = a.separable() ? QuantizePath::separable : QuantizePath::dense;
  if (path == QuantizePath::separable && !a.separable()) {
    throw Error(ErrorKind::config_error, "separable quantization requested for a general symbol");
  }
  TorusField out = like(u);
  const auto uhat = spectrum_of(u);
  if (path == QuantizePath::separable) {
    const detail::Fft2 fft(u.nx, u.ny);
    for (const auto& term : a.terms) {
      if (!term.xi_independent) {
        add_separable_term(term, h, u, uhat, fft, out);
        continue;
      }
      for (int j = 0; j < u.ny; ++j)
        for (int i = 0; i < u.nx; ++i) {
          const std::size_t p = static_cast<std::size_t>(j * u.nx + i);
          out.values[p] += term.f(u.position(i, j)) * u.values[p];
        }
    }
    return out;
  }

  const int nx = u.nx;
  const int ny = u.ny;
  std::vector<cplx> phase_x(static_cast<std::size_t>(nx * nx));
  std::vector<cplx> phase_y(static_cast<std::size_t>(ny * ny));
  for (int k = 0; k < nx; ++k)
    for (int i = 0; i < nx; ++i) phase_x[static_cast<std::size_t>(k * nx + i)] = std::polar(1.0, 2.0 * M_PI * ((k * i) % nx) / nx);
  for (int k = 0; k < ny; ++k)
    for (int j = 0; j < ny; ++j) phase_y[static_cast<std::size_t>(k * ny + j)] = std::polar(1.0, 2.0 * M_PI * ((k * j) % ny) / ny);
  auto xi1 = wavenumbers(nx, u.torus.a);
  auto xi2 = wavenumbers(ny, u.torus.b);
  for (auto& v : xi1) v *= h;
  for (auto& v : xi2) v *= h;
  std::vector<double> x1(static_cast<std::size_t>(nx));
  std::vector<double> x2(static_cast<std::size_t>(ny));
  for (int i = 0; i < nx; ++i) x1[static_cast<std::size_t>(i)] = i * u.dx();
  for (int j = 0; j < ny; ++j) x2[static_cast<std::size_t>(j)] = j * u.dy();
  kernels::DenseQuantizationInput in{nx, ny, uhat, phase_x, phase_y, xi1, xi2, x1, x2};
  kernels::kn_apply_dense(in, trampoline, &a, out.values);
  return out;
}

TorusField weyl_apply(const SymbolFn& a, double h, const TorusField& u) {
  check_field(u);
  if (!a.separable()) throw Error(ErrorKind::config_error, "Weyl quantization is implemented for separable symbols");
  const int nx = u.nx;
  const int ny = u.ny;
  const double inv_n = 1.0 / static_cast<double>(nx * ny);
  const auto k1 = wavenumbers(nx, u.torus.a);
  const auto k2 = wavenumbers(ny, u.torus.b);
  const auto uhat = spectrum_of(u);
  const detail::Fft2 fft(nx, ny);
  TorusField out = like(u);
  std::vector<cplx> v(uhat.size());
  for (const auto& term : a.terms) {
    TorusField f = like(u);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) f.values[static_cast<std::size_t>(j * nx + i)] = term.f(u.position(i, j));
    auto fhat = spectrum_of(f);
    double fmax = 0.0;
    for (const cplx& c : fhat) fmax = std::max(fmax, std::abs(c));
    for (int mj = 0; mj < ny; ++mj)
      for (int mi = 0; mi < nx; ++mi) {
        const cplx fm = fhat[static_cast<std::size_t>(mj * nx + mi)] * inv_n;
        if (std::abs(fm) * nx * ny <= 1e-14 * fmax) continue;
        const double mu1 = k1[static_cast<std::size_t>(mi)];
        const double mu2 = k2[static_cast<std::size_t>(mj)];
        for (int j = 0; j < ny; ++j)
          for (int i = 0; i < nx; ++i) {
            const std::size_t p = static_cast<std::size_t>(j * nx + i);
            v[p] = term.g({h * (k1[static_cast<std::size_t>(i)] + 0.5 * mu1), h * (k2[static_cast<std::size_t>(j)] + 0.5 * mu2)}) *
                   uhat[p];
          }
        fft.backward(v);
        const int si = signed_index(mi, nx);
        const int sj = signed_index(mj, ny);
        for (int j = 0; j < ny; ++j)
          for (int i = 0; i < nx; ++i) {
            const double turns = static_cast<double>(((si * i) % nx + nx) % nx) / nx +
                                 static_cast<double>(((sj * j) % ny + ny) % ny) / ny;
            const std::size_t p = static_cast<std::size_t>(j * nx + i);
            out.values[p] += fm * std::polar(1.0, 2.0 * M_PI * turns) * v[p] * inv_n;
          }
      }
  }
  return out;
}

TorusField translate(const TorusField& u, Point gamma) {
  check_field(u);
  const double fi = gamma.x / u.dx();
  const double fj = gamma.y / u.dy();
  const long si = std::lround(fi);
  const long sj = std::lround(fj);
  if (std::abs(fi - si) > 1e-9 || std::abs(fj - sj) > 1e-9) {
    throw Error(ErrorKind::gamma_not_on_grid, "translation is not a whole number of grid steps");
  }
  TorusField out = like(u);
  for (long j = 0; j < u.ny; ++j)
    for (long i = 0; i < u.nx; ++i) {
      const long ii = ((i - si) % u.nx + u.nx) % u.nx;
      const long jj = ((j - sj) % u.ny + u.ny) % u.ny;
      out.values[static_cast<std::size_t>(j * u.nx + i)] = u.values[static_cast<std::size_t>(jj * u.nx + ii)];
    }
  return out;
}

double translation_commutator(const SymbolFn& a, double h, Point gamma, std::span<const TorusField> probes) {
  double worst = 0.0;
  for (const auto& u : probes) {
    const double nu = u.norm();
    if (nu == 0.0) continue;
    TorusField lhs = quantize_apply(a, h, translate(u, gamma));
    const TorusField rhs = translate(quantize_apply(a, h, u), gamma);
    for (std::size_t p = 0; p < lhs.values.size(); ++p) lhs.values[p] -= rhs.values[p];
    worst = std::max(worst, lhs.norm() / nu);
  }
  return worst;
}

double PhaseMeasure::total() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

Point PhaseMeasure::position(int ix, int iy) const { return {ix * torus.a / grid.px, iy * torus.b / grid.py}; }

Point PhaseMeasure::frequency(int c1, int c2) const {
  return {-grid.xi_max + (c1 + 0.5) * 2.0 * grid.xi_max / grid.n1, -grid.xi_max + (c2 + 0.5) * 2.0 * grid.xi_max / grid.n2};
}

std::size_t PhaseMeasure::index(int ix, int iy, int c1, int c2) const {
  return static_cast<std::size_t>(c2 * grid.n1 + c1) * static_cast<std::size_t>(grid.px * grid.py) +
         static_cast<std::size_t>(iy * grid.px + ix);
}

namespace {

struct HusimiSetup {
  std::vector<cplx> coeff;
  std::vector<double> kappa1;
  std::vector<double> kappa2;
  std::vector<double> c1;
  std::vector<double> c2;
  double area = 0.0;
  double cell = 0.0;
};

HusimiSetup prepare_husimi(const TorusField& u, double h, const PhaseGridSpec& grid) {
  check_field(u);
  if (!(h > 0.0)) throw Error(ErrorKind::config_error, "h must be positive");
  if (grid.px < 1 || grid.py < 1 || grid.n1 < 1 || grid.n2 < 1 || !(grid.xi_max > 0.0)) {
    throw Error(ErrorKind::config_error, "phase grid dimensions must be positive");
  }
  if (u.nx % grid.px != 0 || u.ny % grid.py != 0) {
    throw Error(ErrorKind::config_error, "phase-grid positions must divide the field grid");
  }
  const double spread = std::sqrt(0.5 * h);
  const double dxi1 = 2.0 * grid.xi_max / grid.n1;
  const double dxi2 = 2.0 * grid.xi_max / grid.n2;
  if (dxi1 > spread * (1.0 + 1e-12) || dxi2 > spread * (1.0 + 1e-12)) {
    throw Error(ErrorKind::phase_grid_too_coarse,
                "frequency cells wider than the coherent-state spread sqrt(h/2) = " + std::to_string(spread));
  }
  // The windowed coefficients spread over about 10.5 a / (2 pi sqrt(h)) integer
  // frequencies; fewer positions would alias them and spoil the mass.
  const double need_x = 10.5 * u.torus.a / (2.0 * M_PI * std::sqrt(h));
  const double need_y = 10.5 * u.torus.b / (2.0 * M_PI * std::sqrt(h));
  if (grid.px < need_x || grid.py < need_y) {
    throw Error(ErrorKind::phase_grid_too_coarse, "position grid too coarse for the coherent-state window");
  }

  HusimiSetup s;
  s.coeff = spectrum_of(u);
  s.area = u.torus.a * u.torus.b;
  const double scale = u.dx() * u.dy() / std::sqrt(s.area);
  for (auto& c : s.coeff) c *= scale;
  s.kappa1 = wavenumbers(u.nx, u.torus.a);
  s.kappa2 = wavenumbers(u.ny, u.torus.b);
  for (int c = 0; c < grid.n1; ++c) s.c1.push_back(-grid.xi_max + (c + 0.5) * dxi1);
  for (int c = 0; c < grid.n2; ++c) s.c2.push_back(-grid.xi_max + (c + 0.5) * dxi2);
  s.cell = (u.torus.a / grid.px) * (u.torus.b / grid.py) * dxi1 * dxi2;
  return s;
}

}  // namespace

PhaseMeasure husimi(const TorusField& u, double h, const PhaseGridSpec& grid) {
  const HusimiSetup s = prepare_husimi(u, h, grid);
  PhaseMeasure pm;
  pm.h = h;
  pm.torus = u.torus;
  pm.grid = grid;
  pm.weights.resize(static_cast<std::size_t>(grid.n1) * grid.n2 * grid.px * grid.py);
  kernels::HusimiInput in{u.nx, u.ny, s.coeff, s.kappa1, s.kappa2, grid.px, grid.py, s.c1, s.c2, h, s.area};
  kernels::husimi_cells(in, pm.weights);
  for (auto& w : pm.weights) w *= s.cell;
  return pm;
}

RegionMass husimi_region_mass(const TorusField& u, double h, const PhaseGridSpec& grid,
                              const std::function<bool(Point, Point)>& inside) {
  const HusimiSetup s = prepare_husimi(u, h, grid);
  RegionMass out;
  const std::size_t block = static_cast<std::size_t>(grid.px * grid.py);
  std::vector<double> row(static_cast<std::size_t>(grid.n1) * block);
  for (int c2 = 0; c2 < grid.n2; ++c2) {
    kernels::HusimiInput in{u.nx, u.ny, s.coeff, s.kappa1, s.kappa2, grid.px, grid.py, s.c1,
                            std::span<const double>(&s.c2[static_cast<std::size_t>(c2)], 1), h, s.area};
    kernels::husimi_cells(in, row);
    for (int c1 = 0; c1 < grid.n1; ++c1) {
      const Point xi{s.c1[static_cast<std::size_t>(c1)], s.c2[static_cast<std::size_t>(c2)]};
      for (int iy = 0; iy < grid.py; ++iy)
        for (int ix = 0; ix < grid.px; ++ix) {
          const double w = row[static_cast<std::size_t>(c1) * block + static_cast<std::size_t>(iy * grid.px + ix)] * s.cell;
          out.total += w;
          if (inside({ix * u.torus.a / grid.px, iy * u.torus.b / grid.py}, xi)) out.inside += w;
        }
    }
  }
  return out;
}

cplx husimi_pairing(const PhaseMeasure& pm, const SymbolFn& a) {
  cplx s{0.0, 0.0};
  for (int c2 = 0; c2 < pm.grid.n2; ++c2)
    for (int c1 = 0; c1 < pm.grid.n1; ++c1) {
      const Point xi = pm.frequency(c1, c2);
      for (int iy = 0; iy < pm.grid.py; ++iy)
        for (int ix = 0; ix < pm.grid.px; ++ix) {
          const double w = pm.weights[pm.index(ix, iy, c1, c2)];
          if (w != 0.0) s += w * a.eval(pm.position(ix, iy), xi);
        }
    }
  return s;
}

double sigma_support_test(const PhaseMeasure& pm, double band) {
  double outside = 0.0;
  const std::size_t block = static_cast<std::size_t>(pm.grid.px * pm.grid.py);
  for (int c2 = 0; c2 < pm.grid.n2; ++c2)
    for (int c1 = 0; c1 < pm.grid.n1; ++c1) {
      if (std::abs(norm(pm.frequency(c1, c2)) - 1.0) <= band) continue;
      const std::size_t base = pm.index(0, 0, c1, c2);
      for (std::size_t q = 0; q < block; ++q) outside += pm.weights[base + q];
    }
  return outside;
}

double flow_invariance_test(const TorusField& u, double h, const SymbolFn& a) {
  return std::abs(inner(quantize_apply(bracket_with_p(a), h, u), u));
}

std::vector<DefectSample> defect_sequence(const DomainSpec& domain, const Grid& grid,
                                          std::span<const EigenPair> pairs, const SymbolFn& a) {
  std::vector<DefectSample> out;
  for (const auto& pair : pairs) {
    const TorusField u = torus_field(domain, grid, pair.vector);
    const double h = pair.h();
    out.push_back({h, inner(quantize_apply(a, h, u), u)});
  }
  return out;
}

PowerFit fit_power(std::span<const double> h, std::span<const double> value) {
  if (h.size() != value.size() || h.size() < 2) throw Error(ErrorKind::config_error, "power fit needs two or more samples");
  const std::size_t n = h.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!(h[k] > 0.0) || !(value[k] > 0.0)) throw Error(ErrorKind::config_error, "power fit needs positive samples");
    const double x = std::log(h[k]);
    const double y = std::log(value[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw Error(ErrorKind::config_error, "power fit needs distinct h values");
  PowerFit fit;
  fit.exponent = (n * sxy - sx * sy) / denom;
  fit.prefactor = std::exp((sy - fit.exponent * sx) / n);
  return fit;
}

void write_phase_measure(const std::filesystem::path& path, const PhaseMeasure& pm) {
  CsvWriter csv(path);
  csv.header({"x", "y", "xi1", "xi2", "weight"});
  for (int c2 = 0; c2 < pm.grid.n2; ++c2)
    for (int c1 = 0; c1 < pm.grid.n1; ++c1) {
      const Point xi = pm.frequency(c1, c2);
      for (int iy = 0; iy < pm.grid.py; ++iy)
        for (int ix = 0; ix < pm.grid.px; ++ix) {
          const Point x = pm.position(ix, iy);
          csv.row(std::vector<double>{x.x, x.y, xi.x, xi.y, pm.weights[pm.index(ix, iy, c1, c2)]});
        }
    }
  nlohmann::json header = {{"h", pm.h},
                           {"torus", {pm.torus.a, pm.torus.b}},
                           {"phase_grid", {pm.grid.px, pm.grid.py, pm.grid.n1, pm.grid.n2}},
                           {"xi_max", pm.grid.xi_max},
                           {"total_mass", pm.total()}};
  write_json(std::filesystem::path(path.string() + ".json"), header);
}

}  // namespace billiards
