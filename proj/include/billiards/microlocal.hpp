#pragma once

// Semiclassical quantization on flat tori and Husimi phase-space measures.
//
// Grid functions live on the nx-by-ny node lattice (i a / nx, j b / ny) of a
// torus, row-major j * nx + i. Frequencies are kappa_k = 2 pi (k1 / a, k2 / b)
// with signed k in [-n/2, n/2), and symbols are evaluated at xi = h kappa_k.
// Quantization is left (Kohn-Nirenberg):
//   Op_h(a) u(x) = sum_k a(x, h kappa_k) uhat_k exp(i kappa_k . x).

#include <array>
#include <complex>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "billiards/geometry.hpp"
#include "billiards/spectral.hpp"

namespace billiards {

using cplx = std::complex<double>;

struct TorusField {
  TorusSpec torus;
  int nx = 0;
  int ny = 0;
  std::vector<cplx> values;

  double dx() const { return torus.a / nx; }
  double dy() const { return torus.b / ny; }
  Point position(int i, int j) const { return {i * dx(), j * dy()}; }
  double norm() const;  // L2 norm with the dx dy quadrature
};

// Embeds a real grid function of a torus-type domain (sinai, slit torus, torus).
TorusField torus_field(const DomainSpec& domain, const Grid& grid, std::span<const double> u);
// exp(2 pi i (m x / a + n y / b)) / sqrt(area), unit L2 norm.
TorusField plane_wave(const TorusSpec& torus, int nx, int ny, long m, long n);

// <u, v> = sum u conj(v) dx dy.
cplx inner(const TorusField& u, const TorusField& v);

// One product term f(x) g(xi) of a separable symbol. grad_f is needed only for
// the Poisson bracket.
struct SymbolTerm {
  std::function<cplx(Point)> f;
  std::function<cplx(Point)> g;
  std::function<std::array<cplx, 2>(Point)> grad_f;
  bool xi_independent = false;  // g == 1: applied as plain multiplication by f
};

struct SymbolFn {
  std::function<cplx(Point x, Point xi)> eval;
  std::vector<SymbolTerm> terms;  // nonempty: eval is the sum of the terms
  bool periodic_in_x = true;
  bool compact_in_xi = false;
  std::string order_class = "S0";

  bool separable() const { return !terms.empty(); }
};

SymbolFn separable_symbol(std::vector<SymbolTerm> terms, bool periodic_in_x = true, bool compact_in_xi = false);
SymbolFn general_symbol(std::function<cplx(Point, Point)> eval, bool periodic_in_x = true,
                        bool compact_in_xi = false);
SymbolFn constant_symbol(cplx c);

// {p, a} for p = |xi|^2 on the flat torus: 2 xi . grad_x a. Separable symbols
// need grad_f on every term; general symbols use central differences.
SymbolFn bracket_with_p(const SymbolFn& a);

enum class QuantizePath : std::uint8_t { automatic, separable, dense };

TorusField quantize_apply(const SymbolFn& a, double h, const TorusField& u,
                          QuantizePath path = QuantizePath::automatic);

// Weyl quantization of a separable symbol; the x factors are expanded in
// Fourier modes, each mode exp(i mu.x) g(xi) acting as g(h (kappa + mu / 2)).
TorusField weyl_apply(const SymbolFn& a, double h, const TorusField& u);

// (T_gamma u)(x) = u(x - gamma). Throws Error{gamma_not_on_grid}.
TorusField translate(const TorusField& u, Point gamma);

// max over probes of ||[Op_h(a), T_gamma] u|| / ||u||.
double translation_commutator(const SymbolFn& a, double h, Point gamma, std::span<const TorusField> probes);

struct PhaseGridSpec {
  int px = 32;  // positions per axis
  int py = 32;
  int n1 = 32;  // frequency cells per axis on [-xi_max, xi_max]
  int n2 = 32;
  double xi_max = 2.0;
};

struct PhaseMeasure {
  double h = 0.0;
  TorusSpec torus;
  PhaseGridSpec grid;
  // Cell masses (density times cell volume), index [(c2 * n1 + c1) * px * py + iy * px + ix].
  std::vector<double> weights;

  double total() const;
  Point position(int ix, int iy) const;
  Point frequency(int c1, int c2) const;
  std::size_t index(int ix, int iy, int c1, int c2) const;
};

// Husimi (anti-Wick) measure from coherent states of width sqrt(h), periodized
// exactly in Fourier space. Requires px | nx and py | ny. Throws
// Error{phase_grid_too_coarse} if the frequency cells are wider than the
// coherent-state spread sqrt(h/2) or the position grid cannot hold the
// windowed spectrum without aliasing.
PhaseMeasure husimi(const TorusField& u, double h, const PhaseGridSpec& grid);

struct RegionMass {
  double inside = 0.0;
  double total = 0.0;
};

// Husimi mass of the cells whose centre satisfies `inside`, computed one
// frequency row at a time without storing the whole measure. Same checks as
// husimi().
RegionMass husimi_region_mass(const TorusField& u, double h, const PhaseGridSpec& grid,
                              const std::function<bool(Point x, Point xi)>& inside);

// Sum of weights * a at cell centres.
cplx husimi_pairing(const PhaseMeasure& pm, const SymbolFn& a);

// Mass outside the band ||xi| - 1| <= band.
double sigma_support_test(const PhaseMeasure& pm, double band);

// |<Op_h({p, a}) u, u>|.
double flow_invariance_test(const TorusField& u, double h, const SymbolFn& a);

struct DefectSample {
  double h = 0.0;
  cplx pairing;
};

std::vector<DefectSample> defect_sequence(const DomainSpec& domain, const Grid& grid,
                                          std::span<const EigenPair> pairs, const SymbolFn& a);

struct PowerFit {
  double exponent = 0.0;  // value ~ prefactor * h^exponent
  double prefactor = 0.0;
};

// Least-squares line through (log h, log value).
PowerFit fit_power(std::span<const double> h, std::span<const double> value);

// CSV (x, y, xi1, xi2, weight) plus a JSON header "<path>.json".
void write_phase_measure(const std::filesystem::path& path, const PhaseMeasure& pm);

}  // namespace billiards
