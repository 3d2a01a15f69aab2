#pragma once

// Non-concentration harnesses: mass ratios in neighbourhoods of the boundary,
// Husimi tube masses around slit-torus trajectories, and the residual of the
// unfolded eigen equation.

#include <cstdint>
#include <string>
#include <vector>

#include "billiards/dynamics.hpp"
#include "billiards/geometry.hpp"
#include "billiards/microlocal.hpp"
#include "billiards/spectral.hpp"

namespace billiards {

enum class Verdict : std::uint8_t { pass, fail, inconclusive, report_only };
const char* to_string(Verdict v);

struct VerifyWindow {
  int nx = 256;
  int ny = 256;
  double lambda_min = 40.0;
  int count = 100;
  SolverOptions solver;
};

struct WindowSolve {
  Grid grid;
  std::vector<EigenPair> pairs;  // sorted by lambda
  bool resolution_limited = false;  // fewer than 10 nodes per wavelength at the top of the window
};

WindowSolve solve_window(const DomainSpec& domain, const VerifyWindow& window);
// True when 2 pi / sqrt(lambda) >= 10 max(dx, dy).
bool resolved(const Grid& grid, double lambda);

struct MassRow {
  double lambda = 0.0;
  double h = 0.0;
  double mass_in_v = 0.0;
  double mass_in_r = 0.0;
  double ratio = 0.0;  // mass_in_v / mass_in_r
};

struct MassReport {
  std::vector<MassRow> rows;
  double min_ratio = 0.0;
  double slope = 0.0;  // least-squares slope of log ratio against log lambda
  double floor = 0.0;
  double slope_min = -0.1;
  bool resolution_limited = false;
  Verdict verdict = Verdict::fail;
};

// Rows for the given pairs; verdict PASS iff min ratio > floor and slope >= slope_min.
MassReport mass_report(const Grid& grid, const std::vector<EigenPair>& pairs, const NodeMask& v, const NodeMask& r,
                       double floor, double slope_min = -0.1);

// V is the union of the given regions. R is the whole rectangle, or the central rectangle of a stadium. Stadium
// reports carry Verdict::report_only.
MassReport verify_rectangle_nonconcentration(const DomainSpec& domain, const std::vector<Region>& v, const WindowSolve& solved);
MassReport verify_rectangle_nonconcentration(const DomainSpec& domain, const std::vector<Region>& v, const VerifyWindow& window);

// V is the eps-neighbourhood of the obstacle, R the whole billiard; floor 0.001.
MassReport verify_sinai(const DomainSpec& domain, double eps, const WindowSolve& solved);
MassReport verify_sinai(const DomainSpec& domain, double eps, const VerifyWindow& window);

// Phase-space tube {dist(x, path) < eps, |xi/|xi| - d| < delta} with d ranging
// over the given unit directions.
struct Tube {
  std::vector<Segment> path;
  std::vector<Point> directions;
  double eps = 0.0;
  double delta = 0.0;
};

// Tube around a trajectory. Directions are the segment velocities and their
// sign mirrors: real eigenfunctions are time-reversal symmetric and slit
// reflections flip the horizontal component.
Tube trajectory_tube(const Trajectory& gamma, double eps, double delta);
bool in_tube(const Tube& tube, const TorusSpec& torus, Point x, Point xi);

struct TubeRow {
  double lambda = 0.0;
  double h = 0.0;
  double tube_mass = 0.0;   // Husimi mass in the tube / total Husimi mass
  double husimi_total = 0.0;
  double edge_mass = 0.0;   // L2 mass in the slit-endpoint disks V1, V2
};

struct TubeReport {
  std::vector<TubeRow> rows;
  double eps = 0.0;
  double delta = 0.0;
  double edge_radius = 0.0;
  double cap = 0.95;
  double max_tube = 0.0;
  bool edges_carry_mass = true;  // edge_mass > edge_floor on every row with tube mass > 0.5
  bool resolution_limited = false;
  Verdict verdict = Verdict::fail;
};

struct TubeOptions {
  double eps = 0.08;
  double delta = 0.1;
  double edge_radius = 0.05;
  double edge_floor = 1e-6;
  double cap = 0.95;
  PhaseGridSpec phase{32, 32, 48, 48, 2.0};
};

// Husimi tube mass of one field, normalised by its Husimi total.
TubeRow tube_row(const TorusField& u, double h, const Tube& tube, const PhaseGridSpec& phase);

// Throws Error{not_x_bounded} unless gamma is x-bounded.
TubeReport verify_slit_tube(const DomainSpec& slit_torus, const Trajectory& gamma, const WindowSolve& solved,
                            const TubeOptions& options = {});
TubeReport verify_slit_tube(const DomainSpec& slit_torus, const Trajectory& gamma, const VerifyWindow& window,
                            const TubeOptions& options = {});

// Negative control on the torus without slit: real standing waves
// cos(2 pi j (m x + n y) / a), aligned with gamma's rational direction (m, n),
// sampled on an n_grid^2 lattice of the square torus. The tube is built from
// gamma's origin and direction traced without the slit; each row has h = 1 / |kappa|
// and a phase grid fine enough for that h. Throws Error{config_error} for
// irrational directions, non-square tori or frequencies above Nyquist.
std::vector<TubeRow> aligned_wave_control(const Trajectory& gamma, const TorusSpec& torus, int n_grid,
                                          const std::vector<int>& js, const TubeOptions& options = {});

struct UnfoldReport {
  double eigen_residual = 0.0;     // ||(A - lambda) u|| / ||u|| on the slit torus
  double masked_residual = 0.0;    // same norm of the unfolded residual away from lines and slit copies
  double line_residual = 0.0;      // residual on the masked-out columns
  double threshold = 0.0;
  int mask_margin = 3;
  std::vector<double> residual;    // unfolded residual field, row-major
  int nx = 0;
  int ny = 0;
  Verdict verdict = Verdict::fail;
};

// Residual of the unfolded (periodic strip) eigen equation. PASS iff the
// masked residual is at most 10 times the eigen residual (plus a 1e-12 floor).
UnfoldReport verify_unfolding_residual(const DomainSpec& slit_torus, const Grid& grid, const EigenPair& pair,
                                       const UnfoldingPlan& plan, int margin = 3);

}  // namespace billiards
