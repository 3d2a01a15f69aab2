#pragma once

// Straight-line billiards on tori: direction classification, tracing with
// obstacles and slits, maximal rectangles around closed geodesics, and the
// x-boundedness / unfolding construction for slit tori.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "billiards/geometry.hpp"

namespace billiards {

struct Direction {
  enum class Kind : std::uint8_t { rational, irrational };
  Kind kind = Kind::irrational;
  // Rational: the closed geodesic has displacement (m a, n b), gcd(|m|,|n|) = 1.
  long m = 0;
  long n = 0;
  double angle = 0.0;               // atan2 of the velocity
  bool resolution_limited = false;  // irrational only up to the denominator cap

  bool is_rational() const { return kind == Kind::rational; }
};

Direction classify_direction(const TorusSpec& torus, Point v, long q_max);
Direction rational_direction(long m, long n);
Direction irrational_direction(double angle);

// Unit velocity of a direction on the given torus.
Point unit_velocity(const TorusSpec& torus, const Direction& dir);
// Length of the closed geodesic of a rational direction.
double closed_length(const TorusSpec& torus, const Direction& dir);

enum class Termination : std::uint8_t { period_closed, obstacle_hit, slit_hit, time_cap };

struct Trajectory {
  Point origin;
  Direction direction;
  std::vector<Segment> segments;  // inside the fundamental domain
  Termination terminated_by = Termination::time_cap;
  double length = 0.0;
  int slit_reflections = 0;
};

struct TraceOptions {
  bool reflect_at_slit = true;  // false: stop with slit_hit
  double tolerance = 1e-9;
};

// Throws Error{degenerate_start} for origins inside the obstacle, on the slit,
// or for paths running into a slit endpoint.
Trajectory trace(const DomainSpec& domain, Point origin, const Direction& dir, double max_length,
                 const TraceOptions& options = {});

struct MaximalRectangle {
  Segment center_line;  // one period of the closed geodesic through the given point
  double length = 0.0;
  double width = 0.0;
  double theta = 0.0;         // angle of the long side
  double offset = 0.0;        // signed normal offset of the given line inside the band
  double band_low = 0.0;      // normal offsets bounding the band (covering plane)
  double band_high = 0.0;
};

// Largest periodic band of closed geodesics in direction `dir` that contains
// the geodesic through `through` and avoids the obstacle. Throws
// Error{trajectory_hits_obstacle}.
MaximalRectangle maximal_rectangle(const DomainSpec& sinai, const Direction& dir, Point through);

// Normal offsets ν·q of the obstacle, with ν the unit normal (-u_y, u_x) of the
// direction; exact for disks and polygons.
std::pair<double, double> obstacle_normal_extent(const ObstacleSpec& obstacle, Point normal);

struct LiftOptions {
  int window = 10;      // y-periods without growth that count as stabilized
  int transient = 10;   // y-periods ignored before checking
  int max_periods = 400;
};

struct XBoundedness {
  bool bounded = false;
  bool inconclusive = false;  // extent still growing at the cap
  double x_min = 0.0;         // strip C0 in the covering plane
  double x_max = 0.0;
  int periods_traced = 0;
  std::vector<Point> reflections;  // lifted reflection points over one stabilized window
};

XBoundedness classify_x_bounded(const DomainSpec& slit_torus, const Trajectory& traj,
                                const LiftOptions& options = {});

struct UnfoldStrip {
  double x_left = 0.0;
  double x_right = 0.0;
  double reflection = 0.0;  // R_i: the map is (2 R_i - x, y) beyond it
};

struct UnfoldingPlan {
  std::vector<UnfoldStrip> strips;  // C~_1 .. C~_N; empty for N = 0
  double x_left = 0.0;              // C0
  double x_right = 0.0;
  double period = 0.0;              // x-period of the unfolded function (2W, or a when N = 0)
  std::vector<double> residual_lines;
  std::vector<double> wall_crossings_y;  // y (mod b) where the unfolded path crosses the walls
  Point velocity;

  int stages() const { return static_cast<int>(strips.size()); }
};

UnfoldingPlan unfold(const DomainSpec& slit_torus, const Trajectory& traj, const LiftOptions& options = {},
                     int max_stages = 64);

// The i-th reflection map (1-based): identity up to R_i, (2 R_i - x, y) beyond.
Point apply_reflection(const UnfoldingPlan& plan, int stage, Point p);
// The same map on grid columns measured from x_left, in units of dx.
long reflect_column(const UnfoldingPlan& plan, int stage, long column, double dx);

// Residual support (reflection lines minus slit copies) is disjoint from the
// slits, and the unfolded path meets the lines only inside slit intervals.
bool residual_support_clear(const DomainSpec& slit_torus, const UnfoldingPlan& plan);

struct UnfoldedGrid {
  int nx = 0;  // columns of the periodic strip
  int ny = 0;
  double dx = 0.0;
  double dy = 0.0;
  std::vector<double> values;            // row-major, j * nx + i
  std::vector<int> residual_columns;     // columns of the reflection lines
};

// Odd reflection of u (a grid function on the slit torus) across the plan's
// walls. Throws Error{plan_mismatch} if the walls are not grid columns.
UnfoldedGrid unfold_function(const UnfoldingPlan& plan, const Grid& grid, std::span<const double> u);

}  // namespace billiards
