#include "billiards/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "billiards/errors.hpp"

namespace billiards {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTiny = 1e-13;

double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }

const TorusSpec& require_torus(const DomainSpec& d) {
  const TorusSpec* t = d.torus();
  if (t == nullptr) throw Error(ErrorKind::config_error, "trajectories are traced on torus-type domains only");
  return *t;
}

const SlitSpec& require_slit(const DomainSpec& d) {
  const SlitSpec* s = d.slit();
  if (s == nullptr) throw Error(ErrorKind::config_error, "operation needs a slit torus");
  return *s;
}

double wrap(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  if (r >= period) r -= period;
  return r;
}

// Smallest t > kTiny where p + t v meets the obstacle boundary.
double ray_obstacle(const ObstacleSpec& obstacle, Point p, Point v) {
  if (const auto* disk = std::get_if<Disk>(&obstacle)) {
    const Point w = p - disk->center;
    const double bq = dot(w, v);
    const double c = dot(w, w) - disk->radius * disk->radius;
    const double disc = bq * bq - c;
    if (disc < 0.0) return kInf;
    const double s = std::sqrt(disc);
    for (double t : {-bq - s, -bq + s}) {
      if (t > kTiny) return t;
    }
    return kInf;
  }
  const auto& poly = std::get<Polygon>(obstacle).vertices;
  double best = kInf;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Point q0 = poly[k];
    const Point e = poly[(k + 1) % poly.size()] - q0;
    const double den = cross(v, e);
    if (std::abs(den) < 1e-300) continue;
    const Point w = q0 - p;
    const double t = cross(w, e) / den;
    const double s = cross(w, v) / den;
    if (t > kTiny && s >= 0.0 && s <= 1.0) best = std::min(best, t);
  }
  return best;
}

std::pair<long, long> reduce(long m, long n) {
  const long g = std::gcd(std::labs(m), std::labs(n));
  return g == 0 ? std::pair<long, long>{m, n} : std::pair<long, long>{m / g, n / g};
}

}  // namespace

Direction rational_direction(long m, long n) {
  if (m == 0 && n == 0) throw Error(ErrorKind::config_error, "rational direction (0,0)");
  const auto [mm, nn] = reduce(m, n);
  Direction d;
  d.kind = Direction::Kind::rational;
  d.m = mm;
  d.n = nn;
  return d;
}

Direction irrational_direction(double angle) {
  Direction d;
  d.kind = Direction::Kind::irrational;
  d.angle = angle;
  return d;
}

Direction classify_direction(const TorusSpec& torus, Point v, long q_max) {
  if (v.x == 0.0 && v.y == 0.0) throw Error(ErrorKind::config_error, "zero direction vector");
  if (q_max < 1) throw Error(ErrorKind::config_error, "q_max must be >= 1");
  const long sx = v.x > 0.0 ? 1 : -1;
  const long sy = v.y > 0.0 ? 1 : -1;
  if (v.x == 0.0) return rational_direction(0, sy);
  if (v.y == 0.0) return rational_direction(sx, 0);
  // n / m = (a v_y) / (b v_x); continued-fraction convergents p/q of |r|.
  const double r = std::abs((torus.a * v.y) / (torus.b * v.x));
  const double tol = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, r);
  double x = r;
  double p_prev = 1.0, p_prev2 = 0.0;
  double q_prev = 0.0, q_prev2 = 1.0;
  for (int it = 0; it < 64; ++it) {
    const double ai = std::floor(x);
    const double p = ai * p_prev + p_prev2;
    const double q = ai * q_prev + q_prev2;
    if (p > static_cast<double>(q_max) || q > static_cast<double>(q_max)) break;
    if (std::abs(r - p / q) <= tol) return rational_direction(sx * static_cast<long>(q), sy * static_cast<long>(p));
    const double frac = x - ai;
    if (frac <= 0.0) break;
    x = 1.0 / frac;
    p_prev2 = p_prev;
    p_prev = p;
    q_prev2 = q_prev;
    q_prev = q;
  }
  Direction d = irrational_direction(std::atan2(v.y, v.x));
  d.resolution_limited = true;
  return d;
}

Point unit_velocity(const TorusSpec& torus, const Direction& dir) {
  if (dir.is_rational()) {
    const Point w{static_cast<double>(dir.m) * torus.a, static_cast<double>(dir.n) * torus.b};
    return (1.0 / norm(w)) * w;
  }
  return {std::cos(dir.angle), std::sin(dir.angle)};
}

double closed_length(const TorusSpec& torus, const Direction& dir) {
  if (!dir.is_rational()) return kInf;
  return std::hypot(static_cast<double>(dir.m) * torus.a, static_cast<double>(dir.n) * torus.b);
}

Trajectory trace(const DomainSpec& domain, Point origin, const Direction& dir, double max_length,
                 const TraceOptions& options) {
  const TorusSpec& torus = require_torus(domain);
  const ObstacleSpec* obstacle = domain.obstacle();
  const SlitSpec* slit = domain.slit();
  const double tol = options.tolerance;
  if (!(max_length > 0.0)) throw Error(ErrorKind::config_error, "max_length must be positive");

  Point p{wrap(origin.x, torus.a), wrap(origin.y, torus.b)};
  if (obstacle != nullptr &&
      (obstacle_contains(*obstacle, p) || distance_to_obstacle_boundary(*obstacle, p) < tol)) {
    throw Error(ErrorKind::degenerate_start, "origin lies in the obstacle");
  }
  Point v = unit_velocity(torus, dir);
  if (slit != nullptr) {
    const bool on_line = std::abs(p.x - slit->x_pos) < tol;
    if (on_line && p.y >= slit->y0 - tol && p.y <= slit->y1 + tol) {
      throw Error(ErrorKind::degenerate_start, "origin lies on the slit");
    }
    if (on_line && std::abs(v.x) < 1e-15) throw Error(ErrorKind::degenerate_start, "path runs along the slit line");
  }

  Trajectory tr;
  tr.origin = p;
  tr.direction = dir;
  const Point start = p;
  const Point v0 = v;
  const std::size_t segment_cap = 50'000'000;
  auto closed = [&] {
    tr.segments.back().p1 = start;
    tr.terminated_by = Termination::period_closed;
    if (dir.is_rational() && tr.slit_reflections == 0) {
      const double exact = closed_length(torus, dir);
      if (std::abs(tr.length - exact) <= 1e-9 * std::max(1.0, exact)) tr.length = exact;
    }
    return tr;
  };

  while (true) {
    if (p.x == 0.0 && v.x < 0.0) p.x = torus.a;
    if (p.x == torus.a && v.x > 0.0) p.x = 0.0;
    if (p.y == 0.0 && v.y < 0.0) p.y = torus.b;
    if (p.y == torus.b && v.y > 0.0) p.y = 0.0;
    if (tr.length > kTiny && norm(v - v0) < 1e-12 && norm(torus_wrap(start - p, torus)) <= tol) {
      return closed();
    }

    const double tx = v.x > 0.0 ? (torus.a - p.x) / v.x : v.x < 0.0 ? -p.x / v.x : kInf;
    const double ty = v.y > 0.0 ? (torus.b - p.y) / v.y : v.y < 0.0 ? -p.y / v.y : kInf;
    const double t_wall = std::min(tx, ty);
    const double t_obs = obstacle != nullptr ? ray_obstacle(*obstacle, p, v) : kInf;
    double t_slit = kInf;
    if (slit != nullptr && v.x != 0.0) {
      const double t = (slit->x_pos - p.x) / v.x;
      if (t > kTiny && t <= t_wall + tol) {
        const double y = p.y + t * v.y;
        if (std::abs(y - slit->y0) <= tol || std::abs(y - slit->y1) <= tol) {
          if (t <= std::min(t_obs, max_length - tr.length)) {
            throw Error(ErrorKind::degenerate_start, "path meets a slit endpoint");
          }
        } else if (y > slit->y0 && y < slit->y1) {
          t_slit = t;
        }
      }
    }
    double t_close = kInf;
    if (norm(v - v0) < 1e-12) {
      const Point w = start - p;
      const double along = dot(w, v);
      if (along > kTiny && std::abs(cross(w, v)) <= tol) t_close = along;
    }
    const double t_cap = max_length - tr.length;
    const double t = std::min({t_wall, t_obs, t_slit, t_close, t_cap});
    const Point q = p + t * v;
    tr.segments.push_back({p, q});
    tr.length += t;

    if (t == t_close || std::abs(t - t_close) <= tol) {
      return closed();
    }
    if (t == t_obs) {
      tr.terminated_by = Termination::obstacle_hit;
      return tr;
    }
    if (t == t_slit) {
      if (!options.reflect_at_slit) {
        tr.terminated_by = Termination::slit_hit;
        return tr;
      }
      p = {slit->x_pos, q.y};
      v.x = -v.x;
      ++tr.slit_reflections;
      continue;
    }
    if (t == t_cap) {
      tr.terminated_by = Termination::time_cap;
      return tr;
    }
    p = q;
    if (t == tx) p.x = v.x > 0.0 ? torus.a : 0.0;
    if (t == ty) p.y = v.y > 0.0 ? torus.b : 0.0;
    if (tr.segments.size() >= segment_cap) {
      tr.terminated_by = Termination::time_cap;
      return tr;
    }
  }
}

std::pair<double, double> obstacle_normal_extent(const ObstacleSpec& obstacle, Point normal) {
  if (const auto* disk = std::get_if<Disk>(&obstacle)) {
    const double c = dot(normal, disk->center);
    return {c - disk->radius, c + disk->radius};
  }
  double lo = kInf;
  double hi = -kInf;
  for (const Point& q : std::get<Polygon>(obstacle).vertices) {
    lo = std::min(lo, dot(normal, q));
    hi = std::max(hi, dot(normal, q));
  }
  return {lo, hi};
}

MaximalRectangle maximal_rectangle(const DomainSpec& sinai, const Direction& dir, Point through) {
  const TorusSpec& torus = require_torus(sinai);
  const ObstacleSpec* obstacle = sinai.obstacle();
  if (obstacle == nullptr) throw Error(ErrorKind::config_error, "maximal_rectangle needs an obstacle");
  if (!dir.is_rational()) throw Error(ErrorKind::config_error, "maximal_rectangle needs a rational direction");

  const Point u = unit_velocity(torus, dir);
  const Point nu{-u.y, u.x};
  const double length = closed_length(torus, dir);
  // Lattice translates project onto the normal as multiples of a b / L.
  const double spacing = torus.a * torus.b / length;
  const auto [o_min, o_max] = obstacle_normal_extent(*obstacle, nu);
  const double blocked = o_max - o_min;
  const double free_width = spacing - blocked;
  const double d = dot(nu, through);
  const double delta = wrap(d - o_max, spacing);
  const double eps = 1e-12 * std::max(1.0, spacing);
  if (free_width <= eps || delta <= eps || delta >= free_width - eps) {
    throw Error(ErrorKind::trajectory_hits_obstacle, "the closed geodesic meets the obstacle");
  }
  MaximalRectangle r;
  r.center_line = {through, through + length * u};
  r.length = length;
  r.width = free_width;
  r.theta = std::atan2(u.y, u.x);
  r.offset = delta;
  r.band_low = d - delta;
  r.band_high = r.band_low + free_width;
  return r;
}

XBoundedness classify_x_bounded(const DomainSpec& slit_torus, const Trajectory& traj, const LiftOptions& options) {
  const TorusSpec& torus = require_torus(slit_torus);
  const SlitSpec& slit = require_slit(slit_torus);
  const double a = torus.a;
  const double b = torus.b;
  Point v = unit_velocity(torus, traj.direction);
  const Point o = traj.origin;
  XBoundedness out;
  out.x_min = out.x_max = o.x;

  auto in_slit = [&](double y) {
    const double ym = wrap(y, b);
    if (std::abs(ym - slit.y0) < 1e-12 || std::abs(ym - slit.y1) < 1e-12) {
      throw Error(ErrorKind::degenerate_start, "lifted path meets a slit endpoint");
    }
    return ym > slit.y0 && ym < slit.y1;
  };

  if (std::abs(v.x) < 1e-15) {
    out.bounded = true;
    return out;
  }
  const double f = (o.x - slit.x_pos) / a;
  if (std::abs(v.y) < 1e-15) {
    if (!in_slit(o.y)) return out;
    out.bounded = true;
    out.x_min = slit.x_pos + a * std::floor(f);
    out.x_max = out.x_min + a;
    if (out.x_max - o.x < 1e-12) out.x_max += a;
    out.reflections = {{out.x_min, o.y}, {out.x_max, o.y}};
    return out;
  }

  // Walk line crossings x = x_s + i a in the covering plane. The state at a
  // crossing is (y mod b, sign v_x, reflected?); its first recurrence closes
  // a cycle and the x-displacement over the cycle decides boundedness.
  long line = v.x > 0.0 ? static_cast<long>(std::floor(f)) + 1 : static_cast<long>(std::ceil(f)) - 1;
  Point p = o;
  const double period_time = b / std::abs(v.y);
  std::vector<std::pair<double, double>> extent_at_period;
  double next_period_time = period_time;
  double time = 0.0;
  bool have_first = false;
  double first_y = 0.0, first_x = 0.0, first_vx = 0.0;
  bool first_reflect = false;
  std::vector<Point> reflections;

  while (true) {
    const double xl = slit.x_pos + a * static_cast<double>(line);
    const double t_line = (xl - p.x) / v.x;
    if (time + t_line >= next_period_time) {
      const double dt = next_period_time - time;
      const Point q = p + dt * v;
      out.x_min = std::min(out.x_min, q.x);
      out.x_max = std::max(out.x_max, q.x);
      extent_at_period.emplace_back(out.x_min, out.x_max);
      const int k = static_cast<int>(extent_at_period.size());
      out.periods_traced = k;
      if (k > options.transient + options.window) {
        const auto& now = extent_at_period.back();
        const auto& then = extent_at_period[static_cast<std::size_t>(k - 1 - options.window)];
        if (std::abs(now.first - then.first) < 1e-12 && std::abs(now.second - then.second) < 1e-12) {
          out.bounded = true;
          out.reflections = reflections;
          return out;
        }
      }
      if (k >= options.max_periods) {
        out.inconclusive = true;
        return out;
      }
      next_period_time += period_time;
      continue;
    }
    p = {xl, p.y + t_line * v.y};
    time += t_line;
    out.x_min = std::min(out.x_min, p.x);
    out.x_max = std::max(out.x_max, p.x);
    const bool reflect = in_slit(p.y);
    const double ym = wrap(p.y, b);
    if (have_first && std::abs(ym - first_y) < 1e-10 && (v.x > 0.0) == (first_vx > 0.0) && reflect == first_reflect) {
      out.periods_traced = static_cast<int>(extent_at_period.size());
      out.bounded = std::abs(p.x - first_x) < 1e-9;
      out.reflections = reflections;
      return out;
    }
    if (!have_first) {
      have_first = true;
      first_y = ym;
      first_x = p.x;
      first_vx = v.x;
      first_reflect = reflect;
    }
    if (reflect) {
      reflections.push_back(p);
      v.x = -v.x;
    }
    line += v.x > 0.0 ? 1 : -1;
  }
}

UnfoldingPlan unfold(const DomainSpec& slit_torus, const Trajectory& traj, const LiftOptions& options,
                     int max_stages) {
  const TorusSpec& torus = require_torus(slit_torus);
  require_slit(slit_torus);
  const XBoundedness xb = classify_x_bounded(slit_torus, traj, options);
  if (!xb.bounded) throw Error(ErrorKind::not_x_bounded, xb.inconclusive ? "x-extent still growing at the cap" : "trajectory is x-unbounded");
  UnfoldingPlan plan;
  plan.velocity = unit_velocity(torus, traj.direction);
  plan.x_left = xb.x_min;
  plan.x_right = xb.x_max;
  const double width = xb.x_max - xb.x_min;
  if (width < 1e-12) {
    plan.period = torus.a;
    return plan;
  }
  if (max_stages < 1) throw Error(ErrorKind::iteration_cap_exceeded, "unfolding needs at least one stage");

  // One odd reflection across the right wall; the 2W-periodic extension is
  // then odd about the left wall as well.
  plan.strips.push_back({xb.x_min, xb.x_max + width, xb.x_max});
  plan.period = 2.0 * width;
  plan.residual_lines = {xb.x_min, xb.x_max};

  // Replay the reflections against the straight unfolded path: every lifted
  // reflection must sit on a wall of the fold of X(t) = X0 + |v_x| t.
  for (const Point& r : xb.reflections) {
    const double rel = r.x - xb.x_min;
    if (std::abs(rel) > 1e-9 && std::abs(rel - width) > 1e-9) {
      throw Error(ErrorKind::iteration_cap_exceeded, "reflection off the strip walls; unfolded path is not straight");
    }
    plan.wall_crossings_y.push_back(wrap(r.y, torus.b));
  }
  if (plan.wall_crossings_y.empty()) {
    // Horizontal paths: the crossing height is the origin's.
    plan.wall_crossings_y.push_back(wrap(traj.origin.y, torus.b));
  }
  std::sort(plan.wall_crossings_y.begin(), plan.wall_crossings_y.end());
  plan.wall_crossings_y.erase(std::unique(plan.wall_crossings_y.begin(), plan.wall_crossings_y.end(),
                                          [](double x, double y) { return std::abs(x - y) < 1e-10; }),
                              plan.wall_crossings_y.end());
  return plan;
}

Point apply_reflection(const UnfoldingPlan& plan, int stage, Point p) {
  if (stage < 1 || stage > plan.stages()) throw Error(ErrorKind::plan_mismatch, "no such unfolding stage");
  const double r = plan.strips[static_cast<std::size_t>(stage - 1)].reflection;
  return {2.0 * r - p.x, p.y};
}

long reflect_column(const UnfoldingPlan& plan, int stage, long column, double dx) {
  if (stage < 1 || stage > plan.stages()) throw Error(ErrorKind::plan_mismatch, "no such unfolding stage");
  const double rc = (plan.strips[static_cast<std::size_t>(stage - 1)].reflection - plan.x_left) / dx;
  const long r = std::lround(rc);
  if (std::abs(rc - static_cast<double>(r)) > 1e-9) throw Error(ErrorKind::plan_mismatch, "reflection line is not a grid column");
  return 2 * r - column;
}

bool residual_support_clear(const DomainSpec& slit_torus, const UnfoldingPlan& plan) {
  const TorusSpec& torus = require_torus(slit_torus);
  const SlitSpec& slit = require_slit(slit_torus);
  if (plan.stages() == 0) return true;
  for (double x : plan.residual_lines) {
    const double rel = wrap(x - slit.x_pos, torus.a);
    if (std::min(rel, torus.a - rel) > 1e-9) return false;  // a residual line off the slit lines
  }
  for (double y : plan.wall_crossings_y) {
    if (!(y > slit.y0 && y < slit.y1)) return false;  // the path would cross residual support
  }
  return true;
}

UnfoldedGrid unfold_function(const UnfoldingPlan& plan, const Grid& grid, std::span<const double> u) {
  if (u.size() != static_cast<std::size_t>(grid.size())) throw Error(ErrorKind::plan_mismatch, "grid function size mismatch");
  if (!grid.periodic) throw Error(ErrorKind::plan_mismatch, "unfolding needs a periodic grid");
  UnfoldedGrid out;
  out.ny = grid.ny;
  out.dx = grid.dx;
  out.dy = grid.dy;
  if (plan.stages() == 0) {
    out.nx = grid.nx;
    out.values.assign(u.begin(), u.end());
    return out;
  }
  const double il = (plan.x_left - grid.x_offset) / grid.dx;
  const double wc = (plan.x_right - plan.x_left) / grid.dx;
  const long i_left = std::lround(il);
  const long w = std::lround(wc);
  if (std::abs(il - static_cast<double>(i_left)) > 1e-9 || std::abs(wc - static_cast<double>(w)) > 1e-9 || w <= 0) {
    throw Error(ErrorKind::plan_mismatch, "strip walls are not grid columns");
  }
  const long nx = grid.nx;
  auto at = [&](long i, int j) {
    const long ii = ((i % nx) + nx) % nx;
    return u[static_cast<std::size_t>(j * nx + ii)];
  };
  out.nx = static_cast<int>(2 * w);
  out.values.resize(static_cast<std::size_t>(out.nx) * static_cast<std::size_t>(out.ny));
  for (int j = 0; j < out.ny; ++j) {
    for (long c = 0; c < 2 * w; ++c) {
      const double val = c <= w ? at(i_left + c, j) : -at(i_left + reflect_column(plan, 1, c, grid.dx), j);
      out.values[static_cast<std::size_t>(j * out.nx + c)] = val;
    }
  }
  out.residual_columns = {0, static_cast<int>(w)};
  return out;
}

}  // namespace billiards
