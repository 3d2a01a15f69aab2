#include "billiards/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "billiards/errors.hpp"

namespace billiards {

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::invalid_geometry, msg); }

double signed_area(const std::vector<Point>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point& p = v[i];
    const Point& q = v[(i + 1) % v.size()];
    s += p.x * q.y - q.x * p.y;
  }
  return 0.5 * s;
}

double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }

bool segments_intersect(Point p1, Point p2, Point q1, Point q2) {
  const double d1 = cross(q2 - q1, p1 - q1);
  const double d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1);
  const double d4 = cross(p2 - p1, q2 - p1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  auto on_segment = [](Point a, Point b, Point c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= c.y &&
           c.y <= std::max(a.y, b.y);
  };
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

bool polygon_is_simple(const std::vector<Point>& v) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) return false;
    }
  }
  return true;
}

Point obstacle_reference(const ObstacleSpec& obstacle) {
  if (const auto* d = std::get_if<Disk>(&obstacle)) return d->center;
  const auto& v = std::get<Polygon>(obstacle).vertices;
  Point c;
  for (const Point& p : v) c = c + p;
  return (1.0 / static_cast<double>(v.size())) * c;
}

bool stadium_contains(const StadiumSpec& s, Point p) {
  const double r = s.cap_radius;
  const double xl = r;
  const double xr = r + s.rect_width;
  if (p.y <= 0.0 || p.y >= 2.0 * r) return false;
  if (p.x >= xl && p.x <= xr) return true;
  const Point cl{xl, r};
  const Point cr{xr, r};
  return norm(p - cl) < r || norm(p - cr) < r;
}

// Distance under the torus metric, taking the minimum over the 3x3 images.
template <class F>
double min_over_images(Point p, const TorusSpec* torus, F&& dist) {
  if (torus == nullptr) return dist(p);
  double best = std::numeric_limits<double>::infinity();
  for (int k = -1; k <= 1; ++k) {
    for (int l = -1; l <= 1; ++l) {
      best = std::min(best, dist(Point{p.x + k * torus->a, p.y + l * torus->b}));
    }
  }
  return best;
}

}  // namespace

double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
double norm(Point p) { return std::hypot(p.x, p.y); }

DomainKind DomainSpec::kind() const { return static_cast<DomainKind>(shape.index()); }

bool DomainSpec::is_torus_type() const {
  const DomainKind k = kind();
  return k == DomainKind::torus || k == DomainKind::sinai || k == DomainKind::slit_torus;
}

const TorusSpec* DomainSpec::torus() const {
  if (const auto* t = std::get_if<TorusSpec>(&shape)) return t;
  if (const auto* s = std::get_if<SinaiSpec>(&shape)) return &s->torus;
  if (const auto* s = std::get_if<SlitTorusSpec>(&shape)) return &s->torus;
  return nullptr;
}

const ObstacleSpec* DomainSpec::obstacle() const {
  if (const auto* s = std::get_if<SinaiSpec>(&shape)) return &s->obstacle;
  return nullptr;
}

const SlitSpec* DomainSpec::slit() const {
  if (const auto* s = std::get_if<SlitTorusSpec>(&shape)) return &s->slit;
  return nullptr;
}

double DomainSpec::width() const {
  if (const auto* t = torus()) return t->a;
  if (const auto* r = std::get_if<RectangleSpec>(&shape)) return r->width;
  const auto& s = std::get<StadiumSpec>(shape);
  return s.rect_width + 2.0 * s.cap_radius;
}

double DomainSpec::height() const {
  if (const auto* t = torus()) return t->b;
  if (const auto* r = std::get_if<RectangleSpec>(&shape)) return r->height;
  return 2.0 * std::get<StadiumSpec>(shape).cap_radius;
}

DomainSpec make_rectangle(double w, double h, BoundaryCondition bc) {
  return DomainSpec{RectangleSpec{w, h}, bc, bc};
}

DomainSpec make_torus(double a, double b) {
  return DomainSpec{TorusSpec{a, b}, BoundaryCondition::periodic, BoundaryCondition::dirichlet};
}

DomainSpec make_sinai(TorusSpec torus, ObstacleSpec obstacle, BoundaryCondition bc) {
  return DomainSpec{SinaiSpec{torus, std::move(obstacle)}, BoundaryCondition::periodic, bc};
}

DomainSpec make_slit_torus(TorusSpec torus, SlitSpec slit) {
  return DomainSpec{SlitTorusSpec{torus, slit}, BoundaryCondition::periodic,
                    BoundaryCondition::dirichlet};
}

DomainSpec make_stadium(double rect_width, double cap_radius) {
  return DomainSpec{StadiumSpec{rect_width, 2.0 * cap_radius, cap_radius},
                    BoundaryCondition::dirichlet, BoundaryCondition::dirichlet};
}

DomainSpec build_domain(const DomainSpec& spec) {
  DomainSpec out = spec;
  auto check_torus = [](const TorusSpec& t) {
    if (!(t.a > 0.0) || !(t.b > 0.0)) invalid("torus periods must be positive");
  };

  if (spec.is_torus_type()) {
    if (spec.outer_bc != BoundaryCondition::periodic) {
      invalid("torus-type domains require a periodic outer boundary");
    }
  } else if (spec.outer_bc == BoundaryCondition::periodic) {
    invalid("periodic boundary conditions are only valid on torus-type domains");
  }
  if (spec.inner_bc == BoundaryCondition::periodic) {
    invalid("obstacle and slit boundaries cannot be periodic");
  }

  switch (spec.kind()) {
    case DomainKind::rectangle: {
      const auto& r = std::get<RectangleSpec>(spec.shape);
      if (!(r.width > 0.0) || !(r.height > 0.0)) invalid("rectangle sides must be positive");
      break;
    }
    case DomainKind::torus:
      check_torus(std::get<TorusSpec>(spec.shape));
      break;
    case DomainKind::sinai: {
      auto& s = std::get<SinaiSpec>(out.shape);
      check_torus(s.torus);
      if (auto* d = std::get_if<Disk>(&s.obstacle)) {
        if (!(d->radius > 0.0)) invalid("disk radius must be positive");
        if (d->radius >= 0.5 * std::min(s.torus.a, s.torus.b)) {
          invalid("disk radius must be below min(a, b) / 2");
        }
        if (d->center.x - d->radius <= 0.0 || d->center.x + d->radius >= s.torus.a ||
            d->center.y - d->radius <= 0.0 || d->center.y + d->radius >= s.torus.b) {
          invalid("obstacle touches the fundamental-domain boundary");
        }
      } else {
        auto& v = std::get<Polygon>(s.obstacle).vertices;
        if (v.size() < 3) invalid("polygon needs at least three vertices");
        for (const Point& p : v) {
          if (p.x <= 0.0 || p.x >= s.torus.a || p.y <= 0.0 || p.y >= s.torus.b) {
            invalid("obstacle touches the fundamental-domain boundary");
          }
        }
        if (std::abs(signed_area(v)) <= 0.0) invalid("polygon has zero area");
        if (!polygon_is_simple(v)) invalid("polygon is self-intersecting");
        if (signed_area(v) < 0.0) std::reverse(v.begin(), v.end());
      }
      break;
    }
    case DomainKind::slit_torus: {
      auto& s = std::get<SlitTorusSpec>(out.shape);
      check_torus(s.torus);
      if (spec.inner_bc != BoundaryCondition::dirichlet) invalid("the slit carries a Dirichlet condition");
      if (s.slit.y0 > s.slit.y1) std::swap(s.slit.y0, s.slit.y1);
      if (!(s.slit.x_pos >= 0.0 && s.slit.x_pos < s.torus.a)) invalid("slit x must lie in [0, a)");
      if (!(s.slit.y0 >= 0.0) || !(s.slit.y1 < s.torus.b)) {
        invalid("slit must satisfy 0 <= y0 < y1 < b (a slit spanning the period is a closed loop)");
      }
      if (!(s.slit.y1 > s.slit.y0)) invalid("slit has zero length");
      break;
    }
    case DomainKind::stadium: {
      const auto& s = std::get<StadiumSpec>(spec.shape);
      if (!(s.rect_width > 0.0) || !(s.cap_radius > 0.0)) invalid("stadium sizes must be positive");
      if (std::abs(s.rect_height - 2.0 * s.cap_radius) > 1e-12 * s.rect_height) {
        invalid("stadium caps must be half-disks of radius rect_height / 2");
      }
      break;
    }
  }
  return out;
}

bool obstacle_contains(const ObstacleSpec& obstacle, Point p) {
  if (const auto* d = std::get_if<Disk>(&obstacle)) return norm(p - d->center) <= d->radius;
  const auto& v = std::get<Polygon>(obstacle).vertices;
  bool inside = false;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    if (((v[i].y > p.y) != (v[j].y > p.y)) &&
        (p.x < (v[j].x - v[i].x) * (p.y - v[i].y) / (v[j].y - v[i].y) + v[i].x)) {
      inside = !inside;
    }
  }
  return inside;
}

double distance_to_segment(Point p, const Segment& s) {
  const Point d = s.p1 - s.p0;
  const double len2 = dot(d, d);
  if (len2 == 0.0) return norm(p - s.p0);
  const double t = std::clamp(dot(p - s.p0, d) / len2, 0.0, 1.0);
  return norm(p - (s.p0 + t * d));
}

double distance_to_obstacle_boundary(const ObstacleSpec& obstacle, Point p) {
  if (const auto* d = std::get_if<Disk>(&obstacle)) return std::abs(norm(p - d->center) - d->radius);
  const auto& v = std::get<Polygon>(obstacle).vertices;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    best = std::min(best, distance_to_segment(p, Segment{v[i], v[(i + 1) % v.size()]}));
  }
  return best;
}

double obstacle_area(const ObstacleSpec& obstacle) {
  if (const auto* d = std::get_if<Disk>(&obstacle)) return std::numbers::pi * d->radius * d->radius;
  return std::abs(signed_area(std::get<Polygon>(obstacle).vertices));
}

Point torus_wrap(Point d, const TorusSpec& torus) {
  d.x -= torus.a * std::round(d.x / torus.a);
  d.y -= torus.b * std::round(d.y / torus.b);
  return d;
}

Grid rasterize(const DomainSpec& raw, int nx, int ny) {
  const DomainSpec spec = build_domain(raw);
  if (nx < 16 || ny < 16) {
    throw Error(ErrorKind::resolution_too_coarse, "grids need at least 16 nodes per direction");
  }
  Grid g;
  g.nx = nx;
  g.ny = ny;
  g.dx = spec.width() / nx;
  g.dy = spec.height() / ny;
  g.periodic = spec.is_torus_type();
  g.outer_bc = spec.outer_bc;
  g.inner_bc = spec.inner_bc;
  g.node_class.assign(static_cast<std::size_t>(nx) * ny, NodeClass::interior);

  // Dirichlet boxes are node-centred with the pinned row/column at 0; Neumann
  // boxes are cell-centred so the zero-flux walls sit half a cell outside.
  if (!g.periodic && spec.outer_bc == BoundaryCondition::neumann) {
    g.x_offset = 0.5 * g.dx;
    g.y_offset = 0.5 * g.dy;
  }

  auto at = [&](int i, int j) -> NodeClass& { return g.node_class[static_cast<std::size_t>(g.index(i, j))]; };

  switch (spec.kind()) {
    case DomainKind::torus:
      break;
    case DomainKind::rectangle:
      if (spec.outer_bc == BoundaryCondition::dirichlet) {
        for (int j = 0; j < ny; ++j) at(0, j) = NodeClass::outer_boundary;
        for (int i = 0; i < nx; ++i) at(i, 0) = NodeClass::outer_boundary;
      }
      break;
    case DomainKind::stadium: {
      const auto& s = std::get<StadiumSpec>(spec.shape);
      for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
          if (!stadium_contains(s, g.position(i, j))) at(i, j) = NodeClass::outer_boundary;
        }
      }
      break;
    }
    case DomainKind::sinai: {
      const auto& obstacle = std::get<SinaiSpec>(spec.shape).obstacle;
      std::size_t count = 0;
      for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
          if (obstacle_contains(obstacle, g.position(i, j))) {
            at(i, j) = NodeClass::obstacle;
            ++count;
          }
        }
      }
      if (count == 0) throw Error(ErrorKind::resolution_too_coarse, "obstacle contains no grid node");
      break;
    }
    case DomainKind::slit_torus: {
      const auto& slit = std::get<SlitTorusSpec>(spec.shape).slit;
      const double col = slit.x_pos / g.dx;
      const int is = static_cast<int>(std::lround(col));
      if (std::abs(col - is) > 1e-9 * std::max(1.0, col)) {
        std::ostringstream msg;
        msg << "slit x = " << slit.x_pos << " is not a grid line for nx = " << nx;
        invalid(msg.str());
      }
      const double tol = 1e-12 * spec.height();
      std::size_t count = 0;
      for (int j = 0; j < ny; ++j) {
        const double y = g.position(0, j).y;
        if (y < slit.y0 - tol || y > slit.y1 + tol) continue;
        at(is % nx, j) = NodeClass::slit;
        ++count;
      }
      if (count == 0) throw Error(ErrorKind::resolution_too_coarse, "slit contains no grid node");
      for (int j = 0; j < ny; ++j) {
        if (at(is % nx, j) != NodeClass::slit) continue;
        for (int di : {-1, 1}) {
          NodeClass& c = at(((is + di) % nx + nx) % nx, j);
          if (c == NodeClass::interior) c = NodeClass::slit_adjacent;
        }
      }
      break;
    }
  }
  return g;
}

NodeMask domain_mask(const Grid& grid) {
  NodeMask mask(grid.node_class.size(), 0);
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const NodeClass c = grid.node_class[k];
    mask[k] = (c != NodeClass::obstacle && c != NodeClass::outer_boundary) ? 1 : 0;
  }
  return mask;
}

NodeMask region_mask(const DomainSpec& raw, const Region& region, const Grid& grid) {
  const DomainSpec spec = build_domain(raw);
  const TorusSpec* torus = spec.torus();
  NodeMask mask = domain_mask(grid);

  auto apply = [&](auto&& inside) {
    for (int j = 0; j < grid.ny; ++j) {
      for (int i = 0; i < grid.nx; ++i) {
        auto& m = mask[static_cast<std::size_t>(grid.index(i, j))];
        if (m && !inside(grid.position(i, j))) m = 0;
      }
    }
  };

  std::visit(
      [&](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, ObstacleNeighborhood>) {
          if (!(r.eps > 0.0)) invalid("eps must be positive");
          const ObstacleSpec* obstacle = spec.obstacle();
          if (obstacle == nullptr) invalid("domain has no obstacle");
          const Point ref = obstacle_reference(*obstacle);
          apply([&](Point p) {
            const Point q = ref + torus_wrap(p - ref, *torus);
            return distance_to_obstacle_boundary(*obstacle, q) < r.eps;
          });
        } else if constexpr (std::is_same_v<R, SegmentNeighborhood>) {
          if (!(r.eps > 0.0)) invalid("eps must be positive");
          apply([&](Point p) {
            return min_over_images(p, torus, [&](Point q) { return distance_to_segment(q, r.segment); }) < r.eps;
          });
        } else if constexpr (std::is_same_v<R, SubRectangle>) {
          apply([&](Point p) { return p.x >= r.x0 && p.x < r.x1 && p.y >= r.y0 && p.y < r.y1; });
        } else {
          if (!(r.eps > 0.0)) invalid("eps must be positive");
          apply([&](Point p) {
            return min_over_images(p, torus, [&](Point q) {
                     double best = std::numeric_limits<double>::infinity();
                     for (const Segment& s : r.path) best = std::min(best, distance_to_segment(q, s));
                     return best;
                   }) < r.eps;
          });
        }
      },
      region);

  if (mask_count(mask) == 0) throw Error(ErrorKind::empty_region, "no grid node lies in the region");
  return mask;
}

NodeMask mask_union(const NodeMask& a, const NodeMask& b) {
  NodeMask out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = (a[k] || b[k]) ? 1 : 0;
  return out;
}

std::size_t mask_count(const NodeMask& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

}  // namespace billiards
