#pragma once

// Billiard domains and their rasterization onto uniform grids.
//
// Every domain is embedded in an axis-aligned box [0, width) x [0, height).
// Torus-type domains (torus, sinai, slit_torus) are periodic in both
// directions; rectangle and stadium domains are closed boxes.

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace billiards {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
  friend bool operator==(const Point&, const Point&) = default;
};

double dot(Point a, Point b);
double norm(Point p);

struct Segment {
  Point p0;
  Point p1;
};

enum class BoundaryCondition : std::uint8_t { dirichlet, neumann, periodic };

struct TorusSpec {
  double a = 1.0;  // horizontal period
  double b = 1.0;  // vertical period
};

struct Disk {
  Point center;
  double radius = 0.0;
};

struct Polygon {
  std::vector<Point> vertices;
};

using ObstacleSpec = std::variant<Disk, Polygon>;

// Vertical slit {x_pos} x [y0, y1]; always carries a Dirichlet condition.
struct SlitSpec {
  double x_pos = 0.0;
  double y0 = 0.0;
  double y1 = 0.0;
};

struct RectangleSpec {
  double width = 1.0;
  double height = 1.0;
};

struct SinaiSpec {
  TorusSpec torus;
  ObstacleSpec obstacle;
};

struct SlitTorusSpec {
  TorusSpec torus;
  SlitSpec slit;
};

// Central rectangle rect_width x rect_height capped left and right by
// half-disks of radius cap_radius (= rect_height / 2).
struct StadiumSpec {
  double rect_width = 1.0;
  double rect_height = 1.0;
  double cap_radius = 0.5;
};

enum class DomainKind : std::uint8_t { rectangle, torus, sinai, slit_torus, stadium };

struct DomainSpec {
  std::variant<RectangleSpec, TorusSpec, SinaiSpec, SlitTorusSpec, StadiumSpec> shape;
  BoundaryCondition outer_bc = BoundaryCondition::dirichlet;  // box edges
  BoundaryCondition inner_bc = BoundaryCondition::dirichlet;  // obstacle / slit

  DomainKind kind() const;
  bool is_torus_type() const;
  double width() const;
  double height() const;
  const TorusSpec* torus() const;
  const ObstacleSpec* obstacle() const;
  const SlitSpec* slit() const;
};

DomainSpec make_rectangle(double w, double h, BoundaryCondition bc = BoundaryCondition::dirichlet);
DomainSpec make_torus(double a, double b);
DomainSpec make_sinai(TorusSpec torus, ObstacleSpec obstacle,
                      BoundaryCondition bc = BoundaryCondition::dirichlet);
DomainSpec make_slit_torus(TorusSpec torus, SlitSpec slit);
DomainSpec make_stadium(double rect_width, double cap_radius);

// Checks every invariant and returns a normalized copy (slit endpoints sorted,
// polygon orientation counter-clockwise). Throws Error{invalid_geometry}.
DomainSpec build_domain(const DomainSpec& spec);

bool obstacle_contains(const ObstacleSpec& obstacle, Point p);
// Euclidean distance from p to the obstacle boundary (no periodic wrap).
double distance_to_obstacle_boundary(const ObstacleSpec& obstacle, Point p);
double obstacle_area(const ObstacleSpec& obstacle);

enum class NodeClass : std::uint8_t {
  interior,        // unknown of the discrete problem
  obstacle,        // inside the removed obstacle
  slit,            // on the slit, pinned to zero
  slit_adjacent,   // unknown whose horizontal neighbour lies on the slit
  outer_boundary,  // on or outside the outer boundary, pinned to zero
};

struct Grid {
  int nx = 0;
  int ny = 0;
  double dx = 0.0;
  double dy = 0.0;
  double x_offset = 0.0;  // coordinate of node column 0
  double y_offset = 0.0;
  bool periodic = false;
  BoundaryCondition outer_bc = BoundaryCondition::dirichlet;
  BoundaryCondition inner_bc = BoundaryCondition::dirichlet;
  std::vector<NodeClass> node_class;  // row-major: index = j * nx + i

  int size() const { return nx * ny; }
  int index(int i, int j) const { return j * nx + i; }
  Point position(int i, int j) const { return {x_offset + i * dx, y_offset + j * dy}; }
  Point position(int idx) const { return position(idx % nx, idx / nx); }
  bool is_unknown(int idx) const {
    const NodeClass c = node_class[static_cast<std::size_t>(idx)];
    return c == NodeClass::interior || c == NodeClass::slit_adjacent;
  }
  double cell_area() const { return dx * dy; }
};

Grid rasterize(const DomainSpec& spec, int nx, int ny);

using NodeMask = std::vector<std::uint8_t>;

struct ObstacleNeighborhood {
  double eps = 0.0;
};
// A zero-length segment gives a disk around a point (slit endpoints).
struct SegmentNeighborhood {
  Segment segment;
  double eps = 0.0;
};
struct SubRectangle {
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
};
struct PathTube {
  std::vector<Segment> path;
  double eps = 0.0;
};

using Region = std::variant<ObstacleNeighborhood, SegmentNeighborhood, SubRectangle, PathTube>;

// Nodes closer than eps to the region generator (torus metric on periodic
// domains) that are not removed by the obstacle. Throws Error{empty_region}.
NodeMask region_mask(const DomainSpec& spec, const Region& region, const Grid& grid);

// Mask of all nodes that belong to the billiard (not obstacle, not outside).
NodeMask domain_mask(const Grid& grid);

NodeMask mask_union(const NodeMask& a, const NodeMask& b);
std::size_t mask_count(const NodeMask& mask);

// Minimal-image displacement on a torus.
Point torus_wrap(Point d, const TorusSpec& torus);
double distance_to_segment(Point p, const Segment& s);

}  // namespace billiards
