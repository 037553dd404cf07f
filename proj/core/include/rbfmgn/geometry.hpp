#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rbfmgn {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend bool operator==(Point2 a, Point2 b) = default;
};

inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }

enum class DomainKind { UnitSquare, Amoeba, Butterfly, LShape, PolygonCustom };

std::string to_string(DomainKind kind);
DomainKind domain_kind_from_string(const std::string& name);

/// Parametric description of a 2-D domain.
///
/// Curve domains (Amoeba, Butterfly) are star-shaped polar curves; the
/// polygonal ones (UnitSquare, LShape, PolygonCustom) are traversed by a
/// normalized arc-length parameter starting at the first vertex. Recognised
/// scalar parameters: amoeba `center_x`, `center_y` (default 1), butterfly
/// `scale_x`, `scale_y` (default 0.55, 0.75).
struct DomainSpec {
  DomainKind kind = DomainKind::UnitSquare;
  std::map<std::string, double> parameters;
  std::vector<Point2> vertices;  // PolygonCustom only; filled for LShape/UnitSquare

  static DomainSpec unit_square();
  static DomainSpec amoeba();
  static DomainSpec butterfly();
  static DomainSpec lshape();
  static DomainSpec polygon(std::vector<Point2> vertices);

  bool is_curve() const { return kind == DomainKind::Amoeba || kind == DomainKind::Butterfly; }
  double parameter(const std::string& name, double fallback) const;
  /// Polygon vertices for the polygonal kinds (counter-clockwise).
  std::vector<Point2> polygon_vertices() const;
};

/// Point on the boundary at angle (curves) or normalized arc parameter
/// theta / 2pi (polygons). 2pi-periodic.
Point2 boundary_point(const DomainSpec& domain, double theta);

/// Closed polyline approximation of the boundary; exact for polygons.
std::vector<Point2> boundary_polyline(const DomainSpec& domain, int segments = 512);

/// Winding-number point-in-domain test against boundary_polyline.
bool contains(const DomainSpec& domain, Point2 p);
double area(const DomainSpec& domain);

struct NodeSet {
  std::vector<Point2> coords;
  std::vector<std::uint8_t> boundary_mask;  // 1 on boundary nodes
  int n_c = 0;
  int n_b = 0;

  int size() const { return static_cast<int>(coords.size()); }
  bool is_boundary(int i) const { return boundary_mask[static_cast<std::size_t>(i)] != 0; }
};

/// Builds a NodeSet from interior and boundary point lists, enforcing the
/// interior-first index layout.
NodeSet make_node_set(const std::vector<Point2>& interior, const std::vector<Point2>& boundary);

/// Boundary nodes equispaced in arc length; interior nodes by seeded uniform
/// rejection sampling with a minimum-separation guard.
NodeSet sample_nodes(const DomainSpec& domain, int n_interior, int n_boundary, std::uint64_t seed);

/// For every boundary node (in order n_c..n-1), the index of its nearest
/// interior node.
std::vector<int> nearest_interior(const NodeSet& nodes);

struct Edge {
  int from = 0;
  int to = 0;
  friend bool operator==(Edge, Edge) = default;
  friend auto operator<=>(Edge, Edge) = default;
};

using Triangle = std::array<int, 3>;

struct Graph {
  NodeSet nodes;
  std::vector<Edge> edges;  // both directions of every mesh edge, sorted
  std::vector<Triangle> triangles;
};

/// Bowyer-Watson Delaunay triangulation of the node set. When `clip` is
/// given, triangles whose centroid falls outside the domain are dropped.
Graph triangulate(const NodeSet& nodes, const DomainSpec* clip = nullptr);

/// Circumcircle of a triangle; radius is infinite for collinear input.
struct Circle {
  Point2 center;
  double radius_sq = 0.0;
};
Circle circumcircle(Point2 a, Point2 b, Point2 c);

}  // namespace rbfmgn
