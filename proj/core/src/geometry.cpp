#include "rbfmgn/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "rbfmgn/error.hpp"

namespace rbfmgn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  return t;
}

double amoeba_radius(double theta) {
  const double s2 = std::sin(2.0 * theta);
  const double c2 = std::cos(2.0 * theta);
  return (std::exp(std::sin(theta)) * s2 * s2 + std::exp(std::cos(theta)) * c2 * c2) / 2.0;
}

double butterfly_radius(double theta) { return 1.0 + std::cos(theta) * std::sin(4.0 * theta); }

Point2 polygon_point(const std::vector<Point2>& poly, double fraction) {
  const std::size_t n = poly.size();
  double perimeter = 0.0;
  for (std::size_t i = 0; i < n; ++i) perimeter += distance(poly[i], poly[(i + 1) % n]);
  double target = fraction * perimeter;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = poly[i];
    const Point2 b = poly[(i + 1) % n];
    const double len = distance(a, b);
    if (target <= len || i + 1 == n) {
      const double s = len > 0.0 ? std::clamp(target / len, 0.0, 1.0) : 0.0;
      return a + s * (b - a);
    }
    target -= len;
  }
  return poly.front();
}

double segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  double s = len2 > 0.0 ? ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return distance(p, a + s * ab);
}

double polyline_area(const std::vector<Point2>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) twice += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * std::abs(twice);
}

int winding_number(const std::vector<Point2>& poly, Point2 p) {
  int wn = 0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = poly[i];
    const Point2 b = poly[(i + 1) % n];
    const double side = cross(b - a, p - a);
    if (a.y <= p.y) {
      if (b.y > p.y && side > 0.0) ++wn;
    } else if (b.y <= p.y && side < 0.0) {
      --wn;
    }
  }
  return wn;
}

}  // namespace

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::UnitSquare: return "unit_square";
    case DomainKind::Amoeba: return "amoeba";
    case DomainKind::Butterfly: return "butterfly";
    case DomainKind::LShape: return "lshape";
    case DomainKind::PolygonCustom: return "polygon";
  }
  return "unknown";
}

DomainKind domain_kind_from_string(const std::string& name) {
  if (name == "unit_square") return DomainKind::UnitSquare;
  if (name == "amoeba") return DomainKind::Amoeba;
  if (name == "butterfly") return DomainKind::Butterfly;
  if (name == "lshape") return DomainKind::LShape;
  if (name == "polygon") return DomainKind::PolygonCustom;
  fail(ErrorKind::Config, "unknown domain kind '" + name + "'");
}

DomainSpec DomainSpec::unit_square() {
  return {DomainKind::UnitSquare, {}, {{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
}

DomainSpec DomainSpec::amoeba() {
  return {DomainKind::Amoeba, {{"center_x", 1.0}, {"center_y", 1.0}}, {}};
}

DomainSpec DomainSpec::butterfly() {
  return {DomainKind::Butterfly, {{"scale_x", 0.55}, {"scale_y", 0.75}}, {}};
}

DomainSpec DomainSpec::lshape() {
  return {DomainKind::LShape, {}, {{0, 0}, {2, 0}, {2, 1}, {1, 2}, {0, 2}, {1, 1}}};
}

DomainSpec DomainSpec::polygon(std::vector<Point2> vertices) {
  if (vertices.size() < 3) fail(ErrorKind::Config, "polygon domain needs at least 3 vertices");
  return {DomainKind::PolygonCustom, {}, std::move(vertices)};
}

double DomainSpec::parameter(const std::string& name, double fallback) const {
  const auto it = parameters.find(name);
  return it == parameters.end() ? fallback : it->second;
}

std::vector<Point2> DomainSpec::polygon_vertices() const {
  switch (kind) {
    case DomainKind::UnitSquare: return unit_square().vertices;
    case DomainKind::LShape: return lshape().vertices;
    case DomainKind::PolygonCustom:
      if (vertices.size() < 3) fail(ErrorKind::Config, "polygon domain needs at least 3 vertices");
      return vertices;
    default: fail(ErrorKind::Config, "domain " + to_string(kind) + " is not polygonal");
  }
}

Point2 boundary_point(const DomainSpec& domain, double theta) {
  if (!std::isfinite(theta)) fail(ErrorKind::Config, "boundary parameter must be finite");
  switch (domain.kind) {
    case DomainKind::Amoeba: {
      const double r = amoeba_radius(theta);
      return {r * std::cos(theta) + domain.parameter("center_x", 1.0),
              r * std::sin(theta) + domain.parameter("center_y", 1.0)};
    }
    case DomainKind::Butterfly: {
      const double r = butterfly_radius(theta);
      return {domain.parameter("scale_x", 0.55) * r * std::cos(theta),
              domain.parameter("scale_y", 0.75) * r * std::sin(theta)};
    }
    case DomainKind::UnitSquare:
    case DomainKind::LShape:
    case DomainKind::PolygonCustom:
      return polygon_point(domain.polygon_vertices(), wrap_angle(theta) / kTwoPi);
  }
  fail(ErrorKind::Config, "unknown domain kind");
}

std::vector<Point2> boundary_polyline(const DomainSpec& domain, int segments) {
  if (!domain.is_curve()) return domain.polygon_vertices();
  std::vector<Point2> poly;
  poly.reserve(static_cast<std::size_t>(segments));
  for (int k = 0; k < segments; ++k) poly.push_back(boundary_point(domain, kTwoPi * k / segments));
  return poly;
}

bool contains(const DomainSpec& domain, Point2 p) {
  return winding_number(boundary_polyline(domain), p) != 0;
}

double area(const DomainSpec& domain) { return polyline_area(boundary_polyline(domain, 4096)); }

NodeSet make_node_set(const std::vector<Point2>& interior, const std::vector<Point2>& boundary) {
  NodeSet nodes;
  nodes.coords.reserve(interior.size() + boundary.size());
  nodes.coords.insert(nodes.coords.end(), interior.begin(), interior.end());
  nodes.coords.insert(nodes.coords.end(), boundary.begin(), boundary.end());
  nodes.boundary_mask.assign(interior.size(), 0);
  nodes.boundary_mask.resize(nodes.coords.size(), 1);
  nodes.n_c = static_cast<int>(interior.size());
  nodes.n_b = static_cast<int>(boundary.size());
  return nodes;
}

NodeSet sample_nodes(const DomainSpec& domain, int n_interior, int n_boundary, std::uint64_t seed) {
  if (n_interior < 1 || n_boundary < 1) fail(ErrorKind::Config, "node counts must be >= 1");

  // Boundary: equispaced in arc length along a fine polyline, then mapped
  // back onto the exact curve through the interpolated parameter.
  std::vector<Point2> boundary;
  boundary.reserve(static_cast<std::size_t>(n_boundary));
  if (domain.is_curve()) {
    constexpr int kFine = 8192;
    std::vector<double> arc(kFine + 1, 0.0);
    Point2 prev = boundary_point(domain, 0.0);
    for (int k = 1; k <= kFine; ++k) {
      const Point2 cur = boundary_point(domain, kTwoPi * k / kFine);
      arc[static_cast<std::size_t>(k)] = arc[static_cast<std::size_t>(k - 1)] + distance(prev, cur);
      prev = cur;
    }
    const double total = arc.back();
    for (int j = 0; j < n_boundary; ++j) {
      const double s = total * j / n_boundary;
      const auto it = std::upper_bound(arc.begin(), arc.end(), s);
      const auto k = std::clamp<std::ptrdiff_t>(it - arc.begin(), 1, kFine);
      const double a0 = arc[static_cast<std::size_t>(k - 1)];
      const double a1 = arc[static_cast<std::size_t>(k)];
      const double frac = a1 > a0 ? (s - a0) / (a1 - a0) : 0.0;
      boundary.push_back(boundary_point(domain, kTwoPi * (static_cast<double>(k - 1) + frac) / kFine));
    }
  } else {
    for (int j = 0; j < n_boundary; ++j) boundary.push_back(boundary_point(domain, kTwoPi * j / n_boundary));
  }

  const std::vector<Point2> poly = boundary_polyline(domain);
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const Point2 p : poly) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double spacing = std::sqrt(area(domain) / (n_interior + n_boundary));
  const double min_sep = 0.5 * spacing;
  const double wall_gap = 0.5 * min_sep;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(xmin, xmax);
  std::uniform_real_distribution<double> uy(ymin, ymax);

  std::vector<Point2> interior;
  interior.reserve(static_cast<std::size_t>(n_interior));
  const long long budget = 2000LL * n_interior + 10000;
  for (long long attempt = 0; attempt < budget && static_cast<int>(interior.size()) < n_interior; ++attempt) {
    const Point2 p{ux(rng), uy(rng)};
    if (winding_number(poly, p) == 0) continue;
    bool ok = true;
    for (std::size_t i = 0; ok && i < poly.size(); ++i)
      ok = segment_distance(p, poly[i], poly[(i + 1) % poly.size()]) >= wall_gap;
    for (std::size_t i = 0; ok && i < boundary.size(); ++i) ok = distance(p, boundary[i]) >= min_sep;
    for (std::size_t i = 0; ok && i < interior.size(); ++i) ok = distance(p, interior[i]) >= min_sep;
    if (ok) interior.push_back(p);
  }
  if (static_cast<int>(interior.size()) < n_interior) {
    fail(ErrorKind::SamplingCapacity, "placed only " + std::to_string(interior.size()) + " of " +
                                          std::to_string(n_interior) + " interior nodes");
  }
  return make_node_set(interior, boundary);
}

std::vector<int> nearest_interior(const NodeSet& nodes) {
  if (nodes.n_c < 1) fail(ErrorKind::Shape, "node set has no interior nodes");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(nodes.n_b));
  for (int j = nodes.n_c; j < nodes.size(); ++j) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nodes.n_c; ++i) {
      const double d = distance(nodes.coords[static_cast<std::size_t>(j)], nodes.coords[static_cast<std::size_t>(i)]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    out.push_back(best);
  }
  return out;
}

Circle circumcircle(Point2 a, Point2 b, Point2 c) {
  const Point2 ab = b - a;
  const Point2 ac = c - a;
  const double d = 2.0 * cross(ab, ac);
  if (d == 0.0) return {a, std::numeric_limits<double>::infinity()};
  const double ab2 = ab.x * ab.x + ab.y * ab.y;
  const double ac2 = ac.x * ac.x + ac.y * ac.y;
  const Point2 rel{(ac.y * ab2 - ab.y * ac2) / d, (ab.x * ac2 - ac.x * ab2) / d};
  return {a + rel, rel.x * rel.x + rel.y * rel.y};
}

namespace {

struct WorkTriangle {
  std::array<int, 3> v;
  Circle circle;
  bool alive = true;
};

void check_input(const std::vector<Point2>& pts) {
  if (pts.size() < 3) fail(ErrorKind::DegenerateGeometry, "triangulation needs at least 3 nodes");

  std::vector<int> order(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return pts[static_cast<std::size_t>(a)].x < pts[static_cast<std::size_t>(b)].x;
  });
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Point2 p = pts[static_cast<std::size_t>(order[i])];
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const Point2 q = pts[static_cast<std::size_t>(order[j])];
      if (q.x - p.x > 1e-12) break;
      if (distance(p, q) <= 1e-12) {
        fail(ErrorKind::DuplicateNode, "nodes " + std::to_string(order[i]) + " and " +
                                           std::to_string(order[j]) + " coincide");
      }
    }
  }

  const Point2 p0 = pts.front();
  std::size_t far = 0;
  double far_d = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double d = distance(p0, pts[i]);
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  const Point2 dir = pts[far] - p0;
  for (const Point2 p : pts) {
    if (std::abs(cross(dir, p - p0)) > 1e-12 * far_d * far_d) return;
  }
  fail(ErrorKind::DegenerateGeometry, "all nodes are collinear");
}

}  // namespace

Graph triangulate(const NodeSet& nodes, const DomainSpec* clip) {
  const std::vector<Point2>& input = nodes.coords;
  check_input(input);

  const int n = static_cast<int>(input.size());
  std::vector<Point2> pts = input;
  double xmin = pts[0].x, xmax = pts[0].x, ymin = pts[0].y, ymax = pts[0].y;
  for (const Point2 p : pts) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const Point2 mid{0.5 * (xmin + xmax), 0.5 * (ymin + ymax)};
  const double big = 10.0 * std::max(xmax - xmin, ymax - ymin);
  pts.push_back({mid.x - 2.0 * big, mid.y - big});
  pts.push_back({mid.x + 2.0 * big, mid.y - big});
  pts.push_back({mid.x, mid.y + 2.0 * big});

  auto make = [&](int a, int b, int c) {
    if (cross(pts[static_cast<std::size_t>(b)] - pts[static_cast<std::size_t>(a)],
              pts[static_cast<std::size_t>(c)] - pts[static_cast<std::size_t>(a)]) < 0.0) {
      std::swap(b, c);
    }
    return WorkTriangle{{a, b, c},
                        circumcircle(pts[static_cast<std::size_t>(a)], pts[static_cast<std::size_t>(b)],
                                     pts[static_cast<std::size_t>(c)]),
                        true};
  };

  std::vector<WorkTriangle> tris;
  tris.reserve(static_cast<std::size_t>(4 * n + 8));
  tris.push_back(make(n, n + 1, n + 2));

  std::vector<std::size_t> bad;
  std::vector<std::pair<int, int>> cavity;
  for (int ip = 0; ip < n; ++ip) {
    const Point2 p = pts[static_cast<std::size_t>(ip)];
    bad.clear();
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (!tris[t].alive) continue;
      const Circle& c = tris[t].circle;
      const double dx = p.x - c.center.x;
      const double dy = p.y - c.center.y;
      if (dx * dx + dy * dy < c.radius_sq * (1.0 - 1e-12)) bad.push_back(t);
    }
    // Cavity boundary: edges of bad triangles not shared with another bad one.
    cavity.clear();
    for (const std::size_t t : bad) {
      for (int e = 0; e < 3; ++e) {
        const int a = tris[t].v[static_cast<std::size_t>(e)];
        const int b = tris[t].v[static_cast<std::size_t>((e + 1) % 3)];
        bool shared = false;
        for (const std::size_t u : bad) {
          if (u == t) continue;
          const auto& w = tris[u].v;
          for (int f = 0; f < 3 && !shared; ++f) {
            shared = (w[static_cast<std::size_t>(f)] == b && w[static_cast<std::size_t>((f + 1) % 3)] == a);
          }
          if (shared) break;
        }
        if (!shared) cavity.emplace_back(a, b);
      }
    }
    for (const std::size_t t : bad) tris[t].alive = false;
    for (const auto& [a, b] : cavity) tris.push_back(make(a, b, ip));
    if (tris.size() > 16 * static_cast<std::size_t>(n) + 64) {
      std::erase_if(tris, [](const WorkTriangle& t) { return !t.alive; });
    }
  }

  std::vector<Point2> clip_poly;
  if (clip != nullptr) clip_poly = boundary_polyline(*clip);

  Graph graph;
  graph.nodes = nodes;
  std::set<std::pair<int, int>> undirected;
  for (const WorkTriangle& t : tris) {
    if (!t.alive) continue;
    if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
    if (clip != nullptr) {
      const Point2 centroid = (1.0 / 3.0) * (input[static_cast<std::size_t>(t.v[0])] +
                                              input[static_cast<std::size_t>(t.v[1])] +
                                              input[static_cast<std::size_t>(t.v[2])]);
      if (winding_number(clip_poly, centroid) == 0) continue;
    }
    graph.triangles.push_back(t.v);
    for (int e = 0; e < 3; ++e) {
      const int a = t.v[static_cast<std::size_t>(e)];
      const int b = t.v[static_cast<std::size_t>((e + 1) % 3)];
      undirected.emplace(std::min(a, b), std::max(a, b));
    }
  }
  if (graph.triangles.empty()) fail(ErrorKind::DegenerateGeometry, "triangulation produced no triangles");
  std::sort(graph.triangles.begin(), graph.triangles.end());

  graph.edges.reserve(2 * undirected.size());
  for (const auto& [a, b] : undirected) {
    graph.edges.push_back({a, b});
    graph.edges.push_back({b, a});
  }
  std::sort(graph.edges.begin(), graph.edges.end());
  return graph;
}

}  // namespace rbfmgn
