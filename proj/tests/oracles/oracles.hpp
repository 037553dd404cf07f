// Independent reference implementations used by the tests. None of these
// call into rbfmgn beyond plain data types.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "rbfmgn/geometry.hpp"

namespace oracle {

using rbfmgn::Point2;

/// Strictly inside the circumcircle of (a, b, c), via the classic 3x3
/// incircle determinant with the orientation folded in.
inline bool strictly_in_circumcircle(Point2 a, Point2 b, Point2 c, Point2 p, double tol = 1e-10) {
  const double adx = a.x - p.x, ady = a.y - p.y;
  const double bdx = b.x - p.x, bdy = b.y - p.y;
  const double cdx = c.x - p.x, cdy = c.y - p.y;
  const double det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) -
                     (bdx * bdx + bdy * bdy) * (adx * cdy - cdx * ady) +
                     (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
  const double orient = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  return (orient > 0 ? det : -det) > tol;
}

/// Number of (triangle, node) pairs violating the empty-circumcircle rule.
inline int delaunay_violations(const std::vector<Point2>& pts, const std::vector<std::array<int, 3>>& tris) {
  int bad = 0;
  for (const auto& t : tris) {
    for (int p = 0; p < static_cast<int>(pts.size()); ++p) {
      if (p == t[0] || p == t[1] || p == t[2]) continue;
      if (strictly_in_circumcircle(pts[t[0]], pts[t[1]], pts[t[2]], pts[p])) ++bad;
    }
  }
  return bad;
}

/// Andrew's monotone chain; returns the number of input points on the hull
/// boundary, collinear ones included.
inline int hull_size(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  auto turn = [](Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); };
  std::vector<Point2> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && turn(h[k - 2], h[k - 1], pts[i]) < 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, lo = k + 1; i-- > 0;) {
    while (k >= lo && turn(h[k - 2], h[k - 1], pts[i]) < 0) --k;
    h[k++] = pts[i];
  }
  return static_cast<int>(k) - 1;
}

/// Full sort of all nodes by (distance, index).
inline std::vector<int> sorted_neighbors(const std::vector<Point2>& pts, int i, int m) {
  std::vector<int> idx(pts.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    const double da = std::hypot(pts[a].x - pts[i].x, pts[a].y - pts[i].y);
    const double db = std::hypot(pts[b].x - pts[i].x, pts[b].y - pts[i].y);
    return da < db;
  });
  idx.resize(static_cast<std::size_t>(m));
  return idx;
}

/// Textbook 5-point Laplacian (centre first).
inline std::array<double, 5> five_point(double h) {
  const double s = 1.0 / (h * h);
  return {-4 * s, s, s, s, s};
}

/// Monomials x^a y^b with a + b <= 2 and their analytic Laplacians.
struct Monomial {
  int a, b;
  double operator()(Point2 p) const { return std::pow(p.x, a) * std::pow(p.y, b); }
  double laplacian(Point2 p) const {
    double out = 0.0;
    if (a >= 2) out += a * (a - 1) * std::pow(p.x, a - 2) * std::pow(p.y, b);
    if (b >= 2) out += b * (b - 1) * std::pow(p.x, a) * std::pow(p.y, b - 2);
    return out;
  }
};

inline std::vector<Monomial> monomials_to_degree_two() {
  return {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
}

/// Second-order central finite-difference Laplacian of a scalar function.
inline double fd_laplacian(const std::function<double(double, double)>& f, double x, double y, double h) {
  return (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4 * f(x, y)) / (h * h);
}

/// Central difference of f along one coordinate of a parameter vector.
inline double central_difference(const std::function<double()>& f, double& param, double h) {
  const double saved = param;
  param = saved + h;
  const double up = f();
  param = saved - h;
  const double down = f();
  param = saved;
  return (up - down) / (2 * h);
}

}  // namespace oracle
