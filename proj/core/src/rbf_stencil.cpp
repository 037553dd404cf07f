#include "rbfmgn/rbf_stencil.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "rbfmgn/error.hpp"

namespace rbfmgn {

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Gaussian: return "ga";
    case KernelKind::InverseMultiquadric: return "imq";
    case KernelKind::Polyharmonic3: return "ph3";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "ga" || name == "gaussian") return KernelKind::Gaussian;
  if (name == "imq") return KernelKind::InverseMultiquadric;
  if (name == "ph3") return KernelKind::Polyharmonic3;
  fail(ErrorKind::Config, "unknown rbf kind '" + name + "'");
}

double kernel_value(const RbfKernel& kernel, double r) {
  const double er = kernel.epsilon * r;
  switch (kernel.kind) {
    case KernelKind::Gaussian: return std::exp(-er * er);
    case KernelKind::InverseMultiquadric: return 1.0 / std::sqrt(1.0 + er * er);
    case KernelKind::Polyharmonic3: return er * er * er;
  }
  return 0.0;
}

double kernel_laplacian(const RbfKernel& kernel, double r) {
  const double eps = kernel.epsilon;
  const double s = (eps * r) * (eps * r);
  switch (kernel.kind) {
    case KernelKind::Gaussian: return 4.0 * eps * eps * (s - 1.0) * std::exp(-s);
    case KernelKind::InverseMultiquadric: return eps * eps * (s - 2.0) / std::pow(1.0 + s, 2.5);
    case KernelKind::Polyharmonic3: return 9.0 * eps * eps * eps * r;
  }
  return 0.0;
}

double kernel_laplacian(const RbfKernel& kernel, Point2 center, Point2 other) {
  return kernel_laplacian(kernel, distance(center, other));
}

int monomial_count(int poly_order) { return poly_order < 0 ? 0 : (poly_order + 1) * (poly_order + 2) / 2; }

namespace {

// Monomials x^a y^b ordered by total degree, then by descending a:
// 1, x, y, x^2, xy, y^2, ...
template <class F>
void for_each_monomial(int poly_order, F&& f) {
  int idx = 0;
  for (int d = 0; d <= poly_order; ++d) {
    for (int a = d; a >= 0; --a) f(idx++, a, d - a);
  }
}

double ipow(double x, int p) {
  double out = 1.0;
  for (int i = 0; i < p; ++i) out *= x;
  return out;
}

}  // namespace

std::vector<int> nearest_neighbors(const NodeSet& nodes, int i, int m) {
  const int n = nodes.size();
  if (i < 0 || i >= n) fail(ErrorKind::Shape, "node index " + std::to_string(i) + " out of range");
  if (m < 1 || m > n) {
    fail(ErrorKind::StencilSize, "stencil size m=" + std::to_string(m) + " with n=" + std::to_string(n));
  }
  const Point2 c = nodes.coords[static_cast<std::size_t>(i)];
  std::vector<std::pair<double, int>> order;
  order.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const Point2 d = nodes.coords[static_cast<std::size_t>(j)] - c;
    order.emplace_back(d.x * d.x + d.y * d.y, j);
  }
  std::partial_sort(order.begin(), order.begin() + m, order.end());
  std::vector<int> out(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) out[static_cast<std::size_t>(k)] = order[static_cast<std::size_t>(k)].second;
  return out;
}

Stencil stencil_weights(std::span<const Point2> coords, int center, std::vector<int> neighbors,
                        const RbfKernel& kernel, int poly_order) {
  const int m = static_cast<int>(neighbors.size());
  const int q = monomial_count(poly_order);
  if (m < 1 || neighbors.front() != center) fail(ErrorKind::Shape, "stencil must start with its centre node");

  const Point2 origin = coords[static_cast<std::size_t>(center)];
  std::vector<Point2> local(static_cast<std::size_t>(m));
  double radius = 0.0;
  for (int k = 0; k < m; ++k) {
    local[static_cast<std::size_t>(k)] = coords[static_cast<std::size_t>(neighbors[static_cast<std::size_t>(k)])] - origin;
    radius = std::max(radius, norm(local[static_cast<std::size_t>(k)]));
  }
  // Monomials are evaluated in units of the stencil radius. This spans the
  // same polynomial space, so the weights are unchanged, but keeps the
  // Vandermonde block on the scale of the kernel block.
  const double h = radius > 0.0 ? radius : 1.0;

  const int size = m + q;
  Eigen::MatrixXd saddle = Eigen::MatrixXd::Zero(size, size);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) {
      saddle(j, k) = kernel_value(kernel, distance(local[static_cast<std::size_t>(j)], local[static_cast<std::size_t>(k)]));
    }
    const Point2 p = local[static_cast<std::size_t>(j)];
    for_each_monomial(poly_order, [&](int l, int a, int b) {
      const double v = ipow(p.x / h, a) * ipow(p.y / h, b);
      saddle(j, m + l) = v;
      saddle(m + l, j) = v;
    });
    rhs(j) = kernel_laplacian(kernel, norm(p));
  }
  // Laplacian of (x/h)^a (y/h)^b at the origin is non-zero only for x^2, y^2.
  for_each_monomial(poly_order, [&](int l, int a, int b) {
    if ((a == 2 && b == 0) || (a == 0 && b == 2)) rhs(m + l) = 2.0 / (h * h);
  });

  Eigen::VectorXd sol;
  if (m < q) {
    // Fewer points than monomials: the moment conditions over-constrain the
    // weights. Symmetric layouts (the 5-point cross, where xy vanishes) stay
    // consistent; take the minimum-norm solution and insist it is exact.
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(saddle);
    sol = cod.solve(rhs);
    const double err = (saddle * sol - rhs).lpNorm<Eigen::Infinity>();
    const double scale = saddle.lpNorm<Eigen::Infinity>() * sol.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();
    if (!(err <= 1e-10 * scale)) {
      fail(ErrorKind::UnderdeterminedAugmentation, "node " + std::to_string(center) + ": m=" + std::to_string(m) +
                                                       " < q=" + std::to_string(q) +
                                                       " and the moment conditions are inconsistent");
    }
  } else {
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(saddle);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
      fail(ErrorKind::StencilConditioning,
           "node " + std::to_string(center) + ": saddle system condition estimate " + std::to_string(1.0 / rcond));
    }
    sol = lu.solve(rhs);
  }

  Stencil st;
  st.center = center;
  st.neighbors = std::move(neighbors);
  st.weights.assign(sol.data(), sol.data() + m);
  for (const double w : st.weights) {
    if (!std::isfinite(w)) fail(ErrorKind::StencilConditioning, "node " + std::to_string(center) + ": non-finite weight");
  }
  return st;
}

Stencil stencil_weights(const NodeSet& nodes, int i, int m, const RbfKernel& kernel, int poly_order,
                        DiffOperator /*op*/) {
  return stencil_weights(nodes.coords, i, nearest_neighbors(nodes, i, m), kernel, poly_order);
}

StencilSet build_stencil_set(const NodeSet& nodes, int m, const RbfKernel& kernel, int poly_order) {
  if (!(kernel.epsilon > 0.0)) fail(ErrorKind::Config, "rbf epsilon must be > 0");
  StencilSet set;
  set.kernel = kernel;
  set.poly_order = poly_order;
  set.m = m;
  set.stencils.reserve(static_cast<std::size_t>(nodes.size()));
  for (int i = 0; i < nodes.size(); ++i) set.stencils.push_back(stencil_weights(nodes, i, m, kernel, poly_order));
  return set;
}

std::vector<double> apply_operator(const StencilSet& stencils, std::span<const double> field) {
  if (static_cast<int>(field.size()) != stencils.size()) {
    fail(ErrorKind::Shape, "field has " + std::to_string(field.size()) + " values for " +
                               std::to_string(stencils.size()) + " stencils");
  }
  std::vector<double> out(field.size(), 0.0);
  for (const Stencil& st : stencils.stencils) {
    double acc = 0.0;
    for (std::size_t k = 0; k < st.neighbors.size(); ++k) {
      acc += st.weights[k] * field[static_cast<std::size_t>(st.neighbors[k])];
    }
    out[static_cast<std::size_t>(st.center)] = acc;
  }
  return out;
}

double max_abs_weight(const StencilSet& stencils) {
  double best = 0.0;
  for (const Stencil& st : stencils.stencils) {
    for (const double w : st.weights) best = std::max(best, std::abs(w));
  }
  return best;
}

}  // namespace rbfmgn
