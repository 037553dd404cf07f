#pragma once

#include <span>
#include <string>
#include <vector>

#include "rbfmgn/geometry.hpp"

namespace rbfmgn {

enum class KernelKind { Gaussian, InverseMultiquadric, Polyharmonic3 };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

struct RbfKernel {
  KernelKind kind = KernelKind::Polyharmonic3;
  double epsilon = 1.0;
};

/// phi(r): exp(-(eps r)^2), 1/sqrt(1+(eps r)^2) or (eps r)^3.
double kernel_value(const RbfKernel& kernel, double r);

/// 2-D Laplacian of phi(|x - center|) evaluated at x = other.
double kernel_laplacian(const RbfKernel& kernel, Point2 center, Point2 other);
double kernel_laplacian(const RbfKernel& kernel, double r);

enum class DiffOperator { Laplacian };

struct Stencil {
  int center = 0;
  std::vector<int> neighbors;  // neighbors[0] == center
  std::vector<double> weights;
};

struct StencilSet {
  std::vector<Stencil> stencils;
  DiffOperator op = DiffOperator::Laplacian;
  RbfKernel kernel;
  int poly_order = 2;
  int m = 0;

  int size() const { return static_cast<int>(stencils.size()); }
};

/// Number of 2-D monomials of total degree <= order.
int monomial_count(int poly_order);

/// The m nearest nodes to node i, ascending by distance, ties by index.
std::vector<int> nearest_neighbors(const NodeSet& nodes, int i, int m);

/// RBF-FD weights for the Laplacian at node i from the polynomial-augmented
/// saddle system, assembled in coordinates centred on node i. With m < q the
/// minimum-norm solution is accepted only if it satisfies every moment
/// condition (the 5-point cross does); otherwise it is an
/// under-determined-augmentation error.
Stencil stencil_weights(const NodeSet& nodes, int i, int m, const RbfKernel& kernel, int poly_order,
                        DiffOperator op = DiffOperator::Laplacian);

/// Weights over an explicit neighbour list (neighbors[0] must be the centre).
Stencil stencil_weights(std::span<const Point2> coords, int center, std::vector<int> neighbors,
                        const RbfKernel& kernel, int poly_order);

StencilSet build_stencil_set(const NodeSet& nodes, int m, const RbfKernel& kernel, int poly_order);

/// out[i] = sum_k w_k^i field[neighbors_k^i]
std::vector<double> apply_operator(const StencilSet& stencils, std::span<const double> field);

/// Largest |w| over all stencils; enters the explicit-step stability number.
double max_abs_weight(const StencilSet& stencils);

}  // namespace rbfmgn
