#pragma once

#include <span>
#include <vector>

#include "rbfmgn/geometry.hpp"
#include "rbfmgn/problems.hpp"
#include "rbfmgn/rbf_stencil.hpp"

namespace rbfmgn {

/// Row-compressed sparse matrix. Interior rows keep their columns in stencil
/// neighbour order (centre first).
struct SparseRows {
  std::vector<int> row_ptr{0};
  std::vector<int> cols;
  std::vector<double> vals;

  int rows() const { return static_cast<int>(row_ptr.size()) - 1; }
  void push_row(std::span<const int> c, std::span<const double> v);
  std::vector<double> multiply(std::span<const double> x) const;
  /// y += A^T g, used to differentiate through a product with A.
  void multiply_transpose_add(std::span<const double> g, std::span<double> y) const;
};

enum class Scheme { Heat, Wave };

/// Discrete one-step relation at level l:
///
///   R = A U^l - next_coeff * [U^{l+1}_interior; 0] - H + F
///
/// Heat: interior rows hold alpha w + (1/tau) on the diagonal, next_coeff is
/// 1/tau, boundary rows are e_j with H_j = g(x_j, t^l). Wave: interior rows
/// hold D w + (2/tau^2) on the diagonal, next_coeff is 1/tau^2, F carries
/// -(1/tau^2) U^{l-1}, and boundary rows are e_j - e_mirror(j) with H = 0.
///
/// For the heat scheme alpha is the signed diffusion coefficient of
/// u_t = alpha Lap u + s: lambda for HeatPlain, and -gamma with s = -f for
/// PoissonSource (u_t + gamma Lap u + f = 0).
struct ResidualSystem {
  Scheme scheme = Scheme::Heat;
  SparseRows A;
  std::vector<double> H;
  std::vector<double> F;
  double tau = 0.0;
  double next_coeff = 0.0;
  double diffusion = 0.0;
  int n_c = 0;
  int n_b = 0;
  int level = 0;
  double time = 0.0;
  /// Heat: g(x, t^{l+1}) on boundary nodes, applied by direct_step.
  std::vector<double> boundary_next;
  /// Wave: nearest interior node of every boundary node.
  std::vector<int> mirror;
  /// tau |alpha| max|w| (heat) or tau^2 D max|w| (wave).
  double stability_number = 0.0;

  int size() const { return n_c + n_b; }
};

using WaveSystem = ResidualSystem;

ResidualSystem assemble_heat(const StencilSet& stencils, const ProblemSpec& problem, const NodeSet& nodes,
                             int level);

/// `previous` is U^{l-1}; an empty span is a missing-history error.
WaveSystem assemble_wave(const StencilSet& stencils, const ProblemSpec& problem, const NodeSet& nodes, int level,
                         std::span<const double> previous);

/// A U^l - H + F: the part of the residual that does not depend on the
/// prediction.
std::vector<double> residual_offset(const ResidualSystem& system, std::span<const double> u_level);

/// Full residual; `next_interior` has n_c entries.
std::vector<double> residual(const ResidualSystem& system, std::span<const double> u_level,
                             std::span<const double> next_interior);

/// Solves the step relation for U^{l+1} (no linear solve: the scheme is
/// explicit). Boundary values come from g (heat) or the mirror rule (wave).
/// Non-finite output raises an instability error quoting stability_number.
FieldSnapshot direct_step(const ResidualSystem& system, std::span<const double> u_level);

/// The explicit oracle only runs sub-steps whose stability number is at most
/// this limit.
inline constexpr double kExplicitStabilityLimit = 0.5;
/// Upper bound on automatically chosen sub-steps per level.
inline constexpr int kMaxAutoSubsteps = 1000;

/// Sub-steps per level that bring the stability number under the limit;
/// throws an instability error if more than kMaxAutoSubsteps are needed.
int auto_substeps(const ProblemSpec& problem, const StencilSet& stencils);

/// Rolls the direct solver from the initial condition for `levels` steps of
/// problem.tau, each split into `substeps` explicit sub-steps of
/// tau/substeps (0 selects auto_substeps). A sub-step above the stability
/// limit is refused up front with an instability error.
/// Returns levels + 1 snapshots (level 0 included).
std::vector<FieldSnapshot> solve_direct(const ProblemSpec& problem, const NodeSet& nodes,
                                        const StencilSet& stencils, int levels, int substeps = 0);

/// Stability number of the explicit scheme at step size tau.
double stability_number(const ProblemSpec& problem, const StencilSet& stencils, double tau);

/// Signed diffusion coefficient alpha of the heat scheme.
double heat_diffusion(const ProblemSpec& problem);

}  // namespace rbfmgn
