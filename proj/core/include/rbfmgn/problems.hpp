#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbfmgn/geometry.hpp"

namespace rbfmgn {

enum class PdeKind { HeatPlain, PoissonSource, Wave };

/// Closed-form truth attached to a problem.
enum class Solution {
  None,
  SquarePolynomial,  // x y^2 + y x^2 + 3 t
  CosineDecay,       // lambda exp(-lambda t) (cos x + cos y)
  SineDecay,         // exp(-lambda pi^2 t / 4) [y sin(pi x/2 - pi/4) + x sin(pi y/2 - pi/4)]
};

std::string to_string(PdeKind kind);
PdeKind pde_kind_from_string(const std::string& name);
std::string to_string(Solution s);
Solution solution_from_string(const std::string& name);

/// Initial displacement of the wave problem:
/// amplitude * exp(-sharpness |x - center|^2).
struct GaussianBump {
  double amplitude = 1.0;
  Point2 center{1.0, 1.0};
  double sharpness = 8.0;

  double operator()(Point2 p) const;
};

/// One PDE instance of the form u_t + L[u; coefficient] = 0 (or its
/// second-order-in-time wave analogue) with its initial and boundary data.
///
/// The coefficient is gamma for PoissonSource (u_t + gamma Lap u + f = 0),
/// lambda for HeatPlain (u_t = lambda Lap u) and D for Wave
/// (u_tt = D Lap u, free boundaries).
struct ProblemSpec {
  PdeKind kind = PdeKind::HeatPlain;
  double coefficient = 1.0;
  DomainSpec domain;
  Solution solution = Solution::None;
  double T_final = 1.0;
  double tau = 0.01;
  GaussianBump initial_bump;

  bool has_analytic() const { return solution != Solution::None; }
  /// Number of tau steps to reach t.
  int levels_until(double t) const;

  static ProblemSpec square_poisson(double gamma = 1.0);
  static ProblemSpec amoeba_heat(double lambda = 1.0);
  static ProblemSpec butterfly_heat(double lambda = 1.0);
  static ProblemSpec lshape_wave(double D = 1e-6);
};

/// Throws Config if the invariants on tau, T_final or the coefficient fail.
void validate(const ProblemSpec& problem);

/// Default Solution for a (kind, domain) pair from the problem catalog.
Solution default_solution(PdeKind kind, DomainKind domain);

struct FieldSnapshot {
  std::vector<double> values;
  double time = 0.0;
  int level = 0;
};

double analytic_solution(const ProblemSpec& problem, Point2 p, double t);
std::vector<double> analytic_field(const ProblemSpec& problem, const NodeSet& nodes, double t);

/// f(x, t) of the PoissonSource problem; zero for the other kinds.
double source_term(const ProblemSpec& problem, Point2 p, double t);

FieldSnapshot initial_condition(const ProblemSpec& problem, const NodeSet& nodes);

/// Dirichlet data g(x, t) on nodes n_c..n-1 for problems with a known truth.
/// The wave problem has free boundaries: its boundary values mirror the
/// nearest interior node of `field`, which is then required.
std::vector<double> boundary_values(const ProblemSpec& problem, const NodeSet& nodes, double t,
                                    std::span<const double> field = {});

}  // namespace rbfmgn
