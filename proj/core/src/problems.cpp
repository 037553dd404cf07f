#include "rbfmgn/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rbfmgn/error.hpp"

namespace rbfmgn {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::string to_string(PdeKind kind) {
  switch (kind) {
    case PdeKind::HeatPlain: return "heat";
    case PdeKind::PoissonSource: return "poisson_source";
    case PdeKind::Wave: return "wave";
  }
  return "unknown";
}

PdeKind pde_kind_from_string(const std::string& name) {
  if (name == "heat") return PdeKind::HeatPlain;
  if (name == "poisson_source") return PdeKind::PoissonSource;
  if (name == "wave") return PdeKind::Wave;
  fail(ErrorKind::Config, "unknown pde kind '" + name + "'");
}

std::string to_string(Solution s) {
  switch (s) {
    case Solution::None: return "none";
    case Solution::SquarePolynomial: return "square_polynomial";
    case Solution::CosineDecay: return "cosine_decay";
    case Solution::SineDecay: return "sine_decay";
  }
  return "unknown";
}

Solution solution_from_string(const std::string& name) {
  if (name == "none") return Solution::None;
  if (name == "square_polynomial") return Solution::SquarePolynomial;
  if (name == "cosine_decay") return Solution::CosineDecay;
  if (name == "sine_decay") return Solution::SineDecay;
  fail(ErrorKind::Config, "unknown solution '" + name + "'");
}

double GaussianBump::operator()(Point2 p) const {
  const Point2 d = p - center;
  return amplitude * std::exp(-sharpness * (d.x * d.x + d.y * d.y));
}

int ProblemSpec::levels_until(double t) const { return static_cast<int>(std::lround(t / tau)); }

ProblemSpec ProblemSpec::square_poisson(double gamma) {
  ProblemSpec p;
  p.kind = PdeKind::PoissonSource;
  p.coefficient = gamma;
  p.domain = DomainSpec::unit_square();
  p.solution = Solution::SquarePolynomial;
  p.T_final = 1.0;
  p.tau = 0.01;
  return p;
}

ProblemSpec ProblemSpec::amoeba_heat(double lambda) {
  ProblemSpec p;
  p.kind = PdeKind::HeatPlain;
  p.coefficient = lambda;
  p.domain = DomainSpec::amoeba();
  p.solution = Solution::CosineDecay;
  p.T_final = 2.0;
  p.tau = 0.01;
  return p;
}

ProblemSpec ProblemSpec::butterfly_heat(double lambda) {
  ProblemSpec p;
  p.kind = PdeKind::HeatPlain;
  p.coefficient = lambda;
  p.domain = DomainSpec::butterfly();
  p.solution = Solution::SineDecay;
  p.T_final = 2.0;
  p.tau = 0.01;
  return p;
}

ProblemSpec ProblemSpec::lshape_wave(double D) {
  ProblemSpec p;
  p.kind = PdeKind::Wave;
  p.coefficient = D;
  p.domain = DomainSpec::lshape();
  p.solution = Solution::None;
  p.T_final = 3.0;
  p.tau = 0.1;
  return p;
}

void validate(const ProblemSpec& problem) {
  if (!(problem.tau > 0.0)) fail(ErrorKind::Config, "tau must be > 0");
  if (!(problem.T_final >= problem.tau)) fail(ErrorKind::Config, "T_final must be >= tau");
  if (problem.kind == PdeKind::Wave) {
    if (!(problem.coefficient >= 0.0)) fail(ErrorKind::Config, "wave coefficient must be >= 0");
    if (problem.has_analytic()) fail(ErrorKind::Config, "the wave problem has no closed-form solution");
  } else if (!(problem.coefficient > 0.0)) {
    fail(ErrorKind::Config, "heat/poisson coefficient must be > 0");
  }
  if (problem.kind == PdeKind::PoissonSource && problem.solution != Solution::SquarePolynomial) {
    fail(ErrorKind::Config, "poisson_source pairs with the square_polynomial solution");
  }
  if (problem.kind == PdeKind::HeatPlain && problem.solution == Solution::SquarePolynomial) {
    fail(ErrorKind::Config, "square_polynomial solves the poisson_source problem only");
  }
}

Solution default_solution(PdeKind kind, DomainKind domain) {
  switch (kind) {
    case PdeKind::PoissonSource: return Solution::SquarePolynomial;
    case PdeKind::Wave: return Solution::None;
    case PdeKind::HeatPlain: return domain == DomainKind::Butterfly ? Solution::SineDecay : Solution::CosineDecay;
  }
  return Solution::None;
}

double analytic_solution(const ProblemSpec& problem, Point2 p, double t) {
  const double x = p.x;
  const double y = p.y;
  const double c = problem.coefficient;
  switch (problem.solution) {
    case Solution::SquarePolynomial: return x * y * y + y * x * x + 3.0 * t;
    case Solution::CosineDecay: return c * std::exp(-c * t) * (std::cos(x) + std::cos(y));
    case Solution::SineDecay:
      return std::exp(-c * kPi * kPi * t / 4.0) *
             (y * std::sin(kPi * x / 2.0 - kPi / 4.0) + x * std::sin(kPi * y / 2.0 - kPi / 4.0));
    case Solution::None: break;
  }
  fail(ErrorKind::NoAnalyticSolution, "problem '" + to_string(problem.kind) + "' has no closed-form solution");
}

std::vector<double> analytic_field(const ProblemSpec& problem, const NodeSet& nodes, double t) {
  std::vector<double> out;
  out.reserve(nodes.coords.size());
  for (const Point2 p : nodes.coords) out.push_back(analytic_solution(problem, p, t));
  return out;
}

double source_term(const ProblemSpec& problem, Point2 p, double /*t*/) {
  if (problem.kind != PdeKind::PoissonSource) return 0.0;
  return -3.0 - 2.0 * problem.coefficient * (p.x + p.y);
}

FieldSnapshot initial_condition(const ProblemSpec& problem, const NodeSet& nodes) {
  FieldSnapshot snap;
  if (problem.has_analytic()) {
    snap.values = analytic_field(problem, nodes, 0.0);
  } else {
    snap.values.reserve(nodes.coords.size());
    for (const Point2 p : nodes.coords) snap.values.push_back(problem.initial_bump(p));
    // boundary follows the mirror rule from the start
    const std::vector<double> b = boundary_values(problem, nodes, 0.0, snap.values);
    std::copy(b.begin(), b.end(), snap.values.begin() + nodes.n_c);
  }
  return snap;
}

std::vector<double> boundary_values(const ProblemSpec& problem, const NodeSet& nodes, double t,
                                    std::span<const double> field) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(nodes.n_b));
  if (problem.has_analytic()) {
    for (int j = nodes.n_c; j < nodes.size(); ++j) {
      out.push_back(analytic_solution(problem, nodes.coords[static_cast<std::size_t>(j)], t));
    }
    return out;
  }
  if (static_cast<int>(field.size()) != nodes.size()) {
    fail(ErrorKind::MissingHistory, "free boundaries mirror the current field, which was not supplied");
  }
  for (const int i : nearest_interior(nodes)) out.push_back(field[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace rbfmgn
