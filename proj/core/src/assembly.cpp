#include "rbfmgn/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rbfmgn/error.hpp"

namespace rbfmgn {

void SparseRows::push_row(std::span<const int> c, std::span<const double> v) {
  cols.insert(cols.end(), c.begin(), c.end());
  vals.insert(vals.end(), v.begin(), v.end());
  row_ptr.push_back(static_cast<int>(cols.size()));
}

std::vector<double> SparseRows::multiply(std::span<const double> x) const {
  std::vector<double> y(static_cast<std::size_t>(rows()), 0.0);
  for (int r = 0; r < rows(); ++r) {
    double acc = 0.0;
    for (int k = row_ptr[static_cast<std::size_t>(r)]; k < row_ptr[static_cast<std::size_t>(r) + 1]; ++k) {
      acc += vals[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(cols[static_cast<std::size_t>(k)])];
    }
    y[static_cast<std::size_t>(r)] = acc;
  }
  return y;
}

void SparseRows::multiply_transpose_add(std::span<const double> g, std::span<double> y) const {
  for (int r = 0; r < rows(); ++r) {
    const double gr = g[static_cast<std::size_t>(r)];
    for (int k = row_ptr[static_cast<std::size_t>(r)]; k < row_ptr[static_cast<std::size_t>(r) + 1]; ++k) {
      y[static_cast<std::size_t>(cols[static_cast<std::size_t>(k)])] += vals[static_cast<std::size_t>(k)] * gr;
    }
  }
}

double heat_diffusion(const ProblemSpec& problem) {
  return problem.kind == PdeKind::PoissonSource ? -problem.coefficient : problem.coefficient;
}

double stability_number(const ProblemSpec& problem, const StencilSet& stencils, double tau) {
  const double w = max_abs_weight(stencils);
  if (problem.kind == PdeKind::Wave) return tau * tau * problem.coefficient * w;
  return tau * std::abs(heat_diffusion(problem)) * w;
}

namespace {

void check_sizes(const StencilSet& stencils, const NodeSet& nodes) {
  if (stencils.size() != nodes.size()) {
    fail(ErrorKind::Shape, std::to_string(stencils.size()) + " stencils for " + std::to_string(nodes.size()) + " nodes");
  }
}

// Interior row i: scale * w^i on the stencil columns plus `diag` on the centre.
void push_interior_rows(SparseRows& A, const StencilSet& stencils, int n_c, double scale, double diag) {
  std::vector<double> v;
  for (int i = 0; i < n_c; ++i) {
    const Stencil& st = stencils.stencils[static_cast<std::size_t>(i)];
    v.resize(st.weights.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = scale * st.weights[k];
    v[0] += diag;
    A.push_row(st.neighbors, v);
  }
}

}  // namespace

ResidualSystem assemble_heat(const StencilSet& stencils, const ProblemSpec& problem, const NodeSet& nodes,
                             int level) {
  if (problem.kind == PdeKind::Wave) fail(ErrorKind::WrongAssembler, "assemble_heat called on a wave problem");
  check_sizes(stencils, nodes);

  ResidualSystem sys;
  sys.scheme = Scheme::Heat;
  sys.tau = problem.tau;
  sys.next_coeff = 1.0 / problem.tau;
  sys.diffusion = heat_diffusion(problem);
  sys.n_c = nodes.n_c;
  sys.n_b = nodes.n_b;
  sys.level = level;
  sys.time = level * problem.tau;
  sys.stability_number = stability_number(problem, stencils, problem.tau);

  push_interior_rows(sys.A, stencils, nodes.n_c, sys.diffusion, 1.0 / problem.tau);
  const double one = 1.0;
  for (int j = nodes.n_c; j < nodes.size(); ++j) sys.A.push_row(std::span(&j, 1), std::span(&one, 1));

  const std::size_t n = static_cast<std::size_t>(nodes.size());
  sys.H.assign(n, 0.0);
  sys.F.assign(n, 0.0);
  const std::vector<double> g = boundary_values(problem, nodes, sys.time);
  for (int j = 0; j < nodes.n_b; ++j) sys.H[static_cast<std::size_t>(nodes.n_c + j)] = g[static_cast<std::size_t>(j)];
  // u_t + gamma Lap u + f = 0 contributes s = -f to the explicit update.
  if (problem.kind == PdeKind::PoissonSource) {
    for (int i = 0; i < nodes.n_c; ++i) {
      sys.F[static_cast<std::size_t>(i)] = -source_term(problem, nodes.coords[static_cast<std::size_t>(i)], sys.time);
    }
  }
  sys.boundary_next = boundary_values(problem, nodes, sys.time + problem.tau);
  return sys;
}

WaveSystem assemble_wave(const StencilSet& stencils, const ProblemSpec& problem, const NodeSet& nodes, int level,
                         std::span<const double> previous) {
  if (problem.kind != PdeKind::Wave) fail(ErrorKind::WrongAssembler, "assemble_wave called on a non-wave problem");
  check_sizes(stencils, nodes);
  if (static_cast<int>(previous.size()) != nodes.size()) {
    fail(ErrorKind::MissingHistory, "wave step at level " + std::to_string(level) + " needs U^{l-1}");
  }

  const double inv_tau2 = 1.0 / (problem.tau * problem.tau);
  WaveSystem sys;
  sys.scheme = Scheme::Wave;
  sys.tau = problem.tau;
  sys.next_coeff = inv_tau2;
  sys.diffusion = problem.coefficient;
  sys.n_c = nodes.n_c;
  sys.n_b = nodes.n_b;
  sys.level = level;
  sys.time = level * problem.tau;
  sys.stability_number = stability_number(problem, stencils, problem.tau);
  sys.mirror = nearest_interior(nodes);

  push_interior_rows(sys.A, stencils, nodes.n_c, problem.coefficient, 2.0 * inv_tau2);
  for (int j = 0; j < nodes.n_b; ++j) {
    const int cols[2] = {nodes.n_c + j, sys.mirror[static_cast<std::size_t>(j)]};
    const double vals[2] = {1.0, -1.0};
    sys.A.push_row(cols, vals);
  }

  const std::size_t n = static_cast<std::size_t>(nodes.size());
  sys.H.assign(n, 0.0);
  sys.F.assign(n, 0.0);
  for (int i = 0; i < nodes.n_c; ++i) sys.F[static_cast<std::size_t>(i)] = -inv_tau2 * previous[static_cast<std::size_t>(i)];
  return sys;
}

std::vector<double> residual_offset(const ResidualSystem& system, std::span<const double> u_level) {
  if (static_cast<int>(u_level.size()) != system.size()) {
    fail(ErrorKind::Shape, "U^l has " + std::to_string(u_level.size()) + " entries, expected " +
                               std::to_string(system.size()));
  }
  std::vector<double> r = system.A.multiply(u_level);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += system.F[i] - system.H[i];
  return r;
}

std::vector<double> residual(const ResidualSystem& system, std::span<const double> u_level,
                             std::span<const double> next_interior) {
  if (static_cast<int>(next_interior.size()) != system.n_c) {
    fail(ErrorKind::Shape, "prediction has " + std::to_string(next_interior.size()) + " entries, expected n_c=" +
                               std::to_string(system.n_c));
  }
  std::vector<double> r = residual_offset(system, u_level);
  for (int i = 0; i < system.n_c; ++i) r[static_cast<std::size_t>(i)] -= system.next_coeff * next_interior[static_cast<std::size_t>(i)];
  return r;
}

FieldSnapshot direct_step(const ResidualSystem& system, std::span<const double> u_level) {
  const std::vector<double> offset = residual_offset(system, u_level);
  FieldSnapshot next;
  next.level = system.level + 1;
  next.time = (system.level + 1) * system.tau;
  next.values.assign(static_cast<std::size_t>(system.size()), 0.0);
  for (int i = 0; i < system.n_c; ++i) next.values[static_cast<std::size_t>(i)] = offset[static_cast<std::size_t>(i)] / system.next_coeff;
  for (int j = 0; j < system.n_b; ++j) {
    const std::size_t row = static_cast<std::size_t>(system.n_c + j);
    next.values[row] = system.scheme == Scheme::Heat
                           ? system.boundary_next[static_cast<std::size_t>(j)]
                           : next.values[static_cast<std::size_t>(system.mirror[static_cast<std::size_t>(j)])];
  }
  for (const double v : next.values) {
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "non-finite value at level " << next.level << "; stability number tau*|alpha|*max|w| = "
          << system.stability_number;
      fail(ErrorKind::Instability, msg.str());
    }
  }
  return next;
}

int auto_substeps(const ProblemSpec& problem, const StencilSet& stencils) {
  const double stab = stability_number(problem, stencils, problem.tau);
  const double needed = std::ceil(stab / kExplicitStabilityLimit);
  if (needed > kMaxAutoSubsteps) {
    std::ostringstream msg;
    msg << "tau*|alpha|*max|w| = " << stab << " needs " << needed << " explicit sub-steps per level (limit "
        << kMaxAutoSubsteps << ")";
    fail(ErrorKind::Instability, msg.str());
  }
  return std::max(1, static_cast<int>(needed));
}

std::vector<FieldSnapshot> solve_direct(const ProblemSpec& problem, const NodeSet& nodes,
                                        const StencilSet& stencils, int levels, int substeps) {
  if (substeps < 0) fail(ErrorKind::Config, "substeps must be >= 0");
  if (substeps == 0) substeps = auto_substeps(problem, stencils);
  const double stab = stability_number(problem, stencils, problem.tau / substeps);
  if (stab > kExplicitStabilityLimit) {
    std::ostringstream msg;
    msg << "explicit sub-step has tau*|alpha|*max|w| = " << stab << " > " << kExplicitStabilityLimit;
    fail(ErrorKind::Instability, msg.str());
  }
  ProblemSpec fine = problem;
  fine.tau = problem.tau / substeps;

  std::vector<FieldSnapshot> out;
  out.reserve(static_cast<std::size_t>(levels) + 1);
  FieldSnapshot current = initial_condition(problem, nodes);
  out.push_back(current);
  std::vector<double> previous = current.values;  // zero initial velocity

  const int total = levels * substeps;
  for (int s = 0; s < total; ++s) {
    FieldSnapshot next;
    if (problem.kind == PdeKind::Wave) {
      next = direct_step(assemble_wave(stencils, fine, nodes, s, previous), current.values);
      previous = std::move(current.values);
    } else {
      next = direct_step(assemble_heat(stencils, fine, nodes, s), current.values);
    }
    current = std::move(next);
    if ((s + 1) % substeps == 0) {
      FieldSnapshot snap = current;
      snap.level = (s + 1) / substeps;
      snap.time = snap.level * problem.tau;
      out.push_back(std::move(snap));
    }
  }
  return out;
}

}  // namespace rbfmgn
