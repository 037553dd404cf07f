#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rbfmgn/assembly.hpp"
#include "rbfmgn/error.hpp"
#include "rbfmgn/training.hpp"

using namespace rbfmgn;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an rbfmgn::Error");
  return ErrorKind::Io;
}

struct Case {
  ProblemSpec problem;
  NodeSet nodes;
  StencilSet stencils;
};

Case make_case(ProblemSpec p, int n_c, int n_b, int m) {
  Case c{std::move(p), {}, {}};
  c.nodes = sample_nodes(c.problem.domain, n_c, n_b, 1);
  c.stencils = build_stencil_set(c.nodes, m, {KernelKind::Polyharmonic3, 1.0}, 2);
  return c;
}

std::vector<double> interior(const std::vector<double>& u, int n_c) { return {u.begin(), u.begin() + n_c}; }

double inf_norm(std::span<const double> v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("constant fields are preserved") {
  Case c = make_case(ProblemSpec::amoeba_heat(1.7), 60, 24, 15);
  const std::vector<double> u(static_cast<std::size_t>(c.nodes.size()), 2.5);
  const ResidualSystem sys = assemble_heat(c.stencils, c.problem, c.nodes, 0);
  const std::vector<double> au = sys.A.multiply(u);
  for (int i = 0; i < sys.n_c; ++i) CHECK(au[static_cast<std::size_t>(i)] == doctest::Approx(2.5 / sys.tau).epsilon(1e-10));
  const FieldSnapshot next = direct_step(sys, u);
  for (int i = 0; i < sys.n_c; ++i) CHECK(next.values[static_cast<std::size_t>(i)] == doctest::Approx(2.5).epsilon(1e-10));
}

TEST_CASE("single interior node with a five-point stencil") {
  ProblemSpec p = ProblemSpec::amoeba_heat(1.0);
  p.tau = 0.01;
  const NodeSet s = make_node_set({{1, 1}}, {{1.1, 1}, {0.9, 1}, {1, 1.1}, {1, 0.9}});
  const StencilSet st = build_stencil_set(s, 5, {KernelKind::Polyharmonic3, 1.0}, 2);
  const ResidualSystem sys = assemble_heat(st, p, s, 0);
  REQUIRE(sys.n_c == 1);
  for (int k = sys.A.row_ptr[0]; k < sys.A.row_ptr[1]; ++k) {
    const double expected = sys.A.cols[static_cast<std::size_t>(k)] == 0 ? -300.0 : 100.0;
    CHECK(sys.A.vals[static_cast<std::size_t>(k)] == doctest::Approx(expected).epsilon(1e-9));
  }
  CHECK(sys.A.row_ptr[1] - sys.A.row_ptr[0] == 5);
}

TEST_CASE("boundary rows are identity rows with H = g") {
  Case c = make_case(ProblemSpec::square_poisson(), 40, 16, 10);
  const ResidualSystem sys = assemble_heat(c.stencils, c.problem, c.nodes, 3);
  const std::vector<double> g = boundary_values(c.problem, c.nodes, 3 * c.problem.tau);
  for (int i = 0; i < sys.n_c; ++i) {
    CHECK(sys.H[static_cast<std::size_t>(i)] == 0.0);
    const auto& nb = c.stencils.stencils[static_cast<std::size_t>(i)].neighbors;
    for (int k = sys.A.row_ptr[i]; k < sys.A.row_ptr[i + 1]; ++k)
      CHECK(std::find(nb.begin(), nb.end(), sys.A.cols[static_cast<std::size_t>(k)]) != nb.end());
  }
  for (int j = sys.n_c; j < sys.size(); ++j) {
    REQUIRE(sys.A.row_ptr[j + 1] - sys.A.row_ptr[j] == 1);
    CHECK(sys.A.cols[static_cast<std::size_t>(sys.A.row_ptr[j])] == j);
    CHECK(sys.A.vals[static_cast<std::size_t>(sys.A.row_ptr[j])] == 1.0);
    CHECK(sys.H[static_cast<std::size_t>(j)] == g[static_cast<std::size_t>(j - sys.n_c)]);
  }
}

TEST_CASE("Poisson source enters F on interior rows") {
  Case c = make_case(ProblemSpec::square_poisson(1.0), 40, 16, 10);
  const ResidualSystem sys = assemble_heat(c.stencils, c.problem, c.nodes, 2);
  for (int i = 0; i < sys.n_c; ++i) {
    const Point2 p = c.nodes.coords[static_cast<std::size_t>(i)];
    CHECK(std::abs(sys.F[static_cast<std::size_t>(i)]) == doctest::Approx(std::abs(source_term(c.problem, p, sys.time))));
  }
  CHECK(kind_of([&] { assemble_wave(c.stencils, c.problem, c.nodes, 0, c.nodes.coords.empty() ? std::vector<double>{} : std::vector<double>(static_cast<std::size_t>(c.nodes.size()), 0.0)); }) == ErrorKind::WrongAssembler);
  Case w = make_case(ProblemSpec::lshape_wave(), 40, 16, 10);
  CHECK(kind_of([&] { assemble_heat(w.stencils, w.problem, w.nodes, 0); }) == ErrorKind::WrongAssembler);
  CHECK(kind_of([&] { assemble_wave(w.stencils, w.problem, w.nodes, 1, {}); }) == ErrorKind::MissingHistory);
}

TEST_CASE("residual with exact fields is at truncation level") {
  Case c = make_case(ProblemSpec::square_poisson(), 127, 40, 10);
  for (int l : {0, 10, 50}) {
    const ResidualSystem sys = assemble_heat(c.stencils, c.problem, c.nodes, l);
    const auto u = analytic_field(c.problem, c.nodes, l * c.problem.tau);
    const auto next = analytic_field(c.problem, c.nodes, (l + 1) * c.problem.tau);
    const auto r = residual(sys, u, interior(next, sys.n_c));
    double sq = 0;
    for (double v : r) sq += v * v;
    CHECK(std::sqrt(sq) / std::sqrt(static_cast<double>(r.size())) <= 5e-2);
    for (int j = sys.n_c; j < sys.size(); ++j) CHECK(std::abs(r[static_cast<std::size_t>(j)]) < 1e-14);
  }
}

TEST_CASE("direct step is the root of the residual") {
  std::vector<Case> cases;
  cases.push_back(make_case(ProblemSpec::square_poisson(), 60, 24, 10));
  cases.push_back(make_case(ProblemSpec::amoeba_heat(1.0), 80, 30, 15));
  cases.push_back(make_case(ProblemSpec::butterfly_heat(1.0), 80, 30, 15));
  for (const Case& c : cases) {
    for (int l : {0, 7}) {
      const ResidualSystem sys = assemble_heat(c.stencils, c.problem, c.nodes, l);
      const auto u = analytic_field(c.problem, c.nodes, l * c.problem.tau);
      const FieldSnapshot next = direct_step(sys, u);
      CHECK(next.level == l + 1);
      const auto r = residual(sys, u, interior(next.values, sys.n_c));
      CHECK(inf_norm(r) <= 1e-10 * std::max(1.0, inf_norm(sys.A.multiply(u))));
    }
  }
  Case w = make_case(ProblemSpec::lshape_wave(1e-3), 80, 30, 15);
  std::vector<double> prev = initial_condition(w.problem, w.nodes).values, u = prev;
  for (double& x : u) x *= 1.01;
  const auto near = nearest_interior(w.nodes);
  for (int b = 0; b < w.nodes.n_b; ++b) u[static_cast<std::size_t>(w.nodes.n_c + b)] = u[static_cast<std::size_t>(near[static_cast<std::size_t>(b)])];
  const WaveSystem sys = assemble_wave(w.stencils, w.problem, w.nodes, 1, prev);
  const FieldSnapshot next = direct_step(sys, u);
  CHECK(inf_norm(residual(sys, u, interior(next.values, sys.n_c))) <= 1e-10 * inf_norm(sys.A.multiply(u)));
}

TEST_CASE("residual is affine in the prediction with slope -next_coeff") {
  Case c = make_case(ProblemSpec::amoeba_heat(1.0), 60, 24, 15);
  const ResidualSystem sys = assemble_heat(c.stencils, c.problem, c.nodes, 4);
  const auto u = analytic_field(c.problem, c.nodes, 0.04);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<double> a(static_cast<std::size_t>(sys.n_c)), b(a.size()), mix(a.size());
  for (auto& x : a) x = g(rng);
  for (auto& x : b) x = g(rng);
  const double alpha = 0.7, beta = -1.9;
  for (std::size_t i = 0; i < a.size(); ++i) mix[i] = alpha * a[i] + beta * b[i];
  const auto ra = residual(sys, u, a), rb = residual(sys, u, b), rm = residual(sys, u, mix);
  const auto off = residual_offset(sys, u);
  for (std::size_t i = 0; i < rm.size(); ++i) {
    CHECK(rm[i] == doctest::Approx(alpha * ra[i] + beta * rb[i] - (alpha + beta - 1) * off[i]).epsilon(1e-9).scale(1e3));
  }
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(ra[i] == doctest::Approx(off[i] - sys.next_coeff * a[i]).epsilon(1e-12).scale(1e3));
  CHECK(sys.next_coeff == doctest::Approx(1.0 / c.problem.tau));
  CHECK(kind_of([&] { residual(sys, u, std::vector<double>(3, 0.0)); }) == ErrorKind::Shape);
}

TEST_CASE("wave scheme") {
  Case w = make_case(ProblemSpec::lshape_wave(0.0), 60, 24, 15);
  const auto u0 = initial_condition(w.problem, w.nodes).values;
  std::vector<double> u1 = u0;
  for (double& x : u1) x = 0.9 * x + 0.05;
  const FieldSnapshot n0 = direct_step(assemble_wave(w.stencils, w.problem, w.nodes, 1, u0), u1);
  for (int i = 0; i < w.nodes.n_c; ++i) {
    const auto k = static_cast<std::size_t>(i);
    CHECK(n0.values[k] == doctest::Approx(2 * u1[k] - u0[k]).epsilon(1e-12));
  }
  const std::vector<double> flat(u0.size(), 0.75);
  w.problem.coefficient = 0.3;
  const FieldSnapshot nc = direct_step(assemble_wave(w.stencils, w.problem, w.nodes, 1, flat), flat);
  for (double v : nc.values) CHECK(v == doctest::Approx(0.75).epsilon(1e-10));
  w.problem.coefficient = 1e-6;
  w.problem.tau = 0.1;
  const WaveSystem sys = assemble_wave(w.stencils, w.problem, w.nodes, 0, u0);
  const FieldSnapshot n1 = direct_step(sys, u0);
  const double bound = w.problem.tau * w.problem.tau * w.problem.coefficient * inf_norm(apply_operator(w.stencils, u0));
  for (int i = 0; i < w.nodes.n_c; ++i) CHECK(std::abs(n1.values[static_cast<std::size_t>(i)] - u0[static_cast<std::size_t>(i)]) <= bound * (1 + 1e-12));
  const auto near = nearest_interior(w.nodes);
  for (int b = 0; b < w.nodes.n_b; ++b)
    CHECK(n1.values[static_cast<std::size_t>(w.nodes.n_c + b)] == n1.values[static_cast<std::size_t>(near[static_cast<std::size_t>(b)])]);
}

TEST_CASE("zero data stays zero") {
  Case c = make_case(ProblemSpec::lshape_wave(1.0), 40, 16, 10);
  const std::vector<double> z(static_cast<std::size_t>(c.nodes.size()), 0.0);
  for (double v : direct_step(assemble_wave(c.stencils, c.problem, c.nodes, 0, z), z).values) CHECK(v == 0.0);
}

TEST_CASE("one Poisson step from the exact initial condition") {
  Case c = make_case(ProblemSpec::square_poisson(), 127, 40, 10);
  const auto u0 = initial_condition(c.problem, c.nodes).values;
  const FieldSnapshot u1 = direct_step(assemble_heat(c.stencils, c.problem, c.nodes, 0), u0);
  CHECK(relative_l2(u1.values, analytic_field(c.problem, c.nodes, c.problem.tau)) <= 1e-3);
}

TEST_CASE("amoeba oracle rollout to T = 1") {
  Case c = make_case(ProblemSpec::amoeba_heat(1.0), 195, 64, 15);
  const auto traj = solve_direct(c.problem, c.nodes, c.stencils, 100);
  REQUIRE(traj.size() == 101);
  CHECK(relative_l2(traj.back().values, analytic_field(c.problem, c.nodes, 1.0)) <= 1e-2);
}

TEST_CASE("square Poisson oracle rollout stays finite to T = 1") {
  Case c = make_case(ProblemSpec::square_poisson(), 127, 40, 10);
  bool finite = true;
  try {
    const auto traj = solve_direct(c.problem, c.nodes, c.stencils, 100);
    for (double v : traj.back().values) finite = finite && std::isfinite(v);
  } catch (const Error& e) {
    MESSAGE(std::string(e.what()));
    finite = false;
  }
  CHECK(finite);
}

TEST_CASE("heat steady state is a fixed point of the step") {
  ProblemSpec p = ProblemSpec::butterfly_heat(1.0);
  Case c = make_case(p, 50, 20, 15);
  // g and f time-independent: a fixed Dirichlet profile with no source.
  ResidualSystem sys = assemble_heat(c.stencils, c.problem, c.nodes, 0);
  const int substeps = auto_substeps(c.problem, c.stencils);
  sys.tau = c.problem.tau / substeps;
  ResidualSystem fine = sys;
  {
    ProblemSpec q = c.problem;
    q.tau = sys.tau;
    fine = assemble_heat(c.stencils, q, c.nodes, 0);
    fine.boundary_next = fine.H;
    for (int j = 0; j < fine.n_b; ++j) fine.boundary_next[static_cast<std::size_t>(j)] = fine.H[static_cast<std::size_t>(fine.n_c + j)];
  }
  std::vector<double> u(static_cast<std::size_t>(c.nodes.size()), 0.0);
  for (int j = 0; j < fine.n_b; ++j) u[static_cast<std::size_t>(fine.n_c + j)] = fine.H[static_cast<std::size_t>(fine.n_c + j)];
  double change = 1;
  for (int it = 0; it < 2000000 && change >= 1e-12; ++it) {
    const FieldSnapshot next = direct_step(fine, u);
    change = 0;
    for (std::size_t i = 0; i < u.size(); ++i) change = std::max(change, std::abs(next.values[i] - u[i]));
    u = next.values;
  }
  REQUIRE(change < 1e-12);
  const auto au = fine.A.multiply(u);
  for (int i = 0; i < fine.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double rhs = (i < fine.n_c ? fine.next_coeff * u[k] : 0.0) + fine.H[k] - fine.F[k];
    CHECK(au[k] == doctest::Approx(rhs).epsilon(1e-8).scale(fine.next_coeff));
  }
}

TEST_CASE("instability diagnostics") {
  Case c = make_case(ProblemSpec::amoeba_heat(1.0), 195 * 4, 64 * 4, 15);
  c.problem.tau = 0.5;
  CHECK(kind_of([&] { solve_direct(c.problem, c.nodes, c.stencils, 2); }) == ErrorKind::Instability);
  c.problem.tau = 0.01;
  CHECK(kind_of([&] { solve_direct(c.problem, c.nodes, c.stencils, 2, 1); }) == ErrorKind::Instability);
  CHECK(stability_number(c.problem, c.stencils, 0.01) == doctest::Approx(0.01 * max_abs_weight(c.stencils)));
}
