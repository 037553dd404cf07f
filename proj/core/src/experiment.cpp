#include "rbfmgn/experiment.hpp"

#include <limits>
#include <ostream>

#include "rbfmgn/error.hpp"

namespace rbfmgn {

Trajectory fine_reference(const ProblemSpec& problem, const NodeSet& nodes, const StencilSet& stencils, int levels,
                          int base_substeps, int factor) {
  if (factor < 1) fail(ErrorKind::Config, "reference refinement factor must be >= 1");
  const int base = base_substeps > 0 ? base_substeps : auto_substeps(problem, stencils);
  Trajectory t;
  t.provenance = Provenance::Oracle;
  t.snapshots = solve_direct(problem, nodes, stencils, levels, base * factor);
  return t;
}

Trajectory evaluation_reference(const RunConfig& config, const Setup& setup) {
  const int levels = config.problem.levels_until(std::max(config.problem.T_final, config.train.T_eval));
  if (setup.problem.has_analytic()) return reference_trajectory(setup.problem, setup.nodes(), setup.stencils, levels);
  return fine_reference(setup.problem, setup.nodes(), setup.stencils, levels, config.oracle_substeps);
}

TrainedRun train_run(const RunConfig& config) {
  TrainedRun run;
  run.setup = build_setup(config);
  run.model = nn::init_model(config.model, config.seed);
  run.adam = nn::make_adam(run.model, config.train.adam);
  run.result = train(run.model, run.adam, run.setup, config.train);
  return run;
}

Trajectory evaluation_rollout(const RunConfig& config, const nn::ModelParams& model, const Setup& setup,
                              const Trajectory& reference) {
  const ProblemSpec& p = setup.problem;
  if (config.train.inverse) {
    const int top = p.levels_until(config.train.T_train);
    const FieldSnapshot start[1] = {reference.at_level(top)};
    return rollout(model, p, setup.graph, top, 0, start, true);
  }
  const int levels = p.levels_until(std::max(p.T_final, config.train.T_eval));
  const FieldSnapshot& u0 = reference.at_level(0);
  if (p.kind == PdeKind::Wave) {
    const FieldSnapshot start[2] = {u0, u0};  // zero initial velocity
    return rollout(model, p, setup.graph, 0, levels, start);
  }
  const FieldSnapshot start[1] = {u0};
  return rollout(model, p, setup.graph, 0, levels, start);
}

std::vector<RunConfig> sweep_configs(const RunConfig& base, std::vector<std::pair<double, std::string>>* labels) {
  if (!base.eval.sweep) fail(ErrorKind::Config, "eval.sweep: required for a sweep");
  const SweepConfig& s = *base.eval.sweep;
  std::vector<RunConfig> out;
  for (const double v : s.values) {
    const RunConfig point = with_sweep_value(base, s.param, v);
    if (s.kernels.empty()) {
      out.push_back(point);
      if (labels) labels->emplace_back(v, to_string(point.rbf.kernel.kind));
      continue;
    }
    for (const KernelKind k : s.kernels) {
      RunConfig c = point;
      c.rbf.kernel.kind = k;
      out.push_back(c);
      if (labels) labels->emplace_back(v, to_string(k));
    }
  }
  return out;
}

SweepPoint run_sweep_point(const RunConfig& point, const std::string& param, double value, const std::string& kernel) {
  SweepPoint r;
  r.param = param;
  r.value = value;
  r.kernel = kernel.empty() ? to_string(point.rbf.kernel.kind) : kernel;
  try {
    score_sweep_point(point, r);
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::StencilConditioning:
      case ErrorKind::Instability:
      case ErrorKind::Divergence:
      case ErrorKind::DivisionByZero:
        r.status = std::string(to_string(e.kind()));
        if (r.status.ends_with(" error")) r.status.resize(r.status.size() - 6);
        r.rel_l2 = r.max_abs = r.final_loss = std::numeric_limits<double>::quiet_NaN();
        break;
      default: throw;
    }
  }
  return r;
}

void score_sweep_point(const RunConfig& point, SweepPoint& r) {
  const TrainedRun run = train_run(point);
  if (run.result.diverged) fail(ErrorKind::Divergence, run.result.message);
  const Trajectory reference = evaluation_reference(point, run.setup);
  const Trajectory pred = evaluation_rollout(point, run.model, run.setup, reference);
  const FieldSnapshot& last = pred.snapshots.back();
  const FieldSnapshot& truth = reference.at_level(last.level);
  r.rel_l2 = relative_l2(last.values, truth.values);
  r.max_abs = max_abs_error(last.values, truth.values);
  r.final_loss = run.result.loss_history.empty() ? 0.0 : run.result.loss_history.back();
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
  out << "param,value,kernel,rel_l2,max_abs,final_loss,status\n";
  for (const SweepPoint& p : points) {
    out << p.param << ',' << format_real(p.value) << ',' << p.kernel << ',' << format_real(p.rel_l2) << ','
        << format_real(p.max_abs) << ',' << format_real(p.final_loss) << ',' << p.status << '\n';
  }
}

}  // namespace rbfmgn
