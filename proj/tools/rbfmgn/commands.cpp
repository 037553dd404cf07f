#include "commands.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <iostream>
#include <sstream>
#include <thread>

#include "rbfmgn/error.hpp"
#include "rbfmgn/experiment.hpp"
#include "rbfmgn/serialize.hpp"

namespace rbfmgn::cli {

namespace {

std::string trajectory_csv(const std::vector<FieldSnapshot>& snaps) {
  std::ostringstream out;
  out << "level,time,node,u\n";
  for (const FieldSnapshot& s : snaps) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      out << s.level << ',' << format_real(s.time) << ',' << i << ',' << format_real(s.values[i]) << '\n';
    }
  }
  return out.str();
}

std::string errors_csv(const std::vector<ErrorRow>& rows) {
  std::ostringstream out;
  write_error_csv(out, rows);
  return out.str();
}

// Model and graph of a checkpoint must match what the config builds.
Checkpoint load_checkpoint(const RunContext& ctx, const Graph& graph) {
  std::string text;
  try {
    text = read_file(ctx.options().checkpoint);
  } catch (const Error&) {
    fail(ErrorKind::Config, "cannot read checkpoint '" + ctx.options().checkpoint + "'");
  }
  Checkpoint cp = checkpoint_from_json(text);
  if (cp.graph_hash != graph_hash(graph)) {
    fail(ErrorKind::Config, "checkpoint graph hash " + cp.graph_hash + " does not match the config's graph " +
                                graph_hash(graph));
  }
  const nn::ModelConfig& a = cp.model.config;
  const nn::ModelConfig& b = ctx.config().model;
  if (a.latent_dim != b.latent_dim || a.hidden != b.hidden || a.hidden_layers != b.hidden_layers ||
      a.blocks != b.blocks || a.node_features != b.node_features || a.edge_features != b.edge_features) {
    fail(ErrorKind::Config, "checkpoint architecture does not match the config's model section");
  }
  return cp;
}

void dump_system(RunContext& ctx, const ProblemSpec& problem, const NodeSet& nodes, const StencilSet& stencils) {
  // u^{-1} = u^0 at the first wave level
  const ResidualSystem sys = problem.kind == PdeKind::Wave
                                 ? assemble_wave(stencils, problem, nodes, 0, initial_condition(problem, nodes).values)
                                 : assemble_heat(stencils, problem, nodes, 0);
  ctx.write("system_level0.json", system_to_json(sys));
}

void dump_system(RunContext& ctx, const Setup& setup) { dump_system(ctx, setup.problem, setup.nodes(), setup.stencils); }

std::string level_name(int level) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "field_level%05d.json", level);
  return buf;
}

}  // namespace

int cmd_mesh(RunContext& ctx) {
  const Graph graph = build_graph(ctx.config());
  ctx.write("graph.json", graph_to_json(graph));
  std::cout << "n=" << graph.nodes.size() << " n_c=" << graph.nodes.n_c << " n_b=" << graph.nodes.n_b
            << " triangles=" << graph.triangles.size() << " edges=" << graph.edges.size() << '\n';
  return 0;
}

int cmd_stencils(RunContext& ctx) {
  const RunConfig& c = ctx.config();
  const Graph graph = build_graph(c);
  const StencilSet stencils = build_stencils(c, graph.nodes);
  ctx.write("graph.json", graph_to_json(graph));
  ctx.write("stencils.json", stencils_to_json(stencils));
  if (ctx.options().dump_system) dump_system(ctx, c.problem, graph.nodes, stencils);
  std::cout << "stencils=" << stencils.size() << " m=" << stencils.m << " kernel=" << to_string(stencils.kernel.kind)
            << " max_abs_weight=" << format_real(max_abs_weight(stencils))
            << " stability_number=" << format_real(stability_number(c.problem, stencils, c.problem.tau)) << '\n';
  return 0;
}

int cmd_solve_direct(RunContext& ctx) {
  const RunConfig& c = ctx.config();
  const Graph graph = build_graph(c);
  const StencilSet stencils = build_stencils(c, graph.nodes);
  const int levels = c.problem.levels_until(c.problem.T_final);
  if (ctx.options().dump_system) dump_system(ctx, c.problem, graph.nodes, stencils);
  const int substeps = c.oracle_substeps > 0 ? c.oracle_substeps : auto_substeps(c.problem, stencils);
  ctx.info("direct solve: " + std::to_string(levels) + " levels x " + std::to_string(substeps) +
           " sub-steps, stability number per sub-step " +
           format_real(stability_number(c.problem, stencils, c.problem.tau / substeps)));
  const std::vector<FieldSnapshot> snaps = solve_direct(c.problem, graph.nodes, stencils, levels, substeps);
  ctx.write("graph.json", graph_to_json(graph));
  ctx.write("trajectory.csv", trajectory_csv(snaps));
  if (c.problem.has_analytic()) {
    Trajectory pred{snaps, Provenance::Oracle};
    const Trajectory truth = reference_trajectory(c.problem, graph.nodes, stencils, levels);
    const std::vector<ErrorRow> rows = error_table(pred, truth);
    ctx.write("errors.csv", errors_csv(rows));
    std::cout << "final_level=" << rows.back().level << " rel_l2=" << format_real(rows.back().rel_l2)
              << " max_abs=" << format_real(rows.back().max_abs) << '\n';
  } else {
    std::cout << "final_level=" << snaps.back().level << '\n';
  }
  return 0;
}

int cmd_train(RunContext& ctx) {
  const RunConfig& c = ctx.config();
  const Setup setup = build_setup(c);
  const std::string hash = graph_hash(setup.graph);
  if (ctx.options().dump_system) dump_system(ctx, setup);

  nn::ModelParams model;
  nn::AdamState adam;
  if (!ctx.options().checkpoint.empty()) {
    Checkpoint cp = load_checkpoint(ctx, setup.graph);
    model = std::move(cp.model);
    adam = std::move(cp.adam);
    adam.config.lr = c.train.adam.lr;
    ctx.info("resuming from step " + std::to_string(adam.t));
  } else {
    model = nn::init_model(c.model, c.seed);
    adam = nn::make_adam(model, c.train.adam);
  }
  const long first_step = adam.t;
  ctx.info("training " + std::to_string(c.train.iterations) + " steps, " + std::to_string(nn::parameter_count(model)) +
           " parameters, " + std::to_string(setup.graph.edges.size()) + " directed edges");

  const CheckpointHook hook = [&](int step, const nn::ModelParams& m, const nn::AdamState& a) {
    char name[40];
    std::snprintf(name, sizeof name, "checkpoint_step%06d.json", step);
    ctx.write(name, checkpoint_to_json({m, a, c.seed, hash}));
  };
  const TrainResult result = train(model, adam, setup, c.train, hook);

  std::ostringstream loss;
  write_loss_csv(loss, result.loss_history, first_step);
  ctx.write("loss.csv", loss.str());
  if (result.diverged) fail(ErrorKind::Divergence, result.message);
  ctx.write("checkpoint.json", checkpoint_to_json({model, adam, c.seed, hash}));
  if (!result.loss_history.empty()) {
    std::cout << "steps=" << result.loss_history.size() << " initial_loss=" << format_real(result.loss_history.front())
              << " final_loss=" << format_real(result.loss_history.back()) << '\n';
  } else {
    std::cout << "steps=0\n";
  }
  return 0;
}

int cmd_eval(RunContext& ctx) {
  const RunConfig& c = ctx.config();
  if (ctx.options().checkpoint.empty()) fail(ErrorKind::Config, "eval needs --checkpoint");
  const Setup setup = build_setup(c);
  const Checkpoint cp = load_checkpoint(ctx, setup.graph);
  if (ctx.options().dump_system) dump_system(ctx, setup);

  const Trajectory reference = evaluation_reference(c, setup);
  const Trajectory pred = evaluation_rollout(c, cp.model, setup, reference);
  const std::vector<ErrorRow> rows = error_table(pred, reference);
  ctx.write("errors.csv", errors_csv(rows));

  for (const double t : c.eval.dump_times) {
    const int level = c.problem.levels_until(t);
    const FieldSnapshot& p = pred.at_level(level);
    const FieldSnapshot& r = reference.at_level(level);
    std::vector<FieldRecord> records;
    for (int i = 0; i < setup.nodes().size(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      records.push_back({i, setup.nodes().coords[k], p.values[k], r.values[k]});
    }
    ctx.write(level_name(level), field_dump_to_json(p.time, level, records));
  }

  const int train_levels = c.problem.levels_until(c.train.T_train);
  double worst_train = 0.0, worst_extra = 0.0;
  for (const ErrorRow& r : rows) {
    const bool in_train = c.train.inverse || r.level <= train_levels;
    (in_train ? worst_train : worst_extra) = std::max(in_train ? worst_train : worst_extra, r.rel_l2);
  }
  std::cout << "levels=" << rows.size() << " max_rel_l2_train=" << format_real(worst_train)
            << " max_rel_l2_extrapolation=" << format_real(worst_extra)
            << " final_rel_l2=" << format_real(rows.back().rel_l2) << '\n';
  return 0;
}

int cmd_sweep(RunContext& ctx) {
  const RunConfig& c = ctx.config();
  std::vector<std::pair<double, std::string>> labels;
  const std::vector<RunConfig> points = sweep_configs(c, &labels);
  const std::string& param = c.eval.sweep->param;
  std::vector<SweepPoint> results(points.size());
  std::vector<std::exception_ptr> errors(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < points.size(); k = next++) {
      try {
        results[k] = run_sweep_point(points[k], param, labels[k].first, labels[k].second);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int jobs = std::min<int>(ctx.options().jobs, static_cast<int>(points.size()));
  ctx.info("sweep over " + param + ": " + std::to_string(points.size()) + " points, " + std::to_string(jobs) + " jobs");
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::ostringstream csv;
  write_sweep_csv(csv, results);
  ctx.write("sweep.csv", csv.str());
  std::cout << csv.str();
  return 0;
}

}  // namespace rbfmgn::cli
