#include "rbfmgn/training.hpp"

#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "rbfmgn/error.hpp"

namespace rbfmgn {

using nn::Tape;
using nn::Tensor2;

namespace {

bool is_multiple(double t, double tau) {
  const double k = std::round(t / tau);
  return std::abs(k * tau - t) <= 1e-9 * std::max(1.0, std::abs(t));
}

Tensor2 column(std::span<const double> v) {
  return Eigen::Map<const Tensor2>(v.data(), static_cast<Eigen::Index>(v.size()), 1);
}

void require_finite(std::span<const double> v, int level) {
  for (const double x : v) {
    if (!std::isfinite(x)) fail(ErrorKind::Divergence, "rollout produced a non-finite value at level " + std::to_string(level));
  }
}

// Training reallocates the same large temporaries every level; keeping them
// out of mmap avoids a page-fault storm per allocation.
void keep_heap_warm() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    mallopt(M_TOP_PAD, 64 << 20);
  });
#endif
}

}  // namespace

void validate(const TrainConfig& config, const ProblemSpec& problem) {
  if (config.iterations < 0) fail(ErrorKind::Config, "train.iterations must be >= 0");
  if (config.batch_size < 1) fail(ErrorKind::Config, "train.batch_size must be >= 1");
  if (!(config.T_train >= problem.tau)) fail(ErrorKind::Config, "train.T_train must be >= tau");
  if (!(config.T_eval >= config.T_train)) fail(ErrorKind::Config, "train.T_eval must be >= train.T_train");
  if (!is_multiple(config.T_train, problem.tau) || !is_multiple(config.T_eval, problem.tau)) {
    fail(ErrorKind::Config, "train horizons must be multiples of tau");
  }
  if (config.checkpoint_every < 0) fail(ErrorKind::Config, "train.checkpoint_every must be >= 0");
  if (config.inverse && problem.kind == PdeKind::Wave) fail(ErrorKind::Config, "inverse training needs a heat problem");
  if (!(config.adam.lr > 0.0)) fail(ErrorKind::Config, "train.lr must be > 0");
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Predicted: return "predicted";
    case Provenance::Oracle: return "oracle";
    case Provenance::Analytic: return "analytic";
  }
  return "unknown";
}

const FieldSnapshot& Trajectory::at_level(int level) const {
  for (const FieldSnapshot& s : snapshots) {
    if (s.level == level) return s;
  }
  fail(ErrorKind::State, "trajectory has no snapshot at level " + std::to_string(level));
}

Trajectory reference_trajectory(const ProblemSpec& problem, const NodeSet& nodes, const StencilSet& stencils,
                                int levels) {
  Trajectory t;
  if (problem.has_analytic()) {
    t.provenance = Provenance::Analytic;
    for (int l = 0; l <= levels; ++l) {
      const double time = l * problem.tau;
      t.snapshots.push_back({analytic_field(problem, nodes, time), time, l});
    }
  } else {
    t.provenance = Provenance::Oracle;
    t.snapshots = solve_direct(problem, nodes, stencils, levels);
  }
  return t;
}

Setup make_setup(const ProblemSpec& problem, Graph graph, StencilSet stencils, int reference_levels) {
  Setup s;
  s.problem = problem;
  s.graph = std::move(graph);
  s.stencils = std::move(stencils);
  s.topology = nn::make_topology(s.graph);
  s.reference = reference_trajectory(s.problem, s.graph.nodes, s.stencils, reference_levels);
  return s;
}

int node_feature_count(const ProblemSpec& problem) { return problem.kind == PdeKind::Wave ? 4 : 3; }

Tensor2 node_features(const NodeSet& nodes, std::span<const double> u, std::span<const double> u_prev) {
  const int n = nodes.size();
  if (static_cast<int>(u.size()) != n || (!u_prev.empty() && static_cast<int>(u_prev.size()) != n)) {
    fail(ErrorKind::Shape, "node feature fields do not match the node count");
  }
  const int extra = u_prev.empty() ? 0 : 1;
  Tensor2 f(n, 3 + extra);
  for (int i = 0; i < n; ++i) {
    f(i, 0) = u[static_cast<std::size_t>(i)];
    if (extra) f(i, 1) = u_prev[static_cast<std::size_t>(i)];
    f(i, 1 + extra) = nodes.is_boundary(i) ? 0.0 : 1.0;
    f(i, 2 + extra) = nodes.is_boundary(i) ? 1.0 : 0.0;
  }
  return f;
}

nn::ModelConfig model_config_for(const ProblemSpec& problem, int latent_dim, int hidden, int blocks) {
  nn::ModelConfig c;
  c.latent_dim = latent_dim;
  c.hidden = hidden;
  c.blocks = blocks;
  c.node_features = node_feature_count(problem);
  c.edge_features = 3;
  return c;
}

LossLevel make_loss_level(const Setup& setup, int level, bool inverse) {
  const Trajectory& ref = setup.reference;
  LossLevel out;
  out.inverse = inverse;
  if (setup.problem.kind == PdeKind::Wave) {
    if (inverse) fail(ErrorKind::Config, "inverse training needs a heat problem");
    out.previous = ref.at_level(level == 0 ? 0 : level - 1).values;  // u^{-1} = u^0
    out.system = assemble_wave(setup.stencils, setup.problem, setup.nodes(), level, out.previous);
    out.input = ref.at_level(level).values;
  } else {
    out.system = assemble_heat(setup.stencils, setup.problem, setup.nodes(), level);
    out.input = ref.at_level(inverse ? level + 1 : level).values;
  }
  return out;
}

Tape::Var record_residual_norm(Tape& tape, Tape::Var prediction, const LossLevel& level, const NodeSet& nodes) {
  const ResidualSystem& sys = level.system;
  const int n = sys.size();
  if (tape.value(prediction).rows() != n || tape.value(prediction).cols() != 1 || nodes.size() != n) {
    fail(ErrorKind::Shape, "prediction does not match the system size");
  }
  if (!level.inverse) {
    // R = (A U^l - H + F) - next_coeff [U^{l+1}_int; 0]
    const std::vector<double> offset = residual_offset(sys, level.input);
    const Tape::Var interior = tape.slice_rows(prediction, 0, sys.n_c);
    const Tape::Var r = tape.affine(interior, -sys.next_coeff, column(std::span(offset).first(sys.n_c)));
    double boundary_sq = 0.0;
    for (int j = sys.n_c; j < n; ++j) boundary_sq += offset[static_cast<std::size_t>(j)] * offset[static_cast<std::size_t>(j)];
    return tape.l2_norm(r, boundary_sq);
  }
  // R = A [U^l_int; g(t^l)] - next_coeff [U^{l+1}_int; 0] - H + F
  if (static_cast<int>(level.input.size()) != n) fail(ErrorKind::Shape, "inverse input does not match the system size");
  std::vector<int> interior_index(static_cast<std::size_t>(sys.n_c));
  for (int i = 0; i < sys.n_c; ++i) interior_index[static_cast<std::size_t>(i)] = i;
  Tensor2 base = Tensor2::Zero(n, 1);
  for (int j = sys.n_c; j < n; ++j) base(j, 0) = sys.H[static_cast<std::size_t>(j)];
  const Tape::Var full = tape.embed_rows(tape.slice_rows(prediction, 0, sys.n_c), interior_index, base);
  Tensor2 shift(n, 1);
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    shift(i, 0) = sys.F[k] - sys.H[k] - (i < sys.n_c ? sys.next_coeff * level.input[k] : 0.0);
  }
  return tape.l2_norm(tape.affine(tape.spmv(sys.A, full), 1.0, shift));
}

Tape::Var record_level_loss(const nn::BoundModel& bound, const nn::GraphTopology& topology, const NodeSet& nodes,
                            const LossLevel& level) {
  Tape& tape = bound.tape();
  const Tape::Var nf = tape.constant(node_features(nodes, level.input, level.previous));
  const Tape::Var ef = tape.constant(topology.edge_features);
  const Tape::Var u = tape.constant(column(level.input));
  const Tape::Var pred = nn::decode(bound, nn::process(bound, nn::encode(bound, nf, ef), topology), u);
  return record_residual_norm(tape, pred, level, nodes);
}

double pde_loss(const nn::ModelParams& model, const nn::GraphTopology& topology, const NodeSet& nodes,
                std::span<const LossLevel> levels, nn::ModelParams* grads) {
  if (levels.empty()) fail(ErrorKind::Shape, "pde_loss needs at least one level");
  const double scale = 1.0 / static_cast<double>(levels.size());
  double total = 0.0;
  for (const LossLevel& level : levels) {
    Tape tape;
    const nn::BoundModel bound(tape, model, grads);
    const Tape::Var loss = record_level_loss(bound, topology, nodes, level);
    const double value = tape.scalar(loss);
    if (!std::isfinite(value)) {
      fail(ErrorKind::Divergence, "non-finite loss at level " + std::to_string(level.system.level));
    }
    if (grads != nullptr) tape.backward(loss, scale);
    total += value;
  }
  return total * scale;
}

double injected_loss(std::span<const LossLevel> levels, std::span<const std::vector<double>> predictions,
                     const NodeSet& nodes) {
  if (levels.empty() || predictions.size() != levels.size()) {
    fail(ErrorKind::Shape, "injected_loss needs one prediction per level");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    Tape tape;
    const Tape::Var pred = tape.constant(column(predictions[k]));
    total += tape.scalar(record_residual_norm(tape, pred, levels[k], nodes));
  }
  return total / static_cast<double>(levels.size());
}

int batch_start(int step, int batch_size, int horizon_levels) {
  if (horizon_levels < 1) fail(ErrorKind::Config, "training horizon holds no levels");
  return static_cast<int>((static_cast<long long>(step) * batch_size) % horizon_levels);
}

TrainResult train(nn::ModelParams& model, nn::AdamState& adam, const Setup& setup, const TrainConfig& config,
                  const CheckpointHook& hook) {
  validate(config, setup.problem);
  keep_heap_warm();
  const int horizon = setup.problem.levels_until(config.T_train);
  if (static_cast<int>(setup.reference.snapshots.size()) < horizon + 1) {
    fail(ErrorKind::State, "reference trajectory is shorter than the training horizon");
  }
  TrainResult result;
  result.loss_history.reserve(static_cast<std::size_t>(config.iterations));
  double initial = 0.0;
  for (int it = 0; it < config.iterations; ++it) {
    const int start = batch_start(static_cast<int>(adam.t), config.batch_size, horizon);
    std::vector<LossLevel> batch;
    batch.reserve(static_cast<std::size_t>(config.batch_size));
    for (int k = 0; k < config.batch_size; ++k) batch.push_back(make_loss_level(setup, (start + k) % horizon, config.inverse));

    nn::ModelParams grads = nn::zeros_like(model);
    double loss = 0.0;
    try {
      loss = pde_loss(model, setup.topology, setup.nodes(), batch, &grads);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Divergence) throw;
      result.diverged = true;
      result.message = std::string(e.what()) + " at step " + std::to_string(adam.t);
      return result;
    }
    if (it == 0) initial = loss;
    result.loss_history.push_back(loss);
    if (loss > config.divergence_factor * initial) {
      std::ostringstream msg;
      msg << "loss " << loss << " exceeds " << config.divergence_factor << " x initial loss " << initial << " at step "
          << adam.t;
      result.diverged = true;
      result.message = msg.str();
      return result;
    }
    nn::adam_step(model, grads, adam);
    if (hook && config.checkpoint_every > 0 && adam.t % config.checkpoint_every == 0) {
      hook(static_cast<int>(adam.t), model, adam);
    }
  }
  return result;
}

Trajectory rollout(const nn::ModelParams& model, const ProblemSpec& problem, const Graph& graph, int from_level,
                   int to_level, std::span<const FieldSnapshot> start, bool inverse) {
  const NodeSet& nodes = graph.nodes;
  const bool wave = problem.kind == PdeKind::Wave;
  if (inverse && wave) fail(ErrorKind::Config, "inverse rollout needs a heat problem");
  if (start.empty()) fail(ErrorKind::MissingHistory, "rollout needs a start snapshot");
  if (wave && start.size() < 2) fail(ErrorKind::MissingHistory, "wave rollout needs [U^{l-1}, U^l]");
  if (inverse ? to_level > from_level : to_level < from_level) fail(ErrorKind::Config, "rollout levels out of order");
  for (const FieldSnapshot& s : start) {
    if (s.values.size() != nodes.coords.size()) fail(ErrorKind::Shape, "start snapshot does not match the node count");
  }

  const nn::GraphTopology topo = nn::make_topology(graph);
  Trajectory out;
  out.provenance = Provenance::Predicted;
  FieldSnapshot current = start.back();
  current.level = from_level;
  current.time = from_level * problem.tau;
  std::vector<double> previous = wave ? start[start.size() - 2].values : std::vector<double>{};
  out.snapshots.push_back(current);

  const int step = inverse ? -1 : 1;
  for (int l = from_level; l != to_level; l += step) {
    const int next_level = l + step;
    const double t = next_level * problem.tau;
    std::vector<double> pred = nn::predict(model, topo, node_features(nodes, current.values, previous), current.values);
    require_finite(pred, next_level);
    if (wave) {
      const std::vector<double> g = boundary_values(problem, nodes, t, pred);
      for (int j = 0; j < nodes.n_b; ++j) pred[static_cast<std::size_t>(nodes.n_c + j)] = g[static_cast<std::size_t>(j)];
      previous = current.values;
    } else {
      const std::vector<double> g = boundary_values(problem, nodes, t);
      for (int j = 0; j < nodes.n_b; ++j) pred[static_cast<std::size_t>(nodes.n_c + j)] = g[static_cast<std::size_t>(j)];
    }
    current = FieldSnapshot{std::move(pred), t, next_level};
    out.snapshots.push_back(current);
  }
  return out;
}

double relative_l2(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) fail(ErrorKind::Shape, "relative_l2: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    num += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    den += truth[i] * truth[i];
  }
  if (den == 0.0) {
    fail(ErrorKind::DivisionByZero, "relative_l2: truth has zero norm (absolute error " + format_real(std::sqrt(num)) + ")");
  }
  return std::sqrt(num) / std::sqrt(den);
}

double max_abs_error(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) fail(ErrorKind::Shape, "max_abs_error: length mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) m = std::max(m, std::abs(pred[i] - truth[i]));
  return m;
}

std::vector<ErrorRow> error_table(const Trajectory& pred, const Trajectory& truth) {
  std::vector<ErrorRow> rows;
  for (const FieldSnapshot& s : pred.snapshots) {
    const FieldSnapshot& t = truth.at_level(s.level);
    rows.push_back({s.level, s.time, relative_l2(s.values, t.values), max_abs_error(s.values, t.values)});
  }
  return rows;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_loss_csv(std::ostream& out, std::span<const double> history, long first_step) {
  out << "step,loss\n";
  for (std::size_t k = 0; k < history.size(); ++k) {
    out << first_step + static_cast<long>(k) << ',' << format_real(history[k]) << '\n';
  }
}

void write_error_csv(std::ostream& out, std::span<const ErrorRow> rows) {
  out << "level,time,rel_l2,max_abs\n";
  for (const ErrorRow& r : rows) {
    out << r.level << ',' << format_real(r.time) << ',' << format_real(r.rel_l2) << ',' << format_real(r.max_abs) << '\n';
  }
}

}  // namespace rbfmgn
