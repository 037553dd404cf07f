#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rbfmgn/assembly.hpp"
#include "rbfmgn/geometry.hpp"
#include "rbfmgn/nn/adam.hpp"
#include "rbfmgn/nn/model.hpp"
#include "rbfmgn/problems.hpp"
#include "rbfmgn/rbf_stencil.hpp"

namespace rbfmgn {

struct TrainConfig {
  int iterations = 200;
  /// Consecutive time levels per loss evaluation.
  int batch_size = 5;
  double T_train = 1.0;
  double T_eval = 2.0;
  std::uint64_t seed = 0;
  /// 0 disables periodic checkpoints.
  int checkpoint_every = 0;
  /// Learn the backward map U^{l+1} -> U^l instead of the forward one.
  bool inverse = false;
  nn::AdamConfig adam;
  /// Abort when the loss exceeds this multiple of the first loss.
  double divergence_factor = 1e6;
};

/// Throws Config unless iterations >= 0, batch_size >= 1 and the horizons are
/// ordered multiples of tau.
void validate(const TrainConfig& config, const ProblemSpec& problem);

enum class Provenance { Predicted, Oracle, Analytic };
std::string to_string(Provenance p);

struct Trajectory {
  std::vector<FieldSnapshot> snapshots;
  Provenance provenance = Provenance::Predicted;

  const FieldSnapshot& at_level(int level) const;
};

/// Everything the trainer needs about one experiment.
struct Setup {
  ProblemSpec problem;
  Graph graph;
  StencilSet stencils;
  nn::GraphTopology topology;
  /// Teacher-forcing truth covering at least the training horizon.
  Trajectory reference;

  const NodeSet& nodes() const { return graph.nodes; }
};

/// Analytic snapshots when the problem has a closed form, otherwise the
/// direct oracle (auto sub-steps), for levels 0..levels.
Trajectory reference_trajectory(const ProblemSpec& problem, const NodeSet& nodes, const StencilSet& stencils,
                                int levels);

Setup make_setup(const ProblemSpec& problem, Graph graph, StencilSet stencils, int reference_levels);

int node_feature_count(const ProblemSpec& problem);

/// Per-node inputs [u, (u_prev), interior flag, boundary flag].
nn::Tensor2 node_features(const NodeSet& nodes, std::span<const double> u, std::span<const double> u_prev = {});

/// Model configuration matching the problem's feature layout.
nn::ModelConfig model_config_for(const ProblemSpec& problem, int latent_dim = 64, int hidden = 64, int blocks = 8);

/// One level of the loss: the assembled system and its inputs.
/// Forward: `input` is U^l. Inverse: `input` is U^{l+1}.
struct LossLevel {
  ResidualSystem system;
  std::vector<double> input;
  std::vector<double> previous;  // U^{l-1}, wave only
  bool inverse = false;
};

/// Builds the loss level for system level l from the setup's reference.
LossLevel make_loss_level(const Setup& setup, int level, bool inverse);

/// ||R||_2 for a recorded N x 1 prediction. Forward: the prediction is
/// U^{l+1} and only its interior rows enter. Inverse: the prediction is U^l,
/// its boundary rows are replaced by g(t^l).
nn::Tape::Var record_residual_norm(nn::Tape& tape, nn::Tape::Var prediction, const LossLevel& level,
                                   const NodeSet& nodes);

/// Records model prediction and residual norm for one level.
nn::Tape::Var record_level_loss(const nn::BoundModel& bound, const nn::GraphTopology& topology, const NodeSet& nodes,
                                const LossLevel& level);

/// Mean over levels of ||R||_2. When `grads` is given, the gradient of that
/// mean is added into it. A non-finite loss raises a divergence error naming
/// the level.
double pde_loss(const nn::ModelParams& model, const nn::GraphTopology& topology, const NodeSet& nodes,
                std::span<const LossLevel> levels, nn::ModelParams* grads = nullptr);

/// Same loss with the model replaced by fixed predictions (one N-vector per
/// level), through the same residual wiring.
double injected_loss(std::span<const LossLevel> levels, std::span<const std::vector<double>> predictions,
                     const NodeSet& nodes);

/// First level of training batch `step` (batches of consecutive levels cycle
/// through the horizon).
int batch_start(int step, int batch_size, int horizon_levels);

struct TrainResult {
  std::vector<double> loss_history;
  bool diverged = false;
  std::string message;
};

using CheckpointHook = std::function<void(int step, const nn::ModelParams&, const nn::AdamState&)>;

/// Runs config.iterations Adam steps continuing from adam.t. Divergence stops
/// the loop with the partial history.
TrainResult train(nn::ModelParams& model, nn::AdamState& adam, const Setup& setup, const TrainConfig& config,
                  const CheckpointHook& hook = {});

/// Autoregressive inference. Forward rollouts go from `from_level` up to
/// `to_level`; `start` is [U^from] or, for the wave, [U^{from-1}, U^from].
/// Inverse rollouts walk down from `from_level` to `to_level`.
Trajectory rollout(const nn::ModelParams& model, const ProblemSpec& problem, const Graph& graph, int from_level,
                   int to_level, std::span<const FieldSnapshot> start, bool inverse = false);

/// sqrt(sum (p - t)^2) / sqrt(sum t^2); zero truth is a division-by-zero error.
double relative_l2(std::span<const double> pred, std::span<const double> truth);
double max_abs_error(std::span<const double> pred, std::span<const double> truth);

struct ErrorRow {
  int level = 0;
  double time = 0.0;
  double rel_l2 = 0.0;
  double max_abs = 0.0;
};

/// Per-level errors of `pred` against the snapshot of `truth` at the same level.
std::vector<ErrorRow> error_table(const Trajectory& pred, const Trajectory& truth);

/// printf %.17g, enough to round-trip a double.
std::string format_real(double v);
/// Rows are numbered from `first_step` (non-zero when training resumed).
void write_loss_csv(std::ostream& out, std::span<const double> history, long first_step = 0);
void write_error_csv(std::ostream& out, std::span<const ErrorRow> rows);

}  // namespace rbfmgn
