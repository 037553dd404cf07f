#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rbfmgn/config.hpp"
#include "rbfmgn/nn/adam.hpp"
#include "rbfmgn/nn/model.hpp"
#include "rbfmgn/training.hpp"

namespace rbfmgn {

/// Direct oracle at tau / factor, sampled at every tau level. The base
/// sub-step count is the config's (0 = auto).
Trajectory fine_reference(const ProblemSpec& problem, const NodeSet& nodes, const StencilSet& stencils, int levels,
                          int base_substeps, int factor = 10);

/// Truth used to score rollouts: the closed form when there is one,
/// otherwise the fine-step oracle.
Trajectory evaluation_reference(const RunConfig& config, const Setup& setup);

struct TrainedRun {
  Setup setup;
  nn::ModelParams model;
  nn::AdamState adam;
  TrainResult result;
};

/// Builds the setup, initializes the model from config.seed and trains it.
TrainedRun train_run(const RunConfig& config);

/// Rollout scored by eval: forward from the initial condition to T_eval, or
/// for inverse models backward from T_train to level 0.
Trajectory evaluation_rollout(const RunConfig& config, const nn::ModelParams& model, const Setup& setup,
                              const Trajectory& reference);

struct SweepPoint {
  std::string param;
  double value = 0.0;
  std::string kernel;
  double rel_l2 = 0.0;
  double max_abs = 0.0;
  double final_loss = 0.0;
  /// "ok", or the error kind that stopped this point.
  std::string status = "ok";
};

/// Trains one sweep point (a config from sweep_configs) and scores its
/// evaluation rollout at the last level. Ill-conditioned stencils, unstable
/// references and diverged runs give a row with NaN metrics and that status;
/// other errors propagate.
SweepPoint run_sweep_point(const RunConfig& point, const std::string& param, double value,
                           const std::string& kernel = "");

/// Points of a sweep in output order: values outer, kernels inner.
std::vector<RunConfig> sweep_configs(const RunConfig& base, std::vector<std::pair<double, std::string>>* labels);

/// Fills the metrics of `r`; throws on any failure.
void score_sweep_point(const RunConfig& point, SweepPoint& r);

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points);

}  // namespace rbfmgn
