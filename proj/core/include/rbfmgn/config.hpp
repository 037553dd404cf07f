#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rbfmgn/geometry.hpp"
#include "rbfmgn/nn/model.hpp"
#include "rbfmgn/problems.hpp"
#include "rbfmgn/rbf_stencil.hpp"
#include "rbfmgn/training.hpp"

namespace rbfmgn {

struct RbfConfig {
  RbfKernel kernel;
  int m = 15;
  int poly_order = 2;
};

/// One-parameter sweep: param is tau, lambda, epsilon, n or m. When kernels
/// is non-empty every value runs once per kernel.
struct SweepConfig {
  std::string param;
  std::vector<double> values;
  std::vector<KernelKind> kernels;
};

struct EvalConfig {
  /// Times at which eval writes per-node field dumps.
  std::vector<double> dump_times;
  std::optional<SweepConfig> sweep;
};

/// A whole experiment as read from one JSON file.
struct RunConfig {
  ProblemSpec problem;
  int n_interior = 0;
  int n_boundary = 0;
  std::uint64_t seed = 0;
  RbfConfig rbf;
  nn::ModelConfig model;
  TrainConfig train;
  /// Explicit sub-steps per level for the direct solver; 0 means auto.
  int oracle_substeps = 0;
  EvalConfig eval;
};

/// Parses and validates a config document. Unknown keys, wrong types and
/// out-of-range values raise a Config error naming the field.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical JSON form of a config (keys sorted).
std::string config_to_json(const RunConfig& config);

/// Copy of `base` with one sweep parameter set. Node-count sweeps keep the
/// interior/boundary ratio of the base config.
RunConfig with_sweep_value(const RunConfig& base, const std::string& param, double value);

/// Nodes sampled from the config, triangulated and clipped to the domain.
Graph build_graph(const RunConfig& config);
StencilSet build_stencils(const RunConfig& config, const NodeSet& nodes);
/// Graph, stencils and the reference trajectory up to max(T_final, T_eval).
Setup build_setup(const RunConfig& config);

}  // namespace rbfmgn
