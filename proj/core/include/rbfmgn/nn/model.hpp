#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rbfmgn/geometry.hpp"
#include "rbfmgn/nn/tape.hpp"

namespace rbfmgn::nn {

struct Linear {
  Tensor2 weight;  // out x in
  Tensor2 bias;    // 1 x out
};

/// Affine layers with ReLU between them and identity on the last one.
struct MlpParams {
  std::vector<Linear> layers;

  int in_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols()); }
  int out_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }
};

struct ProcessorBlock {
  MlpParams edge_mlp;  // [e_ij, v_i, v_j] -> latent
  MlpParams node_mlp;  // [v_i, sum of incoming e'] -> latent
};

struct ModelConfig {
  int latent_dim = 64;
  int hidden = 64;
  int hidden_layers = 2;
  int blocks = 8;
  int node_features = 3;
  int edge_features = 3;
};

/// Encoder-processor-decoder graph network parameters.
struct ModelParams {
  ModelConfig config;
  MlpParams node_encoder;
  MlpParams edge_encoder;
  std::vector<ProcessorBlock> blocks;
  MlpParams decoder;
};

/// Glorot-uniform weights, zero biases, drawn in a fixed order from `seed`.
ModelParams init_model(const ModelConfig& config, std::uint64_t seed);

/// Same architecture, every tensor zero.
ModelParams zeros_like(const ModelParams& model);

/// Visits every tensor in a fixed order (encoder, edge encoder, blocks,
/// decoder; weight before bias) with a stable dotted name.
void for_each_tensor(ModelParams& model, const std::function<void(const std::string&, Tensor2&)>& f);
void for_each_tensor(const ModelParams& model, const std::function<void(const std::string&, const Tensor2&)>& f);
std::size_t parameter_count(const ModelParams& model);

/// Plain evaluation of an MLP on one input vector.
std::vector<double> mlp_forward(const MlpParams& mlp, std::span<const double> input);

/// Connectivity and static edge features of a graph: for directed edge
/// (i -> j), sender i and receiver j, features [x_j - x_i, |x_j - x_i|].
struct GraphTopology {
  int nodes = 0;
  std::vector<int> senders;
  std::vector<int> receivers;
  Tensor2 edge_features;
};

GraphTopology make_topology(const Graph& graph);

/// Parameters registered on a tape; gradients accumulate into `grads` when
/// one is given.
class BoundModel {
 public:
  BoundModel(Tape& tape, const ModelParams& model, ModelParams* grads);

  struct BoundLinear {
    Tape::Var weight;
    Tape::Var bias;
  };
  using BoundMlp = std::vector<BoundLinear>;

  Tape& tape() const { return *tape_; }
  const ModelParams& model() const { return *model_; }
  const BoundMlp& node_encoder() const { return node_encoder_; }
  const BoundMlp& edge_encoder() const { return edge_encoder_; }
  const BoundMlp& edge_mlp(std::size_t b) const { return edge_mlps_[b]; }
  const BoundMlp& node_mlp(std::size_t b) const { return node_mlps_[b]; }
  const BoundMlp& decoder() const { return decoder_; }

 private:
  Tape* tape_;
  const ModelParams* model_;
  BoundMlp node_encoder_, edge_encoder_, decoder_;
  std::vector<BoundMlp> edge_mlps_, node_mlps_;
};

Tape::Var mlp_apply(Tape& tape, const BoundModel::BoundMlp& mlp, Tape::Var x);

struct LatentGraph {
  Tape::Var nodes = -1;  // N x latent
  Tape::Var edges = -1;  // E x latent
};

LatentGraph encode(const BoundModel& bound, Tape::Var node_features, Tape::Var edge_features);

/// Message passing: e' = e + MLP_e([e, v_s, v_r]); v' = v + MLP_v([v, sum_{r=i} e']).
LatentGraph process(const BoundModel& bound, LatentGraph state, const GraphTopology& topology);

/// u_next = u_level + decoder(v), an N x 1 column.
Tape::Var decode(const BoundModel& bound, LatentGraph state, Tape::Var u_level);

/// encode -> process -> decode on a throwaway tape.
std::vector<double> predict(const ModelParams& model, const GraphTopology& topology, const Tensor2& node_features,
                            std::span<const double> u_level);

}  // namespace rbfmgn::nn
