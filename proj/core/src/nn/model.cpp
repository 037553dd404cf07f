#include "rbfmgn/nn/model.hpp"

#include <cmath>
#include <random>

#include "rbfmgn/error.hpp"

namespace rbfmgn::nn {

namespace {

MlpParams make_mlp(int in, int hidden, int hidden_layers, int out, std::mt19937_64& rng) {
  MlpParams mlp;
  int prev = in;
  for (int l = 0; l <= hidden_layers; ++l) {
    const int next = l == hidden_layers ? out : hidden;
    const double bound = std::sqrt(6.0 / (prev + next));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Linear layer{Tensor2(next, prev), Tensor2::Zero(1, next)};
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
    }
    mlp.layers.push_back(std::move(layer));
    prev = next;
  }
  return mlp;
}

template <class Model, class F>
void visit(Model& model, F&& f) {
  auto mlp = [&](const std::string& name, auto& m) {
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      f(name + "." + std::to_string(l) + ".w", m.layers[l].weight);
      f(name + "." + std::to_string(l) + ".b", m.layers[l].bias);
    }
  };
  mlp("node_encoder", model.node_encoder);
  mlp("edge_encoder", model.edge_encoder);
  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    mlp("block" + std::to_string(b) + ".edge", model.blocks[b].edge_mlp);
    mlp("block" + std::to_string(b) + ".node", model.blocks[b].node_mlp);
  }
  mlp("decoder", model.decoder);
}

BoundModel::BoundMlp bind_mlp(Tape& tape, const MlpParams& mlp, MlpParams* grads) {
  BoundModel::BoundMlp out;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const Linear& layer = mlp.layers[l];
    if (grads != nullptr) {
      out.push_back({tape.parameter(layer.weight, &grads->layers[l].weight),
                     tape.parameter(layer.bias, &grads->layers[l].bias)});
    } else {
      out.push_back({tape.constant(layer.weight), tape.constant(layer.bias)});
    }
  }
  return out;
}

}  // namespace

ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
  if (config.latent_dim < 1 || config.hidden < 1 || config.hidden_layers < 0 || config.blocks < 0 ||
      config.node_features < 1 || config.edge_features < 1) {
    fail(ErrorKind::Config, "model dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  ModelParams m;
  m.config = config;
  const int d = config.latent_dim;
  m.node_encoder = make_mlp(config.node_features, config.hidden, config.hidden_layers, d, rng);
  m.edge_encoder = make_mlp(config.edge_features, config.hidden, config.hidden_layers, d, rng);
  for (int b = 0; b < config.blocks; ++b) {
    ProcessorBlock block;
    block.edge_mlp = make_mlp(3 * d, config.hidden, config.hidden_layers, d, rng);
    block.node_mlp = make_mlp(2 * d, config.hidden, config.hidden_layers, d, rng);
    m.blocks.push_back(std::move(block));
  }
  m.decoder = make_mlp(d, config.hidden, config.hidden_layers, 1, rng);
  return m;
}

ModelParams zeros_like(const ModelParams& model) {
  ModelParams z = model;
  for_each_tensor(z, [](const std::string&, Tensor2& t) { t.setZero(); });
  return z;
}

void for_each_tensor(ModelParams& model, const std::function<void(const std::string&, Tensor2&)>& f) {
  visit(model, f);
}

void for_each_tensor(const ModelParams& model, const std::function<void(const std::string&, const Tensor2&)>& f) {
  visit(model, f);
}

std::size_t parameter_count(const ModelParams& model) {
  std::size_t n = 0;
  for_each_tensor(model, [&](const std::string&, const Tensor2& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

std::vector<double> mlp_forward(const MlpParams& mlp, std::span<const double> input) {
  if (static_cast<int>(input.size()) != mlp.in_dim()) {
    fail(ErrorKind::Shape, "mlp input has " + std::to_string(input.size()) + " values, expected " +
                               std::to_string(mlp.in_dim()));
  }
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    Eigen::VectorXd y = mlp.layers[l].weight * x + mlp.layers[l].bias.row(0).transpose();
    if (l + 1 < mlp.layers.size()) y = y.cwiseMax(0.0);
    x = std::move(y);
  }
  return {x.data(), x.data() + x.size()};
}

GraphTopology make_topology(const Graph& graph) {
  GraphTopology topo;
  topo.nodes = graph.nodes.size();
  topo.senders.reserve(graph.edges.size());
  topo.receivers.reserve(graph.edges.size());
  topo.edge_features.resize(static_cast<Eigen::Index>(graph.edges.size()), 3);
  for (std::size_t k = 0; k < graph.edges.size(); ++k) {
    const Edge e = graph.edges[k];
    topo.senders.push_back(e.from);
    topo.receivers.push_back(e.to);
    const Point2 d = graph.nodes.coords[static_cast<std::size_t>(e.to)] - graph.nodes.coords[static_cast<std::size_t>(e.from)];
    const auto row = static_cast<Eigen::Index>(k);
    topo.edge_features(row, 0) = d.x;
    topo.edge_features(row, 1) = d.y;
    topo.edge_features(row, 2) = norm(d);
  }
  return topo;
}

BoundModel::BoundModel(Tape& tape, const ModelParams& model, ModelParams* grads) : tape_(&tape), model_(&model) {
  node_encoder_ = bind_mlp(tape, model.node_encoder, grads ? &grads->node_encoder : nullptr);
  edge_encoder_ = bind_mlp(tape, model.edge_encoder, grads ? &grads->edge_encoder : nullptr);
  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    edge_mlps_.push_back(bind_mlp(tape, model.blocks[b].edge_mlp, grads ? &grads->blocks[b].edge_mlp : nullptr));
    node_mlps_.push_back(bind_mlp(tape, model.blocks[b].node_mlp, grads ? &grads->blocks[b].node_mlp : nullptr));
  }
  decoder_ = bind_mlp(tape, model.decoder, grads ? &grads->decoder : nullptr);
}

Tape::Var mlp_apply(Tape& tape, const BoundModel::BoundMlp& mlp, Tape::Var x) {
  for (std::size_t l = 0; l < mlp.size(); ++l) {
    x = tape.linear(x, mlp[l].weight, mlp[l].bias);
    if (l + 1 < mlp.size()) x = tape.relu(x);
  }
  return x;
}

LatentGraph encode(const BoundModel& bound, Tape::Var node_features, Tape::Var edge_features) {
  Tape& t = bound.tape();
  LatentGraph s;
  s.nodes = mlp_apply(t, bound.node_encoder(), node_features);
  s.edges = mlp_apply(t, bound.edge_encoder(), edge_features);
  return s;
}

LatentGraph process(const BoundModel& bound, LatentGraph state, const GraphTopology& topology) {
  Tape& t = bound.tape();
  if (t.value(state.edges).rows() != static_cast<Eigen::Index>(topology.senders.size())) {
    fail(ErrorKind::Shape, "edge latents do not match the graph's edge count");
  }
  for (std::size_t b = 0; b < bound.model().blocks.size(); ++b) {
    const Tape::Var sender_latent = t.gather_rows(state.nodes, topology.senders);
    const Tape::Var receiver_latent = t.gather_rows(state.nodes, topology.receivers);
    const Tape::Var edge_in[3] = {state.edges, sender_latent, receiver_latent};
    const Tape::Var edges = t.add(state.edges, mlp_apply(t, bound.edge_mlp(b), t.concat_cols(edge_in)));
    const Tape::Var aggregate = t.scatter_add_rows(edges, topology.receivers, topology.nodes);
    const Tape::Var node_in[2] = {state.nodes, aggregate};
    state.nodes = t.add(state.nodes, mlp_apply(t, bound.node_mlp(b), t.concat_cols(node_in)));
    state.edges = edges;
  }
  return state;
}

Tape::Var decode(const BoundModel& bound, LatentGraph state, Tape::Var u_level) {
  Tape& t = bound.tape();
  return t.add(u_level, mlp_apply(t, bound.decoder(), state.nodes));
}

std::vector<double> predict(const ModelParams& model, const GraphTopology& topology, const Tensor2& node_features,
                            std::span<const double> u_level) {
  if (node_features.rows() != topology.nodes || static_cast<int>(u_level.size()) != topology.nodes) {
    fail(ErrorKind::Shape, "node inputs do not match the graph's node count");
  }
  Tape tape;
  const BoundModel bound(tape, model, nullptr);
  const Tape::Var nf = tape.constant(node_features);
  const Tape::Var ef = tape.constant(topology.edge_features);
  const Tape::Var u = tape.constant(Eigen::Map<const Tensor2>(u_level.data(), topology.nodes, 1));
  const Tape::Var out = decode(bound, process(bound, encode(bound, nf, ef), topology), u);
  const Tensor2& v = tape.value(out);
  return {v.data(), v.data() + v.size()};
}

}  // namespace rbfmgn::nn
