#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "golden_values.hpp"
#include "oracles.hpp"
#include "rbfmgn/error.hpp"
#include "rbfmgn/nn/adam.hpp"
#include "rbfmgn/nn/model.hpp"

using namespace rbfmgn;
using namespace rbfmgn::nn;

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

ModelConfig small_config(int latent = 4, int blocks = 2) {
  ModelConfig c;
  c.latent_dim = latent;
  c.hidden = 5;
  c.hidden_layers = 2;
  c.blocks = blocks;
  c.node_features = 3;
  c.edge_features = 3;
  return c;
}

// Same closed-form parameters as the Python reference.
ModelParams closed_form_model() {
  ModelParams m = init_model(small_config(), 0);
  int t = 0;
  for_each_tensor(m, [&](const std::string& name, Tensor2& x) {
    const bool bias = name.back() == 'b';
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        x(r, c) = bias ? 0.05 * std::cos(0.9 * static_cast<double>(c + 1) + 0.5 * (t + 1))
                       : 0.4 * std::sin(0.7 * static_cast<double>(r + 1) + 1.3 * static_cast<double>(c + 1) + 0.37 * (t + 1)) /
                             std::sqrt(static_cast<double>(x.cols()));
      }
    }
    ++t;
  });
  return m;
}

struct SmallGraph {
  Graph graph;
  GraphTopology topo;
  Tensor2 features;
  std::vector<double> u;
};

SmallGraph golden_graph() {
  SmallGraph g;
  g.graph.nodes = make_node_set({{0.4, 0.6}}, {{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  // Re-order to the reference layout: node 4 is the interior one.
  g.graph.nodes.coords = {{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0.4, 0.6}};
  g.graph.nodes.boundary_mask = {1, 1, 1, 1, 0};
  const std::vector<std::pair<int, int>> und = {{0, 1}, {0, 2}, {0, 4}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}};
  for (auto [a, b] : und) {
    g.graph.edges.push_back({a, b});
    g.graph.edges.push_back({b, a});
  }
  std::sort(g.graph.edges.begin(), g.graph.edges.end());
  g.topo = make_topology(g.graph);
  g.features.resize(5, 3);
  for (int i = 0; i < 5; ++i) {
    g.u.push_back(0.3 * i - 0.5);
    g.features(i, 0) = g.u.back();
    g.features(i, 1) = i == 4 ? 1.0 : 0.0;
    g.features(i, 2) = i == 4 ? 0.0 : 1.0;
  }
  return g;
}

SmallGraph random_graph(int n, std::uint64_t seed) {
  SmallGraph g;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point2> in, bd;
  for (int i = 0; i < n; ++i) (i < n / 2 ? in : bd).push_back({u(rng), u(rng)});
  g.graph = triangulate(make_node_set(in, bd));
  g.topo = make_topology(g.graph);
  g.features.resize(n, 3);
  for (int i = 0; i < n; ++i) {
    g.u.push_back(std::sin(3.0 * i));
    g.features(i, 0) = g.u.back();
    g.features(i, 1) = g.graph.nodes.is_boundary(i) ? 0.0 : 1.0;
    g.features(i, 2) = g.graph.nodes.is_boundary(i) ? 1.0 : 0.0;
  }
  return g;
}

// sum_i c_i * pred_i^2 with fixed weights c, recorded on a tape.
double record_loss(Tape& tape, const ModelParams& model, ModelParams* grads, const SmallGraph& g, bool run_backward,
                   double scale = 1.0) {
  const BoundModel bound(tape, model, grads);
  const Tape::Var nf = tape.constant(g.features);
  const Tape::Var ef = tape.constant(g.topo.edge_features);
  const Tape::Var u = tape.constant(Eigen::Map<const Tensor2>(g.u.data(), static_cast<Eigen::Index>(g.u.size()), 1));
  const Tape::Var pred = decode(bound, process(bound, encode(bound, nf, ef), g.topo), u);
  Tensor2 shift(static_cast<Eigen::Index>(g.u.size()), 1);
  for (Eigen::Index i = 0; i < shift.rows(); ++i) shift(i, 0) = 0.1 * static_cast<double>(i) - 0.2;
  const Tape::Var loss = tape.affine(tape.sum_squares(tape.affine(pred, scale, shift)), 1.0);
  if (run_backward) tape.backward(loss);
  return tape.scalar(loss);
}

double loss_value(const ModelParams& model, const SmallGraph& g) {
  Tape tape;
  return record_loss(tape, model, nullptr, g, false);
}

}  // namespace

TEST_CASE("mlp_forward basics") {
  MlpParams id;
  id.layers.push_back({Tensor2::Identity(3, 3), Tensor2::Zero(1, 3)});
  const std::vector<double> v = {0.5, -1.5, 2.0};
  CHECK(mlp_forward(id, v) == v);
  MlpParams zb;
  zb.layers.push_back({Tensor2::Zero(4, 3), Tensor2::Constant(1, 4, 0.3)});
  zb.layers.push_back({Tensor2::Zero(2, 4), (Tensor2(1, 2) << -0.5, 0.25).finished()});
  CHECK(mlp_forward(zb, v) == std::vector<double>{-0.5, 0.25});
  CHECK(kind_of([&] { mlp_forward(zb, std::vector<double>{1.0}); }) == ErrorKind::Shape);
}

TEST_CASE("mlp_forward matches a straight-line evaluation") {
  const ModelParams m = init_model(small_config(), 42);
  const MlpParams& mlp = m.blocks[1].edge_mlp;
  std::vector<double> x(12);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::cos(1.0 + static_cast<double>(i));
  std::vector<double> cur = x;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const Linear& L = mlp.layers[l];
    std::vector<double> next(static_cast<std::size_t>(L.weight.rows()));
    for (Eigen::Index r = 0; r < L.weight.rows(); ++r) {
      double acc = L.bias(0, r);
      for (Eigen::Index c = 0; c < L.weight.cols(); ++c) acc += L.weight(r, c) * cur[static_cast<std::size_t>(c)];
      next[static_cast<std::size_t>(r)] = l + 1 < mlp.layers.size() ? std::max(acc, 0.0) : acc;
    }
    cur = next;
  }
  const auto out = mlp_forward(mlp, x);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(cur[i]).epsilon(1e-14));
}

TEST_CASE("architecture shapes") {
  const ModelParams m = init_model(small_config(6, 3), 1);
  CHECK(m.blocks.size() == 3);
  for (const ProcessorBlock& b : m.blocks) {
    CHECK(b.edge_mlp.in_dim() == 18);
    CHECK(b.edge_mlp.out_dim() == 6);
    CHECK(b.node_mlp.in_dim() == 12);
    CHECK(b.node_mlp.out_dim() == 6);
    CHECK(b.edge_mlp.layers.size() == 3);
  }
  CHECK(m.decoder.out_dim() == 1);
  CHECK(kind_of([] { init_model(small_config(0, 1), 1); }) == ErrorKind::Config);
}

TEST_CASE("Glorot bounds and zero biases") {
  const ModelParams m = init_model(small_config(8, 2), 3);
  for_each_tensor(m, [&](const std::string& name, const Tensor2& t) {
    if (name.back() == 'b') {
      CHECK(t.isZero());
    } else {
      const double lim = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
      CHECK(t.cwiseAbs().maxCoeff() <= lim);
    }
  });
  const ModelParams again = init_model(small_config(8, 2), 3);
  std::vector<double> a, b;
  for_each_tensor(m, [&](const std::string&, const Tensor2& t) { a.insert(a.end(), t.data(), t.data() + t.size()); });
  for_each_tensor(again, [&](const std::string&, const Tensor2& t) { b.insert(b.end(), t.data(), t.data() + t.size()); });
  CHECK(a == b);
}

TEST_CASE("encode on zero inputs and degenerate graphs") {
  ModelParams m = init_model(small_config(), 5);
  for_each_tensor(m, [](const std::string& name, Tensor2& t) {
    if (name.back() == 'b') t.setZero();
  });
  Tape tape;
  const BoundModel bound(tape, m, nullptr);
  const LatentGraph lg = encode(bound, tape.constant(Tensor2::Zero(4, 3)), tape.constant(Tensor2::Zero(6, 3)));
  CHECK(tape.value(lg.nodes).isZero());
  CHECK(tape.value(lg.edges).isZero());
  Tape t2;
  const BoundModel b2(t2, m, nullptr);
  const LatentGraph one = encode(b2, t2.constant(Tensor2::Ones(1, 3)), t2.constant(Tensor2::Zero(0, 3)));
  CHECK(t2.value(one.nodes).rows() == 1);
  CHECK(t2.value(one.nodes).cols() == 4);
  CHECK(t2.value(one.edges).rows() == 0);
}

TEST_CASE("golden latents and predictions from the reference implementation") {
  const ModelParams m = closed_form_model();
  const SmallGraph g = golden_graph();
  Tape tape;
  const BoundModel bound(tape, m, nullptr);
  const LatentGraph enc = encode(bound, tape.constant(g.features), tape.constant(g.topo.edge_features));
  const Tensor2 enc_nodes = tape.value(enc.nodes);
  const LatentGraph proc = process(bound, enc, g.topo);
  for (int i = 0; i < 5; ++i) {
    for (int k = 0; k < 4; ++k) {
      CHECK(enc_nodes(i, k) == doctest::Approx(golden::kEncodedNodes[i][k]).epsilon(1e-12));
      CHECK(tape.value(proc.nodes)(i, k) == doctest::Approx(golden::kProcessedNodes[i][k]).epsilon(1e-12));
    }
  }
  const auto pred = predict(m, g.topo, g.features, g.u);
  for (int i = 0; i < 5; ++i) CHECK(pred[static_cast<std::size_t>(i)] == doctest::Approx(golden::kPrediction[i]).epsilon(1e-12));
}

TEST_CASE("zero-weight processor leaves the state unchanged") {
  ModelParams m = init_model(small_config(), 9);
  for (ProcessorBlock& b : m.blocks) {
    for (auto* mlp : {&b.edge_mlp, &b.node_mlp})
      for (Linear& l : mlp->layers) l.weight.setZero(), l.bias.setZero();
  }
  const SmallGraph g = random_graph(8, 2);
  Tape tape;
  const BoundModel bound(tape, m, nullptr);
  const LatentGraph enc = encode(bound, tape.constant(g.features), tape.constant(g.topo.edge_features));
  const LatentGraph out = process(bound, enc, g.topo);
  CHECK(tape.value(out.nodes) == tape.value(enc.nodes));
  CHECK(tape.value(out.edges) == tape.value(enc.edges));
}

TEST_CASE("a single directed edge only feeds its receiver") {
  ModelParams m = init_model(small_config(4, 1), 4);
  GraphTopology topo;
  topo.nodes = 2;
  topo.senders = {0};
  topo.receivers = {1};
  topo.edge_features = (Tensor2(1, 3) << 1.0, 0.0, 1.0).finished();
  Tape tape;
  const BoundModel bound(tape, m, nullptr);
  const LatentGraph enc = encode(bound, tape.constant(Tensor2::Constant(2, 3, 0.7)), tape.constant(topo.edge_features));
  const Tensor2 before = tape.value(enc.nodes);
  const LatentGraph out = process(bound, enc, topo);
  // Node 0 receives nothing: v0' = v0 + MLP_v([v0, 0]).
  std::vector<double> in0(8, 0.0);
  for (int k = 0; k < 4; ++k) in0[static_cast<std::size_t>(k)] = before(0, k);
  const auto upd0 = mlp_forward(m.blocks[0].node_mlp, in0);
  for (int k = 0; k < 4; ++k) CHECK(tape.value(out.nodes)(0, k) == doctest::Approx(before(0, k) + upd0[static_cast<std::size_t>(k)]).epsilon(1e-14));
  std::vector<double> in1(8);
  for (int k = 0; k < 4; ++k) {
    in1[static_cast<std::size_t>(k)] = before(1, k);
    in1[static_cast<std::size_t>(4 + k)] = tape.value(out.edges)(0, k);
  }
  const auto upd1 = mlp_forward(m.blocks[0].node_mlp, in1);
  for (int k = 0; k < 4; ++k) CHECK(tape.value(out.nodes)(1, k) == doctest::Approx(before(1, k) + upd1[static_cast<std::size_t>(k)]).epsilon(1e-14));
}

TEST_CASE("decoder corrections") {
  const SmallGraph g = random_graph(9, 3);
  ModelParams zero = zeros_like(init_model(small_config(), 1));
  CHECK(predict(zero, g.topo, g.features, g.u) == g.u);
  ModelParams m = init_model(small_config(), 1);
  for (Linear& l : m.decoder.layers) l.weight.setZero(), l.bias.setZero();
  m.decoder.layers.back().bias(0, 0) = 0.125;
  const auto p = predict(m, g.topo, g.features, g.u);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(g.u[i] + 0.125).epsilon(1e-15));
}

TEST_CASE("permutation equivariance") {
  const SmallGraph g = random_graph(10, 6);
  const ModelParams m = init_model(small_config(6, 2), 8);
  const auto base = predict(m, g.topo, g.features, g.u);
  std::vector<int> perm(10);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(1);
  std::shuffle(perm.begin(), perm.end(), rng);
  GraphTopology t = g.topo;
  Tensor2 f(10, 3);
  std::vector<double> u(10);
  for (int i = 0; i < 10; ++i) {
    f.row(perm[static_cast<std::size_t>(i)]) = g.features.row(i);
    u[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = g.u[static_cast<std::size_t>(i)];
  }
  for (auto& s : t.senders) s = perm[static_cast<std::size_t>(s)];
  for (auto& r : t.receivers) r = perm[static_cast<std::size_t>(r)];
  const auto out = predict(m, t, f, u);
  for (int i = 0; i < 10; ++i) CHECK(out[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] == doctest::Approx(base[static_cast<std::size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("ReLU layer is positively homogeneous in inputs and biases") {
  const ModelParams m = init_model(small_config(), 11);
  const Linear& L = m.node_encoder.layers.front();
  Linear biased = L;
  biased.bias = Tensor2::Constant(1, L.bias.cols(), 0.2);
  const Eigen::RowVectorXd x = (Eigen::RowVectorXd(3) << 0.3, -1.2, 0.8).finished();
  const double alpha = 2.75;
  const Eigen::RowVectorXd pre = x * biased.weight.transpose() + biased.bias;
  const Eigen::RowVectorXd scaled = (alpha * x) * biased.weight.transpose() + alpha * biased.bias;
  for (Eigen::Index k = 0; k < pre.size(); ++k) {
    CHECK(scaled(k) == doctest::Approx(alpha * pre(k)).epsilon(1e-14));
    CHECK(std::max(scaled(k), 0.0) == doctest::Approx(alpha * std::max(pre(k), 0.0)).epsilon(1e-14));
  }
}

TEST_CASE("reverse-mode gradients match central differences") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const SmallGraph g = random_graph(8, seed);
    ModelParams m = init_model(small_config(4, 2), seed);
    for_each_tensor(m, [&](const std::string& name, Tensor2& t) {
      if (name.back() == 'b') t.setConstant(0.05);
    });
    ModelParams grads = zeros_like(m);
    Tape tape;
    record_loss(tape, m, &grads, g, true);
    std::vector<Tensor2*> params, gs;
    for_each_tensor(m, [&](const std::string&, Tensor2& t) { params.push_back(&t); });
    for_each_tensor(grads, [&](const std::string&, Tensor2& t) { gs.push_back(&t); });
    int checked = 0;
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (Eigen::Index i = 0; i < params[k]->size(); ++i) {
        const double fd = oracle::central_difference([&] { return loss_value(m, g); }, params[k]->data()[i], 1e-6);
        const double an = gs[k]->data()[i];
        CHECK(std::abs(an - fd) <= 1e-5 * std::max({std::abs(an), std::abs(fd), 1e-4}));
        ++checked;
      }
    }
    CHECK(checked == static_cast<int>(parameter_count(m)));
  }
}

TEST_CASE("decoder bias gradient on the zero model") {
  const SmallGraph g = random_graph(7, 4);
  const ModelParams zero = zeros_like(init_model(small_config(), 1));
  ModelParams grads = zeros_like(zero);
  Tape tape;
  record_loss(tape, zero, &grads, g, true);
  // d/db sum (u_i + b + s_i)^2 at b = 0 is 2 sum (u_i + s_i).
  double expected = 0;
  for (std::size_t i = 0; i < g.u.size(); ++i) expected += 2 * (g.u[i] + 0.1 * static_cast<double>(i) - 0.2);
  CHECK(grads.decoder.layers.back().bias(0, 0) == doctest::Approx(expected).epsilon(1e-12));
  ModelParams copy = zero;
  const double fd = oracle::central_difference([&] { return loss_value(copy, g); }, copy.decoder.layers.back().bias(0, 0), 1e-6);
  CHECK(std::abs(fd - expected) <= 1e-6 * std::abs(expected));
}

TEST_CASE("gradient structure") {
  const SmallGraph g = random_graph(8, 5);
  const ModelParams m = init_model(small_config(), 5);
  ModelParams g1 = zeros_like(m), g2 = zeros_like(m);
  {
    Tape t;
    record_loss(t, m, &g1, g, true, 1.0);
  }
  {
    // scaling the output scales the loss quadratically; with zero shift the
    // gradient of (alpha * loss) is alpha times the gradient
    Tape t;
    const BoundModel bound(t, m, &g2);
    const Tape::Var nf = t.constant(g.features), ef = t.constant(g.topo.edge_features);
    const Tape::Var u = t.constant(Eigen::Map<const Tensor2>(g.u.data(), 8, 1));
    const Tape::Var pred = decode(bound, process(bound, encode(bound, nf, ef), g.topo), u);
    Tensor2 shift(8, 1);
    for (Eigen::Index i = 0; i < 8; ++i) shift(i, 0) = 0.1 * static_cast<double>(i) - 0.2;
    const Tape::Var loss = t.affine(t.sum_squares(t.affine(pred, 1.0, shift)), 3.0);
    t.backward(loss);
  }
  std::vector<double> a, b;
  for_each_tensor(g1, [&](const std::string&, const Tensor2& t) { a.insert(a.end(), t.data(), t.data() + t.size()); });
  for_each_tensor(g2, [&](const std::string&, const Tensor2& t) { b.insert(b.end(), t.data(), t.data() + t.size()); });
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(3.0 * a[i]).epsilon(1e-12).scale(1e-12));

  // A processor with no blocks in play: a loss on the encoder output alone
  // leaves every block and decoder gradient at zero.
  ModelParams g3 = zeros_like(m);
  Tape t;
  const BoundModel bound(t, m, &g3);
  const LatentGraph enc = encode(bound, t.constant(g.features), t.constant(g.topo.edge_features));
  t.backward(t.sum_squares(enc.nodes));
  for (const ProcessorBlock& blk : g3.blocks)
    for (const Linear& l : blk.edge_mlp.layers) CHECK(l.weight.isZero());
  for (const Linear& l : g3.decoder.layers) CHECK(l.weight.isZero());
  CHECK_FALSE(g3.node_encoder.layers.front().weight.isZero());
}

TEST_CASE("backward without a recorded pass") {
  Tape t;
  CHECK(kind_of([&] { t.backward(0); }) == ErrorKind::State);
}

TEST_CASE("Adam update arithmetic") {
  Tensor2 p = Tensor2::Constant(1, 1, 0.5), g = Tensor2::Ones(1, 1), m = Tensor2::Zero(1, 1), v = Tensor2::Zero(1, 1);
  adam_update(p, g, m, v, 1, AdamConfig{});
  CHECK(p(0, 0) - 0.5 == doctest::Approx(-0.001 / (1 + 1e-8)).epsilon(1e-12));
  CHECK(p(0, 0) - 0.5 == doctest::Approx(-0.000999999).epsilon(1e-6));
  Tensor2 bad = Tensor2::Ones(2, 1);
  CHECK(kind_of([&] { adam_update(p, bad, m, v, 2, AdamConfig{}); }) == ErrorKind::Shape);
}

TEST_CASE("Adam with zero gradients leaves parameters unchanged") {
  ModelParams m = init_model(small_config(), 2);
  const ModelParams before = m;
  AdamState s = make_adam(m);
  const ModelParams z = zeros_like(m);
  for (int k = 0; k < 20; ++k) adam_step(m, z, s);
  CHECK(s.t == 20);
  std::vector<double> a, b;
  for_each_tensor(m, [&](const std::string&, const Tensor2& t) { a.insert(a.end(), t.data(), t.data() + t.size()); });
  for_each_tensor(before, [&](const std::string&, const Tensor2& t) { b.insert(b.end(), t.data(), t.data() + t.size()); });
  CHECK(a == b);
}

TEST_CASE("identical Adam runs are bit-identical") {
  const SmallGraph g = random_graph(8, 7);
  auto run = [&] {
    ModelParams m = init_model(small_config(), 13);
    AdamState s = make_adam(m);
    for (int k = 0; k < 5; ++k) {
      ModelParams grads = zeros_like(m);
      Tape t;
      record_loss(t, m, &grads, g, true);
      adam_step(m, grads, s);
    }
    std::vector<double> out;
    for_each_tensor(m, [&](const std::string&, const Tensor2& t) { out.insert(out.end(), t.data(), t.data() + t.size()); });
    return out;
  };
  CHECK(run() == run());
}
