#include "rbfmgn/nn/adam.hpp"

#include <cmath>

#include "rbfmgn/error.hpp"

namespace rbfmgn::nn {

AdamState make_adam(const ModelParams& model, AdamConfig config) {
  AdamState s;
  s.config = config;
  s.m = zeros_like(model);
  s.v = zeros_like(model);
  return s;
}

void adam_update(Tensor2& param, const Tensor2& grad, Tensor2& m, Tensor2& v, long t, const AdamConfig& c) {
  if (grad.rows() != param.rows() || grad.cols() != param.cols() || m.rows() != param.rows() ||
      m.cols() != param.cols() || v.rows() != param.rows() || v.cols() != param.cols()) {
    fail(ErrorKind::Shape, "adam: gradient or moment shape does not match the parameter");
  }
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  m = c.beta1 * m + (1.0 - c.beta1) * grad;
  v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
  param.array() -= c.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state) {
  std::vector<Tensor2*> p, m, v;
  std::vector<const Tensor2*> g;
  for_each_tensor(params, [&](const std::string&, Tensor2& t) { p.push_back(&t); });
  for_each_tensor(grads, [&](const std::string&, const Tensor2& t) { g.push_back(&t); });
  for_each_tensor(state.m, [&](const std::string&, Tensor2& t) { m.push_back(&t); });
  for_each_tensor(state.v, [&](const std::string&, Tensor2& t) { v.push_back(&t); });
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    fail(ErrorKind::Shape, "adam: gradient structure does not match the model");
  }
  ++state.t;
  for (std::size_t k = 0; k < p.size(); ++k) adam_update(*p[k], *g[k], *m[k], *v[k], state.t, state.config);
}

}  // namespace rbfmgn::nn
