#pragma once

#include "rbfmgn/nn/model.hpp"

namespace rbfmgn::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates shaped like the model, plus the step count.
struct AdamState {
  AdamConfig config;
  ModelParams m;
  ModelParams v;
  long t = 0;
};

AdamState make_adam(const ModelParams& model, AdamConfig config = {});

/// Bias-corrected Adam update of `params` in place.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state);

/// Same update on a single tensor with its own moments (t is the new count).
void adam_update(Tensor2& param, const Tensor2& grad, Tensor2& m, Tensor2& v, long t, const AdamConfig& config);

}  // namespace rbfmgn::nn
