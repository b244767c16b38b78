// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include <cmath>

#include "mmsf/train/train.hpp"

namespace mmsf::train {

void adam_step(net::ParamStore& params, AdamState& state, double lr,
               const TrainConfig& cfg) {
  ++state.t;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (const auto& [name, v] : params.all()) {
    Tensor& value = v->value;
    Tensor& m =
        state.m.try_emplace(name, Tensor(value.shape())).first->second;
    Tensor& s =
        state.v.try_emplace(name, Tensor(value.shape())).first->second;
    const bool live = v->has_grad();
    for (long i = 0; i < value.numel(); ++i) {
      double g = live ? v->grad()[i] : 0.0;
      if (cfg.weight_decay != 0.0) g += cfg.weight_decay * value[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      s[i] = b2 * s[i] + (1.0 - b2) * g * g;
      // Moments at rest yield an exactly zero update, so unreached
      // parameters stay bit-identical.
      value[i] -= lr * (m[i] / corr1) / (std::sqrt(s[i] / corr2) + cfg.adam_eps);
    }
  }
}

}  // namespace mmsf::train
