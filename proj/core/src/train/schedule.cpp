// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mmsf/train/train.hpp"

namespace mmsf::train {

void TrainConfig::validate() const {
  if (total_steps < 0) throw std::invalid_argument("total_steps < 0");
  if (lr_initial <= 0.0) throw std::invalid_argument("lr_initial <= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw std::invalid_argument("adam betas must lie in [0,1)");
  }
  if (adam_eps <= 0.0) throw std::invalid_argument("adam_eps <= 0");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay < 0");
  if (detach_epochs < 0) throw std::invalid_argument("detach_epochs < 0");
  if (seq_len < 3) throw std::invalid_argument("seq_len < 3");
  if (!std::is_sorted(lr_halving_steps.begin(), lr_halving_steps.end())) {
    throw std::invalid_argument("lr_halving_steps must be sorted");
  }
  loss_weights.validate();
}

// The canonical halving positions are stated for a 400k-step run; shorter
// runs shrink them proportionally so the decay shape is preserved.
double lr_at_step(long step, const TrainConfig& cfg) {
  if (step < 0 || step >= cfg.total_steps) {
    throw std::out_of_range("lr_at_step: step outside [0, total_steps)");
  }
  const double ratio = static_cast<double>(cfg.total_steps) / 400000.0;
  int halvings = 0;
  for (long at : cfg.lr_halving_steps) {
    if (std::llround(at * ratio) <= step) ++halvings;
  }
  return cfg.lr_initial * std::pow(0.5, halvings);
}

bool detach_active(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw std::invalid_argument("detach_active: negative epoch");
  return epoch < cfg.detach_epochs;
}

}  // namespace mmsf::train
