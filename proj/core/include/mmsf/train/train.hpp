// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mmsf/core/types.hpp"
#include "mmsf/losses/losses.hpp"
#include "mmsf/net/model.hpp"

namespace mmsf::train {

struct TrainConfig {
  long total_steps = 400000;
  double lr_initial = 2e-4;
  // Positions for total_steps = 400k; lr_at_step rescales them linearly so
  // shorter runs keep the same schedule shape.
  std::vector<long> lr_halving_steps = {150000, 250000, 300000, 350000};
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;  // nonzero hurts accuracy; kept configurable
  int detach_epochs = 2;
  int seq_len = 5;
  std::uint64_t seed = 0;

  int train_h = 64;
  int train_w = 128;
  bool augment = true;
  long checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::string checkpoint_dir;

  losses::LossWeights loss_weights;

  void validate() const;
};

// One uniform draw shared by every frame of a sequence. Geometric and
// photometric parts are drawn unconditionally so the consumed random stream
// does not depend on the coin flips.
struct AugmentParams {
  bool flip = false;
  double scale = 1.0;        // crop window side as a fraction of the input
  double shift_x = 0.0;      // window center offset, fraction of width
  double shift_y = 0.0;
  bool photometric = false;
  double gamma = 1.0;
  double brightness = 1.0;
  double color[3] = {1.0, 1.0, 1.0};
};

AugmentParams draw_augment_params(std::mt19937_64& rng);

// Applies one parameter draw to every frame: horizontal flip (mirroring
// swaps the stereo roles), scaled shifted crop, resize to out_h x out_w with
// the rig rescaled to match, then the photometric chain clamped to [0,1].
// Ground truth does not survive resampling and is dropped.
SequenceSample apply_augment(const SequenceSample& sample,
                             const AugmentParams& p, int out_h, int out_w);

SequenceSample augment_sequence(const SequenceSample& sample,
                                std::mt19937_64& rng, int out_h, int out_w);

double lr_at_step(long step, const TrainConfig& cfg);
bool detach_active(int epoch, const TrainConfig& cfg);

struct AdamState {
  long t = 0;
  std::map<std::string, Tensor> m, v;
};

// One Adam update from the gradients currently held by the store. Parameters
// whose gradient is absent or all-zero and whose moments are at rest stay
// bit-identical (no weight decay by default).
void adam_step(net::ParamStore& params, AdamState& state, double lr,
               const TrainConfig& cfg);

struct StepResult {
  losses::LossReport report;
  double lr = 0.0;
  bool detached = false;
};

// Forward over the whole sequence (LSTM carry runs inside the pass), loss,
// backward, Adam update. Throws on missing right views or non-finite loss or
// gradients; the model is left unmodified when validation fails.
StepResult train_step(net::Model& model, const SequenceSample& sample,
                      AdamState& opt, const TrainConfig& cfg, long step,
                      int epoch);

struct TrainLogEntry {
  long step = 0;
  double lr = 0.0;
  double l_total = 0.0;
  double l_d = 0.0;
  double l_sf = 0.0;
  double lambda_sf = 0.0;
};

using LogSink = std::function<void(const TrainLogEntry&)>;

// Epochs sweep the dataset in order; augmentation draws from a per-step
// generator seeded by (cfg.seed, step) so interrupted and resumed runs see
// identical samples. Checkpoints bundle model parameters with optimizer
// moments; resume_path restarts after the checkpointed step.
std::vector<TrainLogEntry> fit(net::Model& model,
                               const std::vector<SequenceSample>& dataset,
                               const TrainConfig& cfg,
                               const std::string& resume_path = {},
                               const LogSink& sink = {});

}  // namespace mmsf::train
