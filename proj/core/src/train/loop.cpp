// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>

#include "mmsf/ad/graph.hpp"
#include "mmsf/core/log.hpp"
#include "mmsf/losses/losses.hpp"
#include "mmsf/net/checkpoint.hpp"
#include "mmsf/train/train.hpp"

namespace mmsf::train {

namespace {

// splitmix64 finalizer over (seed, step): every step gets an independent
// generator, so a resumed run consumes the identical augmentation stream.
std::uint64_t step_seed(std::uint64_t seed, long step) {
  std::uint64_t z =
      seed + 0x9e3779b97f4a7c15ull * (static_cast<std::uint64_t>(step) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Tensor scalar_tensor(double v) {
  Tensor t({1});
  t[0] = v;
  return t;
}

net::Checkpoint bundle_train_state(const net::Model& model,
                                   const AdamState& opt, long next_step) {
  net::Checkpoint ckpt = net::snapshot(model);
  for (const auto& [name, t] : opt.m) ckpt.arrays.emplace("optim.m/" + name, t);
  for (const auto& [name, t] : opt.v) ckpt.arrays.emplace("optim.v/" + name, t);
  ckpt.arrays.emplace("optim.t", scalar_tensor(static_cast<double>(opt.t)));
  ckpt.arrays.emplace("train.next_step",
                      scalar_tensor(static_cast<double>(next_step)));
  return ckpt;
}

long restore_train_state(net::Model& model, AdamState& opt,
                         const net::Checkpoint& ckpt) {
  net::apply_checkpoint(model, ckpt);
  opt = AdamState{};
  for (const auto& [name, t] : ckpt.arrays) {
    if (name.rfind("optim.m/", 0) == 0) opt.m.emplace(name.substr(8), t);
    if (name.rfind("optim.v/", 0) == 0) opt.v.emplace(name.substr(8), t);
  }
  auto it = ckpt.arrays.find("optim.t");
  if (it != ckpt.arrays.end()) opt.t = std::llround(it->second[0]);
  it = ckpt.arrays.find("train.next_step");
  if (it == ckpt.arrays.end()) {
    throw std::runtime_error("resume: checkpoint has no training position");
  }
  return std::llround(it->second[0]);
}

}  // namespace

StepResult train_step(net::Model& model, const SequenceSample& sample,
                      AdamState& opt, const TrainConfig& cfg, long step,
                      int epoch) {
  if (sample.num_frames() != cfg.seq_len) {
    throw std::invalid_argument("train_step: expected seq_len frames");
  }
  if (sample.right_frames.size() != sample.left_frames.size()) {
    throw std::invalid_argument("train_step: right views required");
  }
  model.params().zero_grads();
  net::ForwardResult fwd = model.forward(sample);
  const bool detached = detach_active(epoch, cfg);
  losses::LossReport rep =
      losses::total_sequence_loss(fwd.levels, sample, cfg.loss_weights, detached);
  const double total = rep.total->value.item();
  if (!std::isfinite(total)) {
    throw std::runtime_error("train_step " + std::to_string(step) +
                             ": non-finite loss");
  }
  ad::backward(rep.total);
  for (const auto& [name, v] : model.params().all()) {
    if (!v->has_grad()) continue;
    const Tensor& g = v->grad();
    for (long i = 0; i < g.numel(); ++i) {
      if (!std::isfinite(g[i])) {
        throw std::runtime_error("train_step " + std::to_string(step) +
                                 ": non-finite gradient in " + name);
      }
    }
  }
  const double lr = lr_at_step(step, cfg);
  adam_step(model.params(), opt, lr, cfg);
  return {std::move(rep), lr, detached};
}

std::vector<TrainLogEntry> fit(net::Model& model,
                               const std::vector<SequenceSample>& dataset,
                               const TrainConfig& cfg,
                               const std::string& resume_path,
                               const LogSink& sink) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("fit: empty dataset");

  AdamState opt;
  long start = 0;
  if (!resume_path.empty()) {
    start = restore_train_state(model, opt, net::load_checkpoint(resume_path));
  }

  std::vector<TrainLogEntry> log;
  const long per_epoch = static_cast<long>(dataset.size());
  for (long step = start; step < cfg.total_steps; ++step) {
    const int epoch = static_cast<int>(step / per_epoch);
    std::mt19937_64 rng(step_seed(cfg.seed, step));
    const SequenceSample& raw = dataset[step % per_epoch];
    const SequenceSample sample =
        cfg.augment ? augment_sequence(raw, rng, cfg.train_h, cfg.train_w)
                    : raw;
    StepResult r = train_step(model, sample, opt, cfg, step, epoch);
    TrainLogEntry entry{step,
                        r.lr,
                        r.report.total->value.item(),
                        r.report.l_d,
                        r.report.l_sf,
                        r.report.lambda_sf};
    log.push_back(entry);
    log::write(log::Level::kInfo,
               "step %ld lr %.8g L_total %.8g L_d %.8g L_sf %.8g lambda_sf %.8g",
               entry.step, entry.lr, entry.l_total, entry.l_d, entry.l_sf,
               entry.lambda_sf);
    if (sink) sink(entry);

    const bool due = cfg.checkpoint_every > 0 &&
                     ((step + 1) % cfg.checkpoint_every == 0 ||
                      step + 1 == cfg.total_steps);
    if (due && !cfg.checkpoint_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof name, "/step_%08ld.ckpt", step + 1);
      net::save_checkpoint(cfg.checkpoint_dir + name,
                           bundle_train_state(model, opt, step + 1));
    }
  }
  return log;
}

}  // namespace mmsf::train
