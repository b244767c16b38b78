// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <vector>

#include "mmsf/ad/graph.hpp"
#include "mmsf/losses/losses.hpp"
#include "mmsf/net/model.hpp"
#include "mmsf/train/train.hpp"
#include "testutil.hpp"

namespace mmsf {
namespace {

using namespace mmsf::train;
using test::smooth_tensor;

net::ModelConfig tiny_config() {
  net::ModelConfig cfg;
  cfg.width_multiplier = 0.05;
  return cfg;
}

Tensor image(std::mt19937_64& rng, int h, int w) {
  Tensor t = smooth_tensor({3, h, w}, rng, 0.4);
  for (long i = 0; i < t.numel(); ++i) t[i] = 0.5 + t[i];
  return t;
}

SequenceSample make_sample(std::mt19937_64& rng, int frames, int h, int w) {
  SequenceSample s;
  s.rig.intrinsics = {64.0, 64.0, 63.5, 31.5};
  s.rig.baseline = 0.5;
  for (int t = 0; t < frames; ++t) {
    s.left_frames.push_back(image(rng, h, w));
    s.right_frames.push_back(image(rng, h, w));
  }
  return s;
}

TEST(Schedule, FullRunHitsTheDocumentedValues) {
  TrainConfig cfg;
  EXPECT_DOUBLE_EQ(lr_at_step(0, cfg), 2e-4);
  EXPECT_DOUBLE_EQ(lr_at_step(149999, cfg), 2e-4);
  EXPECT_DOUBLE_EQ(lr_at_step(150000, cfg), 1e-4);
  EXPECT_DOUBLE_EQ(lr_at_step(250000, cfg), 5e-5);
  EXPECT_DOUBLE_EQ(lr_at_step(360000, cfg), 1.25e-5);
  EXPECT_THROW(lr_at_step(-1, cfg), std::out_of_range);
  EXPECT_THROW(lr_at_step(400000, cfg), std::out_of_range);
}

TEST(Schedule, ScalesWithTotalStepsAndStaysMonotone) {
  TrainConfig cfg;
  cfg.total_steps = 4000;
  EXPECT_DOUBLE_EQ(lr_at_step(1499, cfg), 2e-4);
  EXPECT_DOUBLE_EQ(lr_at_step(1500, cfg), 1e-4);
  double prev = lr_at_step(0, cfg);
  int drops = 0;
  for (long s = 1; s < cfg.total_steps; ++s) {
    const double lr = lr_at_step(s, cfg);
    EXPECT_LE(lr, prev);
    if (lr < prev) ++drops;
    prev = lr;
  }
  EXPECT_EQ(drops, 4);
}

TEST(Schedule, DetachWindowCoversTheFirstEpochs) {
  TrainConfig cfg;
  EXPECT_TRUE(detach_active(0, cfg));
  EXPECT_TRUE(detach_active(1, cfg));
  EXPECT_FALSE(detach_active(2, cfg));
  cfg.detach_epochs = 0;
  EXPECT_FALSE(detach_active(0, cfg));
  EXPECT_THROW(detach_active(-1, cfg), std::invalid_argument);
}

TEST(Augment, ParameterDrawsStayInRange) {
  std::mt19937_64 rng(5);
  int flips = 0;
  for (int i = 0; i < 200; ++i) {
    AugmentParams p = draw_augment_params(rng);
    flips += p.flip;
    EXPECT_GE(p.scale, 0.93);
    EXPECT_LE(p.scale, 1.0);
    EXPECT_GE(p.shift_x, -0.035);
    EXPECT_LE(p.shift_x, 0.035);
    EXPECT_GE(p.gamma, 0.8);
    EXPECT_LE(p.gamma, 1.2);
    EXPECT_GE(p.brightness, 0.5);
    EXPECT_LE(p.brightness, 2.0);
    for (double c : p.color) {
      EXPECT_GE(c, 0.8);
      EXPECT_LE(c, 1.2);
    }
  }
  EXPECT_GT(flips, 60);
  EXPECT_LT(flips, 140);
}

TEST(Augment, SameSeedSameOutput) {
  std::mt19937_64 rng_data(6);
  SequenceSample s = make_sample(rng_data, 4, 64, 64);
  std::mt19937_64 a(77), b(77);
  SequenceSample ra = augment_sequence(s, a, 64, 64);
  SequenceSample rb = augment_sequence(s, b, 64, 64);
  ASSERT_EQ(ra.num_frames(), 4);
  for (int t = 0; t < 4; ++t) {
    for (long i = 0; i < ra.left_frames[t].numel(); ++i) {
      ASSERT_EQ(ra.left_frames[t][i], rb.left_frames[t][i]);
    }
  }
  EXPECT_EQ(ra.rig.intrinsics.fx, rb.rig.intrinsics.fx);
  EXPECT_EQ(ra.rig.intrinsics.cx, rb.rig.intrinsics.cx);
}

TEST(Augment, FlipAloneIsAnInvolution) {
  std::mt19937_64 rng(7);
  SequenceSample s = make_sample(rng, 4, 16, 32);
  AugmentParams flip;
  flip.flip = true;
  SequenceSample once = apply_augment(s, flip, 16, 32);
  EXPECT_NE(once.left_frames[0][0], s.left_frames[0][0]);
  SequenceSample twice = apply_augment(once, flip, 16, 32);
  for (int t = 0; t < 4; ++t) {
    for (long i = 0; i < s.left_frames[t].numel(); ++i) {
      ASSERT_EQ(twice.left_frames[t][i], s.left_frames[t][i]);
      ASSERT_EQ(twice.right_frames[t][i], s.right_frames[t][i]);
    }
  }
  EXPECT_DOUBLE_EQ(twice.rig.intrinsics.cx, s.rig.intrinsics.cx);
  EXPECT_DOUBLE_EQ(twice.rig.intrinsics.fx, s.rig.intrinsics.fx);
}

TEST(Augment, GammaFollowsThePowerCurve) {
  SequenceSample s;
  s.rig.intrinsics = {16.0, 16.0, 7.5, 3.5};
  s.rig.baseline = 0.5;
  const double probes[3] = {0.25, 0.5, 0.75};
  Tensor frame({3, 8, 16}, 0.4);
  for (int k = 0; k < 3; ++k) frame.at(0, 0, k) = probes[k];
  for (int t = 0; t < 3; ++t) {
    s.left_frames.push_back(frame);
    s.right_frames.push_back(frame);
  }
  AugmentParams p;
  p.photometric = true;
  p.gamma = 1.2;
  SequenceSample out = apply_augment(s, p, 8, 16);
  for (int k = 0; k < 3; ++k) {
    EXPECT_DOUBLE_EQ(out.left_frames[0].at(0, 0, k),
                     std::pow(probes[k], 1.2));
  }
}

TEST(Augment, PhotometricOutputStaysInUnitRange) {
  std::mt19937_64 rng(8);
  SequenceSample s = make_sample(rng, 4, 16, 32);
  for (int trial = 0; trial < 20; ++trial) {
    SequenceSample out = augment_sequence(s, rng, 16, 32);
    for (const Tensor& t : out.left_frames) {
      for (long i = 0; i < t.numel(); ++i) {
        ASSERT_GE(t[i], 0.0);
        ASSERT_LE(t[i], 1.0);
      }
    }
    ASSERT_EQ(out.num_frames(), 4);
  }
}

TEST(Augment, PureUpscaleMatchesTheIntrinsicsContract) {
  std::mt19937_64 rng(9);
  SequenceSample s = make_sample(rng, 4, 16, 32);
  AugmentParams identity;  // scale 1, no shift: geometry is a 2x resize
  SequenceSample out = apply_augment(s, identity, 32, 64);
  Intrinsics expect = s.rig.intrinsics.scaled(2.0, 2.0);
  EXPECT_DOUBLE_EQ(out.rig.intrinsics.fx, expect.fx);
  EXPECT_DOUBLE_EQ(out.rig.intrinsics.fy, expect.fy);
  EXPECT_DOUBLE_EQ(out.rig.intrinsics.cx, expect.cx);
  EXPECT_DOUBLE_EQ(out.rig.intrinsics.cy, expect.cy);
  EXPECT_EQ(out.left_frames[0].height(), 32);
  EXPECT_EQ(out.left_frames[0].width(), 64);
}

TEST(Adam, FirstStepMatchesTheClosedForm) {
  net::ParamStore store(1);
  ad::Var p = store.conv("w", 1, 1, 1);
  const double start = p->value[0];
  p->ensure_grad()[0] = 0.5;
  AdamState st;
  TrainConfig cfg;
  adam_step(store, st, 0.1, cfg);
  // Bias corrections cancel at t=1: update = lr * g / (|g| + eps).
  EXPECT_DOUBLE_EQ(p->value[0], start - 0.1 * 0.5 / (0.5 + cfg.adam_eps));
  EXPECT_EQ(st.t, 1);
}

TEST(Adam, ZeroGradientLeavesParameterBitIdentical) {
  net::ParamStore store(2);
  ad::Var moving = store.conv("a", 1, 1, 1);
  ad::Var resting = store.conv("b", 1, 1, 1);
  const double before = resting->value[0];
  AdamState st;
  TrainConfig cfg;
  for (int i = 0; i < 5; ++i) {
    moving->ensure_grad()[0] = 1.0;
    adam_step(store, st, 0.01, cfg);
  }
  EXPECT_EQ(resting->value[0], before);
  EXPECT_NE(moving->value[0], 0.0);
}

TEST(TrainStep, DetachedEpochCutsSceneflowGradientsToDisparityHeads) {
  std::mt19937_64 rng(40);
  net::Model model(tiny_config(), 3);
  SequenceSample sample = make_sample(rng, 4, 64, 64);
  losses::LossWeights w;

  auto disp_grad_norm = [&](bool detach, bool probe_sf) {
    model.params().zero_grads();
    auto fwd = model.forward(sample);
    auto rep = losses::total_sequence_loss(fwd.levels, sample, w, detach);
    ad::backward(probe_sf ? rep.sf_term : rep.d_term);
    double norm = 0.0;
    for (const auto& [name, v] : model.params().all()) {
      if (name.find(".disp.") == std::string::npos || !v->has_grad()) continue;
      const Tensor& g = v->grad();
      for (long i = 0; i < g.numel(); ++i) norm += g[i] * g[i];
    }
    return norm;
  };

  EXPECT_EQ(disp_grad_norm(true, true), 0.0);
  EXPECT_GT(disp_grad_norm(true, false), 0.0);
  EXPECT_GT(disp_grad_norm(false, true), 0.0);
}

TEST(TrainStep, SameSeedSameReports) {
  std::mt19937_64 rng(41);
  SequenceSample sample = make_sample(rng, 4, 64, 64);
  TrainConfig cfg;
  cfg.seq_len = 4;
  std::vector<double> runs[2];
  for (int r = 0; r < 2; ++r) {
    net::Model model(tiny_config(), 9);
    AdamState opt;
    for (int k = 0; k < 3; ++k) {
      auto res = train_step(model, sample, opt, cfg, k, 0);
      runs[r].push_back(res.report.total->value.item());
    }
  }
  for (int k = 0; k < 3; ++k) EXPECT_EQ(runs[0][k], runs[1][k]);
}

TEST(TrainStep, LossDecreasesWhenOverfittingOneSample) {
  std::mt19937_64 rng(42);
  SequenceSample sample = make_sample(rng, 4, 64, 64);
  TrainConfig cfg;
  cfg.seq_len = 4;
  cfg.lr_initial = 1e-3;
  cfg.detach_epochs = 0;
  net::Model model(tiny_config(), 10);
  AdamState opt;
  std::vector<double> losses;
  for (int k = 0; k < 60; ++k) {
    losses.push_back(
        train_step(model, sample, opt, cfg, k, 0).report.total->value.item());
  }
  double head = 0.0, tail = 0.0;
  for (int k = 0; k < 15; ++k) head += losses[k];
  for (int k = 45; k < 60; ++k) tail += losses[k];
  EXPECT_LT(tail, head);
  EXPECT_TRUE(std::isfinite(losses.back()));
}

TEST(Fit, ZeroStepsLeaveTheModelUntouched) {
  std::mt19937_64 rng(43);
  net::Model model(tiny_config(), 11);
  auto before = model.state_arrays();
  TrainConfig cfg;
  cfg.total_steps = 0;
  auto log = fit(model, {make_sample(rng, 5, 64, 64)}, cfg);
  EXPECT_TRUE(log.empty());
  auto after = model.state_arrays();
  for (const auto& [name, t] : before) {
    const Tensor& u = after.at(name);
    for (long i = 0; i < t.numel(); ++i) ASSERT_EQ(t[i], u[i]);
  }
}

TEST(Fit, ResumeReproducesTheUninterruptedRun) {
  std::mt19937_64 rng(44);
  std::vector<SequenceSample> data = {make_sample(rng, 5, 64, 64),
                                      make_sample(rng, 5, 64, 64)};
  const std::string dir = testing::TempDir() + "fit_resume";
  std::filesystem::create_directories(dir);
  TrainConfig cfg;
  cfg.total_steps = 4;
  cfg.seq_len = 5;
  cfg.train_h = 64;
  cfg.train_w = 64;
  cfg.seed = 123;
  cfg.checkpoint_every = 2;
  cfg.checkpoint_dir = dir;

  net::Model straight(tiny_config(), 12);
  auto log_full = fit(straight, data, cfg);
  ASSERT_EQ(log_full.size(), 4u);

  net::Model resumed(tiny_config(), 12);
  auto log_tail = fit(resumed, data, cfg, dir + "/step_00000002.ckpt");
  ASSERT_EQ(log_tail.size(), 2u);
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(log_tail[k].step, log_full[k + 2].step);
    EXPECT_EQ(log_tail[k].l_total, log_full[k + 2].l_total);
    EXPECT_EQ(log_tail[k].l_d, log_full[k + 2].l_d);
    EXPECT_EQ(log_tail[k].lambda_sf, log_full[k + 2].lambda_sf);
  }
  auto sa = straight.state_arrays(), sb = resumed.state_arrays();
  for (const auto& [name, t] : sa) {
    const Tensor& u = sb.at(name);
    for (long i = 0; i < t.numel(); ++i) ASSERT_EQ(t[i], u[i]) << name;
  }
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace mmsf
