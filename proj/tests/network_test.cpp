// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "mmsf/ad/image_ops.hpp"
#include "mmsf/ad/ops.hpp"
#include "mmsf/losses/losses.hpp"
#include "mmsf/net/checkpoint.hpp"
#include "mmsf/net/model.hpp"
#include "testutil.hpp"

namespace mmsf {
namespace {

using namespace mmsf::ad;
using namespace mmsf::net;
using test::random_tensor;
using test::smooth_tensor;

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.width_multiplier = 0.05;
  return cfg;
}

StereoRig test_rig() {
  StereoRig rig;
  rig.intrinsics = {64.0, 64.0, 63.5, 31.5};
  rig.baseline = 0.5;
  return rig;
}

Tensor image(std::mt19937_64& rng, int h, int w) {
  Tensor t = smooth_tensor({3, h, w}, rng, 0.4);
  for (long i = 0; i < t.numel(); ++i) t[i] = 0.5 + t[i];
  return t;
}

SequenceSample make_sample(std::mt19937_64& rng, int frames, int h, int w) {
  SequenceSample s;
  s.rig = test_rig();
  for (int t = 0; t < frames; ++t) {
    s.left_frames.push_back(image(rng, h, w));
    s.right_frames.push_back(image(rng, h, w));
  }
  return s;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  EXPECT_TRUE(a.same_shape(b));
  double m = 0.0;
  for (long i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

TEST(Encoder, PyramidShapesCoarseToFine) {
  Model model(tiny_config(), 1);
  std::mt19937_64 rng(2);
  auto pyr = model.encode_pyramid(image(rng, 64, 128));
  ASSERT_EQ(pyr.size(), 6u);
  int h = 1, w = 2;  // 64/2^6 x 128/2^6
  for (int li = 0; li < 6; ++li) {
    EXPECT_EQ(pyr[li]->value.channels(),
              model.config().encoder_channels(5 - li));
    EXPECT_EQ(pyr[li]->value.height(), h);
    EXPECT_EQ(pyr[li]->value.width(), w);
    h *= 2;
    w *= 2;
  }
}

TEST(Encoder, RejectsIndivisibleInput) {
  Model model(tiny_config(), 1);
  std::mt19937_64 rng(3);
  EXPECT_THROW(model.encode_pyramid(image(rng, 48, 128)),
               std::invalid_argument);
}

TEST(Params, SameSeedSameWeights) {
  Model a(tiny_config(), 7), b(tiny_config(), 7), c(tiny_config(), 8);
  auto sa = a.state_arrays(), sb = b.state_arrays(), sc = c.state_arrays();
  ASSERT_EQ(sa.size(), sb.size());
  double diff_same = 0.0, diff_other = 0.0;
  for (const auto& [name, t] : sa) {
    diff_same = std::max(diff_same, max_abs_diff(t, sb.at(name)));
    diff_other = std::max(diff_other, max_abs_diff(t, sc.at(name)));
  }
  EXPECT_EQ(diff_same, 0.0);
  EXPECT_GT(diff_other, 0.0);
}

TEST(Params, FingerprintSeparatesConfigurations) {
  ModelConfig a = tiny_config();
  ModelConfig b = a;
  b.correlation_radius = 3;
  ModelConfig c = a;
  c.width_multiplier = 0.25;
  EXPECT_NE(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), c.fingerprint());
  EXPECT_EQ(a.fingerprint(), tiny_config().fingerprint());
}

TEST(Params, SplitDecoderUndercutsJointReference) {
  for (double m : {0.05, 0.25, 1.0}) {
    ModelConfig cfg;
    cfg.width_multiplier = m;
    Model model(cfg, 1);
    const long ours = model.decoder_parameter_count();
    const long ref = joint_reference_decoder_count(cfg);
    EXPECT_GT(ours, 0);
    EXPECT_LE(ours, static_cast<long>(0.92 * ref))
        << "multiplier " << m << ": " << ours << " vs reference " << ref;
  }
}

TEST(Correlation, SelfVolumePeaksAtZeroOffset) {
  std::mt19937_64 rng(11);
  const int r = 2, side = 2 * r + 1;
  Var f = normalize_features(constant(random_tensor({6, 8, 9}, rng)));
  Var cv = correlation_volume(f, f, r);
  ASSERT_EQ(cv->value.channels(), side * side);
  const int center = r * side + r;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 9; ++x) {
      // The normalization epsilon keeps the self product just under 1/C.
      EXPECT_NEAR(cv->value.at(center, y, x), 1.0 / 6.0, 1e-7);
      for (int o = 0; o < side * side; ++o) {
        EXPECT_LE(cv->value.at(o, y, x), cv->value.at(center, y, x) + 1e-12);
      }
    }
  }
}

TEST(Correlation, IntegerShiftMovesTheArgmax) {
  std::mt19937_64 rng(12);
  Tensor base = random_tensor({4, 8, 10}, rng);
  // Content moves right by one pixel, so f1(p) matches f2(p + (0,+1)) and the
  // argmax over offsets must land on dx=+1 at every interior pixel.
  Tensor shifted({4, 8, 10});
  for (int c = 0; c < 4; ++c) {
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 10; ++x) {
        shifted.at(c, y, x) = base.at(c, y, x == 0 ? 0 : x - 1);
      }
    }
  }
  const int r = 2, side = 2 * r + 1;
  Var cv = correlation_volume(normalize_features(constant(base)),
                              normalize_features(constant(shifted)), r);
  const int expect_ch = r * side + (r + 1);  // offset (dy=0, dx=+1)
  for (int y = 2; y < 6; ++y) {
    for (int x = 2; x < 7; ++x) {
      int best = 0;
      for (int o = 1; o < side * side; ++o) {
        if (cv->value.at(o, y, x) > cv->value.at(best, y, x)) best = o;
      }
      EXPECT_EQ(best, expect_ch) << "pixel " << y << "," << x;
    }
  }
}

TEST(ConvLSTM, ZeroIsAFixedPointWithZeroBias) {
  std::mt19937_64 rng(13);
  const int hid = 3, in = 5, h = 4, w = 6;
  Var wgt = constant(random_tensor({4 * hid, in + hid, 3, 3}, rng));
  Var bias = constant(Tensor({4 * hid}));
  StateVars s{constant(Tensor({hid, h, w})), constant(Tensor({hid, h, w}))};
  StateVars next = convlstm_step(constant(Tensor({in, h, w})), s, wgt, bias);
  EXPECT_EQ(max_abs_diff(next.h->value, Tensor({hid, h, w})), 0.0);
  EXPECT_EQ(max_abs_diff(next.c->value, Tensor({hid, h, w})), 0.0);
}

TEST(ConvLSTM, StateStaysBoundedUnderRepeatedInput) {
  std::mt19937_64 rng(14);
  const int hid = 3, in = 5, h = 4, w = 6;
  Var wgt = constant(random_tensor({4 * hid, in + hid, 3, 3}, rng, -0.3, 0.3));
  Var bias = constant(random_tensor({4 * hid}, rng, -0.1, 0.1));
  Var x = constant(random_tensor({in, h, w}, rng));
  StateVars s{constant(Tensor({hid, h, w})), constant(Tensor({hid, h, w}))};
  for (int t = 0; t < 100; ++t) {
    s = convlstm_step(x, s, wgt, bias);
    s = {constant(s.h->value), constant(s.c->value)};  // drop the graph
  }
  double peak = 0.0;
  for (long i = 0; i < s.h->value.numel(); ++i) {
    peak = std::max(peak, std::abs(s.h->value[i]));
  }
  EXPECT_LT(peak, 50.0);
  EXPECT_TRUE(std::isfinite(peak));
}

// Static scene, identical features: the transport flow is exactly zero (the
// rig below keeps the reprojection arithmetic dyadic) and every pixel passes
// the affinity gate, so the state comes through numerically intact.
TEST(StateWarp, StaticSceneIdenticalFeaturesIsNearIdentity) {
  std::mt19937_64 rng(15);
  Model model(tiny_config(), 1);
  const int hid = model.config().lstm_channels(), h = 4, w = 8;
  StereoRig rig;
  rig.intrinsics = {16.0, 16.0, 3.5, 1.5};
  rig.baseline = 1.0;
  StateVars s{constant(random_tensor({hid, h, w}, rng)),
              constant(random_tensor({hid, h, w}, rng))};
  Tensor feat = random_tensor({6, h, w}, rng);
  StateVars out = model.warp_lstm_state(s, Tensor({3, h, w}),
                                        Tensor({1, h, w}, 4.0), constant(feat),
                                        constant(feat), rig);
  EXPECT_LT(max_abs_diff(out.h->value, s.h->value), 1e-7);
  EXPECT_LT(max_abs_diff(out.c->value, s.c->value), 1e-7);
}

TEST(StateWarp, MismatchedFeaturesClearTheState) {
  std::mt19937_64 rng(16);
  Model model(tiny_config(), 1);
  const int hid = model.config().lstm_channels(), h = 4, w = 8;
  StereoRig rig;
  rig.intrinsics = {16.0, 16.0, 3.5, 1.5};
  rig.baseline = 1.0;
  Tensor fa({2, h, w}), fb({2, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      fa.at(0, y, x) = 1.0;  // orthogonal channel patterns
      fb.at(1, y, x) = 1.0;
    }
  }
  StateVars s{constant(random_tensor({hid, h, w}, rng)),
              constant(random_tensor({hid, h, w}, rng))};
  StateVars out = model.warp_lstm_state(s, Tensor({3, h, w}),
                                        Tensor({1, h, w}, 4.0), constant(fa),
                                        constant(fb), rig);
  EXPECT_EQ(max_abs_diff(out.h->value, Tensor({hid, h, w})), 0.0);
  EXPECT_EQ(max_abs_diff(out.c->value, Tensor({hid, h, w})), 0.0);
}

// Scene flow s_x = Z / fx induces an exact one-pixel rightward flow, so the
// splat must transport the state by one column and the vacated first column
// must come back empty.
TEST(StateWarp, UnitPixelFlowTransportsState) {
  std::mt19937_64 rng(17);
  Model model(tiny_config(), 1);
  const int hid = model.config().lstm_channels(), h = 4, w = 8;
  StereoRig rig;
  rig.intrinsics = {16.0, 16.0, 3.5, 1.5};
  rig.baseline = 1.0;
  Tensor sf({3, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) sf.at(0, y, x) = 0.25;  // Z=4, fx=16
  }
  Tensor d({1, h, w}, 4.0);
  Tensor fprev = random_tensor({5, h, w}, rng);
  Tensor fcur({5, h, w});
  for (int c = 0; c < 5; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 1; x < w; ++x) fcur.at(c, y, x) = fprev.at(c, y, x - 1);
    }
  }
  StateVars s{constant(random_tensor({hid, h, w}, rng)),
              constant(random_tensor({hid, h, w}, rng))};
  StateVars out = model.warp_lstm_state(s, sf, d, constant(fprev),
                                        constant(fcur), rig);
  for (int c = 0; c < hid; ++c) {
    for (int y = 0; y < h; ++y) {
      EXPECT_EQ(out.h->value.at(c, y, 0), 0.0);
      for (int x = 1; x < w; ++x) {
        EXPECT_NEAR(out.h->value.at(c, y, x), s.h->value.at(c, y, x - 1), 1e-7);
      }
    }
  }
}

TEST(DecodeLevel, DisparityRespectsTheLevelCeiling) {
  std::mt19937_64 rng(18);
  Model model(tiny_config(), 5);
  const auto& cfg = model.config();
  const int h = 4, w = 8, cv_ch = 81;
  Var cv_f = constant(random_tensor({cv_ch, h, w}, rng));
  Var cv_b = constant(random_tensor({cv_ch, h, w}, rng));
  Var feat = constant(random_tensor({cfg.encoder_channels(5), h, w}, rng));
  StateVars zero{constant(Tensor({cfg.lstm_channels(), h, w})),
                 constant(Tensor({cfg.lstm_channels(), h, w}))};
  auto out = model.decode_level(cv_f, cv_b, feat, {}, zero, 0, w);
  const double ceiling = cfg.disparity_scale * w;
  for (long i = 0; i < out.d_f->value.numel(); ++i) {
    EXPECT_GT(out.d_f->value[i], 0.0);
    EXPECT_LT(out.d_f->value[i], ceiling);
    EXPECT_GT(out.d_b->value[i], 0.0);
    EXPECT_LT(out.d_b->value[i], ceiling);
  }
}

TEST(DecodeLevel, EmptyPrevMatchesExplicitZeros) {
  std::mt19937_64 rng(19);
  Model model(tiny_config(), 5);
  const auto& cfg = model.config();
  const int h = 4, w = 8;
  Var cv_f = constant(random_tensor({81, h, w}, rng));
  Var cv_b = constant(random_tensor({81, h, w}, rng));
  Var feat = constant(random_tensor({cfg.encoder_channels(5), h, w}, rng));
  StateVars zero{constant(Tensor({cfg.lstm_channels(), h, w})),
                 constant(Tensor({cfg.lstm_channels(), h, w}))};
  PrevLevel explicit_zeros;
  explicit_zeros.s_f = explicit_zeros.s_b = constant(Tensor({3, h, w}));
  explicit_zeros.d_f = explicit_zeros.d_b = constant(Tensor({1, h, w}));
  explicit_zeros.h_f = explicit_zeros.h_b =
      constant(Tensor({cfg.lstm_channels(), h, w}));
  auto a = model.decode_level(cv_f, cv_b, feat, {}, zero, 0, w);
  auto b = model.decode_level(cv_f, cv_b, feat, explicit_zeros, zero, 0, w);
  EXPECT_EQ(max_abs_diff(a.s_f->value, b.s_f->value), 0.0);
  EXPECT_EQ(max_abs_diff(a.d_f->value, b.d_f->value), 0.0);
  EXPECT_EQ(max_abs_diff(a.s_b->value, b.s_b->value), 0.0);
}

// Both directions run the same weights; swapping the cost volumes and the
// per-direction inputs must swap the outputs bitwise.
TEST(DecodeLevel, DirectionsShareWeightsSymmetrically) {
  std::mt19937_64 rng(20);
  Model model(tiny_config(), 5);
  const auto& cfg = model.config();
  const int h = 4, w = 8;
  Var cv_f = constant(random_tensor({81, h, w}, rng));
  Var cv_b = constant(random_tensor({81, h, w}, rng));
  Var feat = constant(random_tensor({cfg.encoder_channels(5), h, w}, rng));
  StateVars zero{constant(Tensor({cfg.lstm_channels(), h, w})),
                 constant(Tensor({cfg.lstm_channels(), h, w}))};
  PrevLevel prev;
  prev.s_f = constant(smooth_tensor({3, h, w}, rng, 0.1));
  prev.s_b = constant(smooth_tensor({3, h, w}, rng, 0.1));
  prev.d_f = constant(random_tensor({1, h, w}, rng, 0.5, 1.5));
  prev.d_b = constant(random_tensor({1, h, w}, rng, 0.5, 1.5));
  prev.h_f = constant(random_tensor({cfg.lstm_channels(), h, w}, rng));
  prev.h_b = constant(random_tensor({cfg.lstm_channels(), h, w}, rng));
  PrevLevel swapped;
  swapped.s_f = prev.s_b;
  swapped.s_b = prev.s_f;
  swapped.d_f = prev.d_b;
  swapped.d_b = prev.d_f;
  swapped.h_f = prev.h_b;
  swapped.h_b = prev.h_f;
  auto a = model.decode_level(cv_f, cv_b, feat, prev, zero, 0, w);
  auto b = model.decode_level(cv_b, cv_f, feat, swapped, zero, 0, w);
  EXPECT_EQ(max_abs_diff(a.s_f->value, b.s_b->value), 0.0);
  EXPECT_EQ(max_abs_diff(a.s_b->value, b.s_f->value), 0.0);
  EXPECT_EQ(max_abs_diff(a.d_f->value, b.d_b->value), 0.0);
  EXPECT_EQ(max_abs_diff(a.h_f->value, b.h_b->value), 0.0);
}

TEST(Forward, ShapesAndDeterminism) {
  std::mt19937_64 rng(21);
  Model model(tiny_config(), 9);
  SequenceSample sample = make_sample(rng, 5, 64, 128);
  auto res = model.forward(sample);
  const int levels = model.config().decode_levels();
  ASSERT_EQ(static_cast<int>(res.levels.size()), levels);
  for (int li = 0; li < levels; ++li) {
    ASSERT_EQ(res.levels[li].size(), 3u);  // interior frames 1..3
    for (const auto& est : res.levels[li]) {
      EXPECT_EQ(est.s_f->value.height(), 64);
      EXPECT_EQ(est.s_f->value.width(), 128);
      EXPECT_EQ(est.d->value.channels(), 1);
      for (long i = 0; i < est.d->value.numel(); ++i) {
        EXPECT_GT(est.d->value[i], 0.0);
      }
    }
  }
  ASSERT_EQ(res.bundles.size(), 3u);
  EXPECT_TRUE(res.bundles[0].d.same_shape(Tensor({1, 64, 128})));
  ASSERT_EQ(static_cast<int>(res.carry.states.size()), levels);
  EXPECT_TRUE(res.carry.s_f.same_shape(Tensor({3, 64, 128})));

  auto res2 = model.forward(sample);
  EXPECT_EQ(max_abs_diff(res.bundles[2].s_f, res2.bundles[2].s_f), 0.0);
  EXPECT_EQ(max_abs_diff(res.carry.states[4].h, res2.carry.states[4].h), 0.0);
}

TEST(Forward, CarryThreadingMatchesWholeSequenceBitwise) {
  std::mt19937_64 rng(22);
  Model model(tiny_config(), 10);
  SequenceSample whole = make_sample(rng, 5, 64, 64);
  auto full = model.forward(whole);

  Carry carry;
  std::vector<EstimateBundle> stitched;
  for (int start = 0; start + 2 < 5; ++start) {
    SequenceSample trip;
    trip.rig = whole.rig;
    for (int k = 0; k < 3; ++k) {
      trip.left_frames.push_back(whole.left_frames[start + k]);
      trip.right_frames.push_back(whole.right_frames[start + k]);
    }
    auto res = model.forward(trip, carry);
    ASSERT_EQ(res.bundles.size(), 1u);
    stitched.push_back(res.bundles[0]);
    carry = res.carry;
  }
  ASSERT_EQ(stitched.size(), full.bundles.size());
  for (size_t j = 0; j < stitched.size(); ++j) {
    EXPECT_EQ(max_abs_diff(stitched[j].s_f, full.bundles[j].s_f), 0.0);
    EXPECT_EQ(max_abs_diff(stitched[j].s_b, full.bundles[j].s_b), 0.0);
    EXPECT_EQ(max_abs_diff(stitched[j].d, full.bundles[j].d), 0.0);
  }
  for (size_t li = 0; li < carry.states.size(); ++li) {
    EXPECT_EQ(max_abs_diff(carry.states[li].h, full.carry.states[li].h), 0.0);
    EXPECT_EQ(max_abs_diff(carry.states[li].c, full.carry.states[li].c), 0.0);
  }
}

TEST(Forward, TwoFrameModeRunsWithoutRecurrence) {
  std::mt19937_64 rng(23);
  ModelConfig cfg = tiny_config();
  cfg.two_frame_mode = true;
  Model model(cfg, 11);
  SequenceSample sample = make_sample(rng, 2, 64, 64);
  auto res = model.forward(sample);
  ASSERT_EQ(res.bundles.size(), 1u);
  EXPECT_TRUE(res.carry.empty());
  EXPECT_TRUE(res.bundles[0].s_f.same_shape(Tensor({3, 64, 64})));

  SequenceSample longer = make_sample(rng, 4, 64, 64);
  EXPECT_EQ(model.forward(longer).bundles.size(), 3u);
}

TEST(Forward, GradientsReachEveryParameterExceptTheMaskGate) {
  std::mt19937_64 rng(24);
  Model model(tiny_config(), 12);
  SequenceSample sample = make_sample(rng, 4, 64, 64);
  auto res = model.forward(sample);
  losses::LossWeights w;
  auto rep = losses::total_sequence_loss(res.levels, sample, w, false);
  backward(rep.total);
  for (const auto& [name, v] : model.params().all()) {
    bool any = false;
    if (v->has_grad()) {
      const Tensor& g = v->grad();
      for (long i = 0; i < g.numel() && !any; ++i) any = g[i] != 0.0;
    }
    if (name.rfind("decoder.mask.", 0) == 0) {
      EXPECT_FALSE(any) << name << " must stay outside the gradient graph";
    } else {
      EXPECT_TRUE(any) << name << " received no gradient";
    }
  }
}

TEST(Forward, FiniteUnderRandomReinitialization) {
  std::mt19937_64 rng(25);
  SequenceSample sample = make_sample(rng, 3, 64, 64);
  for (int trial = 0; trial < 20; ++trial) {
    Model model(tiny_config(), 1000 + trial);
    auto res = model.forward(sample);
    for (const auto& b : res.bundles) {
      for (long i = 0; i < b.s_f.numel(); ++i) {
        ASSERT_TRUE(std::isfinite(b.s_f[i])) << "trial " << trial;
      }
      for (long i = 0; i < b.d.numel(); ++i) {
        ASSERT_TRUE(std::isfinite(b.d[i])) << "trial " << trial;
      }
    }
  }
}

TEST(Checkpoint, RoundTripRestoresEveryArrayBitwise) {
  Model model(tiny_config(), 30);
  const std::string path = testing::TempDir() + "net_roundtrip.ckpt";
  save_checkpoint(path, snapshot(model));
  Checkpoint loaded = load_checkpoint(path);
  EXPECT_EQ(loaded.fingerprint, model.config().fingerprint());
  Model other(tiny_config(), 31);
  apply_checkpoint(other, loaded);
  auto sa = model.state_arrays(), sb = other.state_arrays();
  for (const auto& [name, t] : sa) {
    EXPECT_EQ(max_abs_diff(t, sb.at(name)), 0.0) << name;
  }
  std::remove(path.c_str());
}

TEST(Checkpoint, RejectsForeignConfigurationsAndShapes) {
  Model model(tiny_config(), 32);
  Checkpoint ckpt = snapshot(model);

  ModelConfig other_cfg = tiny_config();
  other_cfg.correlation_radius = 3;
  Model other(other_cfg, 32);
  EXPECT_THROW(apply_checkpoint(other, ckpt), std::runtime_error);

  Checkpoint misshapen = ckpt;
  misshapen.arrays.at("decoder.mask.b") = Tensor({2});
  EXPECT_THROW(apply_checkpoint(model, misshapen), std::runtime_error);

  Checkpoint incomplete = ckpt;
  incomplete.arrays.erase("decoder.mask.b");
  EXPECT_THROW(apply_checkpoint(model, incomplete), std::runtime_error);

  const std::string path = testing::TempDir() + "net_badmagic.ckpt";
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    ASSERT_NE(f, nullptr);
    std::fputs("not a checkpoint", f);
    std::fclose(f);
  }
  EXPECT_THROW(load_checkpoint(path), std::runtime_error);
  std::remove(path.c_str());
}

}  // namespace
}  // namespace mmsf
