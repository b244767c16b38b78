// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include <gtest/gtest.h>

#include <cmath>

#include "mmsf/ad/ops.hpp"
#include "mmsf/geometry/geometry.hpp"
#include "testutil.hpp"

namespace mmsf {
namespace {

using namespace mmsf::ad;
using namespace mmsf::geometry;
using test::grad_check;
using test::random_tensor;
using test::smooth_tensor;

constexpr double kGradTol = 1e-3;

// Unit-focal rig with the principal point at pixel (0,0): projection reduces
// to u = X/Z, which keeps hand-computed cases exact.
StereoRig unit_rig() {
  StereoRig rig;
  rig.intrinsics = {1.0, 1.0, 0.0, 0.0};
  rig.baseline = 1.0;
  return rig;
}

TEST(Backproject, PrincipalPointLiesOnOpticalAxis) {
  Intrinsics k{100.0, 100.0, 32.0, 24.0};
  auto p = backproject(32.0, 24.0, 2.0, k);
  EXPECT_DOUBLE_EQ(p[0], 0.0);
  EXPECT_DOUBLE_EQ(p[1], 0.0);
  EXPECT_DOUBLE_EQ(p[2], 2.0);

  auto q = backproject(132.0, 24.0, 2.0, k);
  EXPECT_DOUBLE_EQ(q[0], 2.0);  // one focal length right of axis at depth 2
  EXPECT_DOUBLE_EQ(q[1], 0.0);

  EXPECT_THROW(backproject(0.0, 0.0, 0.0, k), std::domain_error);
  EXPECT_THROW(backproject(0.0, 0.0, -1.0, k), std::domain_error);
}

TEST(Reproject, ZeroSceneFlowGivesZeroFlow) {
  StereoRig rig;
  rig.intrinsics = {50.0, 45.0, 2.5, 1.5};
  rig.baseline = 0.54;
  std::mt19937_64 rng(31);
  Var d = constant(random_tensor({1, 4, 6}, rng, 2.0, 8.0));
  Var s = constant(Tensor({3, 4, 6}, 0.0));
  FlowResult r = reproject_with_sceneflow(d, s, rig);
  for (long i = 0; i < r.flow->value.numel(); ++i) {
    EXPECT_NEAR(r.flow->value[i], 0.0, 1e-9);
  }
  for (long i = 0; i < r.valid.numel(); ++i) EXPECT_EQ(r.valid[i], 1.0);
}

TEST(Reproject, UnitXTranslationAtUnitDepthIsOnePixel) {
  StereoRig rig = unit_rig();
  Var d = constant(Tensor({1, 3, 4}, 1.0));  // depth = fx*b/d = 1
  Tensor sf({3, 3, 4}, 0.0);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 4; ++x) sf.at(0, y, x) = 1.0;
  }
  FlowResult r = reproject_with_sceneflow(d, constant(sf), rig);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 4; ++x) {
      EXPECT_DOUBLE_EQ(r.flow->value.at(0, y, x), 1.0);
      EXPECT_DOUBLE_EQ(r.flow->value.at(1, y, x), 0.0);
    }
  }
}

TEST(Reproject, RecedingMotionContractsTowardPrincipalPoint) {
  StereoRig rig = unit_rig();
  rig.intrinsics.cx = 1.0;
  rig.intrinsics.cy = 1.0;
  Var d = constant(Tensor({1, 3, 3}, 1.0));  // depth 1 everywhere
  Tensor sf({3, 3, 3}, 0.0);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 3; ++x) sf.at(2, y, x) = 1.0;  // move to depth 2
  }
  FlowResult r = reproject_with_sceneflow(d, constant(sf), rig);
  // u' = (x - 1)/2 + 1, so the offset from the principal point halves.
  EXPECT_DOUBLE_EQ(r.flow->value.at(0, 1, 1), 0.0);
  EXPECT_DOUBLE_EQ(r.flow->value.at(1, 1, 1), 0.0);
  EXPECT_DOUBLE_EQ(r.flow->value.at(0, 0, 0), 0.5);
  EXPECT_DOUBLE_EQ(r.flow->value.at(1, 0, 0), 0.5);
  EXPECT_DOUBLE_EQ(r.flow->value.at(0, 2, 2), -0.5);
  EXPECT_DOUBLE_EQ(r.flow->value.at(1, 2, 2), -0.5);
}

TEST(Reproject, PointsBehindCameraAreFlaggedNotNaN) {
  StereoRig rig = unit_rig();
  Var d = constant(Tensor({1, 2, 2}, 1.0));
  Tensor sf({3, 2, 2}, 0.0);
  for (int i = 0; i < 4; ++i) sf[2 * 4 + i] = -2.0;  // depth 1 -> -1
  FlowResult r = reproject_with_sceneflow(d, constant(sf), rig);
  for (long i = 0; i < r.valid.numel(); ++i) EXPECT_EQ(r.valid[i], 0.0);
  for (long i = 0; i < r.flow->value.numel(); ++i) {
    EXPECT_TRUE(std::isfinite(r.flow->value[i]));
  }
}

TEST(FutureDisparity, ZeroForwardMotionIsIdentity) {
  StereoRig rig;
  rig.intrinsics = {64.0, 64.0, 3.0, 3.0};
  rig.baseline = 0.5;  // fx*b = 32
  std::mt19937_64 rng(32);
  Tensor d = random_tensor({1, 5, 7}, rng, 0.5, 64.0);
  FutureDisparity r =
      future_disparity(constant(d), constant(Tensor({1, 5, 7}, 0.0)), rig);
  for (long i = 0; i < d.numel(); ++i) {
    EXPECT_NEAR(r.d2->value[i], d[i], 1e-12);
    EXPECT_EQ(r.valid[i], 1.0);
  }
}

TEST(FutureDisparity, ScalesInverselyWithDisplacedDepth) {
  StereoRig rig;
  rig.intrinsics = {2.0, 2.0, 0.0, 0.0};
  rig.baseline = 1.0;  // fx*b = 2, so d = 1 puts the point at depth 2
  Var d = constant(Tensor({1, 1, 1}, 1.0));

  FutureDisparity away =
      future_disparity(d, constant(Tensor({1, 1, 1}, 2.0)), rig);
  EXPECT_DOUBLE_EQ(away.d2->value[0], 0.5);

  FutureDisparity toward =
      future_disparity(d, constant(Tensor({1, 1, 1}, -1.5)), rig);
  EXPECT_DOUBLE_EQ(toward.d2->value[0], 4.0);

  FutureDisparity behind =
      future_disparity(d, constant(Tensor({1, 1, 1}, -2.0)), rig);
  EXPECT_EQ(behind.valid[0], 0.0);
  EXPECT_TRUE(std::isfinite(behind.d2->value[0]));
}

TEST(BackwardWarp, ZeroFlowIsExactIdentity) {
  std::mt19937_64 rng(33);
  Tensor img = random_tensor({2, 3, 4}, rng);
  Sampled r = backward_warp(constant(img), constant(Tensor({2, 3, 4}, 0.0)));
  for (long i = 0; i < img.numel(); ++i) EXPECT_EQ(r.out->value[i], img[i]);
  for (long i = 0; i < r.mask.numel(); ++i) EXPECT_EQ(r.mask[i], 1.0);
}

TEST(BackwardWarp, IntegerShiftFetchesNeighborAndMasksEdge) {
  Tensor img({1, 2, 4});
  for (long i = 0; i < 8; ++i) img[i] = static_cast<double>(i);
  Tensor flow({2, 2, 4}, 0.0);
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 4; ++x) flow.at(0, y, x) = 1.0;
  }
  Sampled r = backward_warp(constant(img), constant(flow));
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 3; ++x) {
      EXPECT_DOUBLE_EQ(r.out->value.at(0, y, x), img.at(0, y, x + 1));
      EXPECT_EQ(r.mask.at(0, y, x), 1.0);
    }
    EXPECT_DOUBLE_EQ(r.out->value.at(0, y, 3), 0.0);
    EXPECT_EQ(r.mask.at(0, y, 3), 0.0);
  }
}

TEST(BackwardWarp, HalfPixelShiftInterpolatesRamp) {
  Tensor img({1, 1, 5});
  for (int x = 0; x < 5; ++x) img.at(0, 0, x) = x;
  Tensor flow({2, 1, 5}, 0.0);
  for (int x = 0; x < 5; ++x) flow.at(0, 0, x) = 0.5;
  Sampled r = backward_warp(constant(img), constant(flow));
  for (int x = 0; x < 4; ++x) {
    EXPECT_NEAR(r.out->value.at(0, 0, x), x + 0.5, 1e-12);
  }
  EXPECT_EQ(r.mask.at(0, 0, 4), 0.0);
}

TEST(Splat, SumModeZeroFlowIsExactIdentity) {
  std::mt19937_64 rng(34);
  Tensor src = random_tensor({2, 3, 4}, rng);
  SplatConfig cfg;
  cfg.mode = SplatMode::kSum;
  Var out = geometry::softmax_splat(constant(src),
                                    constant(Tensor({2, 3, 4}, 0.0)), Var{},
                                    cfg);
  for (long i = 0; i < src.numel(); ++i) EXPECT_EQ(out->value[i], src[i]);
}

TEST(Splat, SumModeShiftMovesMassAndVacatesSource) {
  Tensor src = Tensor::from({1, 1, 4}, {1.0, 2.0, 3.0, 4.0});
  Tensor flow({2, 1, 4}, 0.0);
  for (int x = 0; x < 4; ++x) flow.at(0, 0, x) = 1.0;
  SplatConfig cfg;
  cfg.mode = SplatMode::kSum;
  Var out = geometry::softmax_splat(constant(src), constant(flow), Var{}, cfg);
  EXPECT_DOUBLE_EQ(out->value.at(0, 0, 0), 0.0);  // nothing lands here
  EXPECT_DOUBLE_EQ(out->value.at(0, 0, 1), 1.0);
  EXPECT_DOUBLE_EQ(out->value.at(0, 0, 2), 2.0);
  EXPECT_DOUBLE_EQ(out->value.at(0, 0, 3), 3.0);  // src 4.0 left the grid
}

TEST(Splat, SumModeCollisionAccumulates) {
  Tensor src = Tensor::from({1, 1, 2}, {3.0, 5.0});
  Tensor flow({2, 1, 2}, 0.0);
  flow.at(0, 0, 0) = 1.0;  // both pixels land on x = 1
  SplatConfig cfg;
  cfg.mode = SplatMode::kSum;
  Var out = geometry::softmax_splat(constant(src), constant(flow), Var{}, cfg);
  EXPECT_DOUBLE_EQ(out->value.at(0, 0, 0), 0.0);
  EXPECT_DOUBLE_EQ(out->value.at(0, 0, 1), 8.0);
}

TEST(Splat, SoftmaxEqualImportanceCollisionAverages) {
  Tensor src = Tensor::from({1, 1, 2}, {3.0, 5.0});
  Tensor flow({2, 1, 2}, 0.0);
  flow.at(0, 0, 0) = 1.0;
  SplatConfig cfg;  // softmax, alpha 10
  Var out = geometry::softmax_splat(constant(src), constant(flow),
                                    constant(Tensor({1, 1, 2}, 0.7)), cfg);
  EXPECT_NEAR(out->value.at(0, 0, 1), 4.0, 1e-6);
}

TEST(Splat, SoftmaxHigherImportanceWinsCollision) {
  Tensor src = Tensor::from({1, 1, 2}, {3.0, 5.0});
  Tensor flow({2, 1, 2}, 0.0);
  flow.at(0, 0, 0) = 1.0;
  Tensor imp = Tensor::from({1, 1, 2}, {3.0, 1.0});
  SplatConfig cfg;  // alpha 10 => the back source is e^-20 down
  Var out =
      geometry::softmax_splat(constant(src), constant(flow), constant(imp), cfg);
  EXPECT_NEAR(out->value.at(0, 0, 1), 3.0, 1e-7);
}

TEST(Splat, SoftmaxOutputInvariantToImportanceOffset) {
  std::mt19937_64 rng(35);
  Tensor src = smooth_tensor({1, 4, 5}, rng);
  Tensor flow = smooth_tensor({2, 4, 5}, rng, 0.8);
  Tensor imp = random_tensor({1, 4, 5}, rng, 0.0, 1.0);
  Tensor shifted = imp;
  for (long i = 0; i < shifted.numel(); ++i) shifted[i] += 100.0;
  SplatConfig cfg;
  Var a = geometry::softmax_splat(constant(src), constant(flow),
                                  constant(imp), cfg);
  Var b = geometry::softmax_splat(constant(src), constant(flow),
                                  constant(shifted), cfg);
  for (long i = 0; i < a->value.numel(); ++i) {
    EXPECT_NEAR(a->value[i], b->value[i], 1e-9);
  }
}

TEST(Splat, SumModeUndoesIntegerBackwardWarp) {
  std::mt19937_64 rng(36);
  Tensor src = random_tensor({1, 4, 6}, rng);
  Tensor flow({2, 4, 6});
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 6; ++x) {
      flow.at(0, y, x) = 2.0;
      flow.at(1, y, x) = 1.0;
    }
  }
  SplatConfig cfg;
  cfg.mode = SplatMode::kSum;
  Var fwd = geometry::softmax_splat(constant(src), constant(flow), Var{}, cfg);
  Sampled back = backward_warp(fwd, constant(flow));
  // Pixels whose displaced position stays on the grid round-trip exactly.
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 4; ++x) {
      EXPECT_EQ(back.out->value.at(0, y, x), src.at(0, y, x));
    }
  }
}

TEST(Disocclusion, ZeroFlowLeavesEverythingVisible) {
  Tensor mask = disocclusion_mask(Tensor({2, 3, 4}, 0.0));
  for (long i = 0; i < mask.numel(); ++i) EXPECT_EQ(mask[i], 1.0);
}

TEST(Disocclusion, UniformLeftwardFlowVacatesRightBorder) {
  Tensor flow({2, 3, 6}, 0.0);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 6; ++x) flow.at(0, y, x) = -2.0;
  }
  Tensor mask = disocclusion_mask(flow);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 6; ++x) {
      EXPECT_EQ(mask.at(0, y, x), x < 4 ? 1.0 : 0.0);
    }
  }
}

// Independent mass oracle: scatter unit mass along the flow with the bilinear
// kernel, drop out-of-grid taps.
Tensor oracle_mass(const Tensor& flow) {
  const int h = flow.height(), w = flow.width();
  Tensor m({1, h, w}, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double px = x + flow.at(0, y, x);
      const double py = y + flow.at(1, y, x);
      const int x0 = static_cast<int>(std::floor(px));
      const int y0 = static_cast<int>(std::floor(py));
      const double fx = px - x0, fy = py - y0;
      const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
      const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
      const double k[4] = {(1 - fy) * (1 - fx), (1 - fy) * fx, fy * (1 - fx),
                           fy * fx};
      for (int t = 0; t < 4; ++t) {
        if (xs[t] < 0 || xs[t] >= w || ys[t] < 0 || ys[t] >= h) continue;
        m.at(0, ys[t], xs[t]) += k[t];
      }
    }
  }
  return m;
}

TEST(Disocclusion, MatchesBruteForceMassOnRandomFlows) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 25; ++trial) {
    Tensor flow = test::random_tensor({2, 5, 5}, rng, -2.5, 2.5);
    Tensor mask = disocclusion_mask(flow);
    Tensor mass = oracle_mass(flow);
    for (long i = 0; i < mask.numel(); ++i) {
      EXPECT_EQ(mask[i], mass[i] >= 0.5 ? 1.0 : 0.0);
    }
  }
}

TEST(RightToLeftOcclusion, ConstantDisparityHidesLeftBand) {
  // Every right pixel lands 3 columns right in the left view, so the first 3
  // left columns have no counterpart.
  Tensor d({1, 1, 8}, 3.0);
  Tensor mask = right_to_left_occlusion(d);
  for (int x = 0; x < 8; ++x) {
    EXPECT_EQ(mask.at(0, 0, x), x < 3 ? 0.0 : 1.0);
  }
}

TEST(RightToLeftOcclusion, ForegroundStripShadowsBackground) {
  Tensor d = Tensor::from({1, 1, 8}, {2, 2, 2, 5, 5, 2, 2, 2});
  Tensor mask = right_to_left_occlusion(d);
  // Landing columns: 2,3,4 (near band), 8,9 (strip, off grid), 7.
  const double want[8] = {0, 0, 1, 1, 1, 0, 0, 1};
  for (int x = 0; x < 8; ++x) EXPECT_EQ(mask.at(0, 0, x), want[x]);
}

TEST(GeometryGradients, BackwardWarpMatchesFiniteDifferences) {
  std::mt19937_64 rng(38);
  Tensor wgt = random_tensor({2, 4, 5}, rng);
  auto fn = [&](const std::vector<Var>& in) {
    return sum(mul_const(backward_warp(in[0], in[1]).out, wgt));
  };
  auto res = grad_check(fn, {smooth_tensor({2, 4, 5}, rng),
                             smooth_tensor({2, 4, 5}, rng, 0.7)});
  EXPECT_LT(res.max_rel_err, kGradTol);
}

TEST(GeometryGradients, SoftmaxSplatMatchesFiniteDifferences) {
  std::mt19937_64 rng(39);
  Tensor wgt = random_tensor({1, 3, 4}, rng);
  SplatConfig cfg;
  cfg.alpha = 3.0;
  auto fn = [&](const std::vector<Var>& in) {
    return sum(mul_const(geometry::softmax_splat(in[0], in[1], in[2], cfg),
                         wgt));
  };
  auto res = grad_check(fn, {smooth_tensor({1, 3, 4}, rng),
                             smooth_tensor({2, 3, 4}, rng, 0.7),
                             random_tensor({1, 3, 4}, rng, 0.0, 1.0)});
  EXPECT_LT(res.max_rel_err, kGradTol);
}

TEST(GeometryGradients, SumSplatMatchesFiniteDifferences) {
  std::mt19937_64 rng(40);
  Tensor wgt = random_tensor({1, 3, 4}, rng);
  SplatConfig cfg;
  cfg.mode = SplatMode::kSum;
  auto fn = [&](const std::vector<Var>& in) {
    return sum(mul_const(geometry::softmax_splat(in[0], in[1], Var{}, cfg),
                         wgt));
  };
  auto res = grad_check(fn, {smooth_tensor({1, 3, 4}, rng),
                             smooth_tensor({2, 3, 4}, rng, 0.7)});
  EXPECT_LT(res.max_rel_err, kGradTol);
}

TEST(GeometryGradients, ReprojectionMatchesFiniteDifferences) {
  StereoRig rig;
  rig.intrinsics = {30.0, 30.0, 2.0, 1.5};
  rig.baseline = 0.5;
  std::mt19937_64 rng(41);
  Tensor wgt = random_tensor({2, 4, 5}, rng);
  auto fn = [&](const std::vector<Var>& in) {
    return sum(mul_const(reproject_with_sceneflow(in[0], in[1], rig).flow,
                         wgt));
  };
  auto res = grad_check(fn, {random_tensor({1, 4, 5}, rng, 1.5, 3.0),
                             random_tensor({3, 4, 5}, rng, -0.2, 0.2)});
  EXPECT_LT(res.max_rel_err, kGradTol);
}

TEST(GeometryGradients, FutureDisparityMatchesFiniteDifferences) {
  StereoRig rig;
  rig.intrinsics = {30.0, 30.0, 2.0, 1.5};
  rig.baseline = 0.5;
  std::mt19937_64 rng(42);
  Tensor wgt = random_tensor({1, 4, 5}, rng);
  auto fn = [&](const std::vector<Var>& in) {
    return sum(mul_const(future_disparity(in[0], in[1], rig).d2, wgt));
  };
  auto res = grad_check(fn, {random_tensor({1, 4, 5}, rng, 8.0, 16.0),
                             random_tensor({1, 4, 5}, rng, -0.2, 0.2)});
  EXPECT_LT(res.max_rel_err, kGradTol);
}

}  // namespace
}  // namespace mmsf
