// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
//
// Differentiable image-space kernels shared by the geometry and network
// layers. Conventions: maps are {c,h,w}, flow maps are {2,h,w} with channel 0
// the x (column) displacement in pixels, y axis pointing down, origin at the
// top-left pixel center.
#pragma once

#include "mmsf/ad/graph.hpp"

namespace mmsf::ad {

// Bilinear resize, half-pixel-center convention, replicate border. Identity
// when the size is unchanged.
Var bilinear_resize(const Var& x, int out_h, int out_w);

struct Sampled {
  Var out;      // zero where taps fall outside
  Tensor mask;  // {1,h,w}; 1 iff the sample position is inside [0,W-1]x[0,H-1]
};

// out(p) = bilinear(img, p + flow(p)). Differentiable in img and flow.
Sampled grid_sample(const Var& img, const Var& flow);

enum class SplatMode { kSum, kSoftmax };

// Forward (scatter) warping of src along flow with bilinear kernels.
// kSum accumulates raw mass; kSoftmax weights sources by exp(alpha*importance)
// and normalizes by the accumulated weight (eps-guarded), so strictly closer
// (higher-importance) sources dominate.
Var softmax_splat(const Var& src, const Var& flow, const Var& importance,
                  SplatMode mode, double alpha, double eps);

// Non-differentiable helper: total bilinear mass received per target pixel
// when splatting a ones-map along flow. Basis for disocclusion masks.
Tensor splat_mass(const Tensor& flow);

// Cost volume: out(o,p) = <f1(:,p), f2(:,p+o)> / C for all offsets o in
// [-radius, radius]^2, row-major in (dy,dx); out-of-bounds targets give 0.
Var correlation(const Var& f1, const Var& f2, int radius);

// Per-pixel L2 normalization across channels, eps-guarded.
Var channel_l2_normalize(const Var& x, double eps);

// out(c,y,x) = in(c, y+dy, x+dx) with replicate padding.
Var shift2d(const Var& x, int dy, int dx);

}  // namespace mmsf::ad
