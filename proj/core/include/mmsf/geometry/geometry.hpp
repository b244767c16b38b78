// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
//
// Differentiable warping and 3D projection operators. Pixel p = (x, y) maps
// to the camera ray K^-1 (x, y, 1); depth is the z coordinate in meters.
#pragma once

#include <array>

#include "mmsf/ad/graph.hpp"
#include "mmsf/ad/image_ops.hpp"
#include "mmsf/core/types.hpp"

namespace mmsf::geometry {

// Displaced points at or behind this depth are flagged invalid.
inline constexpr double kZMin = 1e-3;
// Guard added to the splatted weight sum before normalization.
inline constexpr double kEpsSplat = 1e-8;
// Mass threshold separating covered from vacated pixels.
inline constexpr double kDisoccThreshold = 0.5;

struct SplatConfig {
  ad::SplatMode mode = ad::SplatMode::kSoftmax;
  double alpha = 10.0;
};

std::array<double, 3> backproject(double px, double py, double depth,
                                  const Intrinsics& k);

// Pixel coordinate grids as {1,h,w} tensors (x respectively y).
Tensor coord_grid_x(int h, int w);
Tensor coord_grid_y(int h, int w);

// depth = fx * baseline / d as a graph op (no positivity check; the head
// activation guarantees d > 0 on the training path).
ad::Var depth_from_disparity(const ad::Var& d, const StereoRig& rig);

struct FlowResult {
  ad::Var flow;  // {2,h,w}, p' - p in pixels
  Tensor valid;  // {1,h,w}, 0 where displaced depth <= z_min
};

// p' = project(backproject(p, depth(d)) + s); returns p' - p. The displaced
// depth is clamped to z_min inside the projection so invalid pixels stay
// finite; they are reported in the valid mask.
FlowResult reproject_with_sceneflow(const ad::Var& d, const ad::Var& s,
                                    const StereoRig& rig);

struct FutureDisparity {
  ad::Var d2;    // {1,h,w}, pixels
  Tensor valid;  // {1,h,w}
};

// d2 = fx * baseline / (depth(d) + s_z), displaced depth clamped to z_min.
FutureDisparity future_disparity(const ad::Var& d, const ad::Var& s_z,
                                 const StereoRig& rig);

// Bilinear lookup at p + flow(p); zero-fill outside, in-bounds mask returned.
ad::Sampled backward_warp(const ad::Var& img, const ad::Var& flow);

ad::Var softmax_splat(const ad::Var& src, const ad::Var& flow,
                      const ad::Var& importance, const SplatConfig& cfg);

// O(p) = 1 iff the ones-mass splatted from the next frame along
// flow_from_next_to_cur reaches at least kDisoccThreshold at p.
Tensor disocclusion_mask(const Tensor& flow_from_next_to_cur);

// O_disp for the left view: ones splatted from the right view with
// horizontal displacement +d_right, thresholded.
Tensor right_to_left_occlusion(const Tensor& d_right);

}  // namespace mmsf::geometry
