// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#pragma once

#include "mmsf/core/types.hpp"

namespace mmsf {

// depth = fx * baseline / d. Throws std::domain_error naming the number of
// non-positive pixels if the disparity map is invalid.
Tensor disparity_to_depth(const Tensor& d, const StereoRig& rig);
Tensor depth_to_disparity(const Tensor& depth, const StereoRig& rig);

Tensor average_disparities(const Tensor& d_f, const Tensor& d_b);

enum class FieldKind { kImage, kDisparity, kOpticalFlow, kSceneFlow, kMask };

// Bilinear resampling to (target_h, target_w). Pixel-unit channels scale with
// the resolution ratio (disparity and flow-x by width, flow-y by height);
// metric scene flow and plain images are value-preserving. Masks are
// resampled then re-binarized at 0.5.
Tensor rescale_to_level(const Tensor& field, int target_h, int target_w,
                        FieldKind kind);

}  // namespace mmsf
