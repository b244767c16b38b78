// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include "mmsf/core/ops.hpp"

#include <string>

#include "mmsf/ad/image_ops.hpp"

namespace mmsf {

Tensor disparity_to_depth(const Tensor& d, const StereoRig& rig) {
  rig.validate();
  long bad = 0;
  for (long i = 0; i < d.numel(); ++i) {
    if (!(d[i] > 0.0)) ++bad;
  }
  if (bad > 0) {
    throw std::domain_error("disparity_to_depth: " + std::to_string(bad) +
                            " non-positive disparity pixels");
  }
  const double fb = rig.intrinsics.fx * rig.baseline;
  Tensor out(d.shape());
  for (long i = 0; i < d.numel(); ++i) out[i] = fb / d[i];
  return out;
}

Tensor depth_to_disparity(const Tensor& depth, const StereoRig& rig) {
  rig.validate();
  long bad = 0;
  for (long i = 0; i < depth.numel(); ++i) {
    if (!(depth[i] > 0.0)) ++bad;
  }
  if (bad > 0) {
    throw std::domain_error("depth_to_disparity: " + std::to_string(bad) +
                            " non-positive depth pixels");
  }
  const double fb = rig.intrinsics.fx * rig.baseline;
  Tensor out(depth.shape());
  for (long i = 0; i < depth.numel(); ++i) out[i] = fb / depth[i];
  return out;
}

Tensor average_disparities(const Tensor& d_f, const Tensor& d_b) {
  if (!d_f.same_shape(d_b)) {
    throw std::invalid_argument("average_disparities: shape mismatch");
  }
  Tensor out(d_f.shape());
  for (long i = 0; i < d_f.numel(); ++i) out[i] = (d_f[i] + d_b[i]) / 2.0;
  return out;
}

Tensor rescale_to_level(const Tensor& field, int target_h, int target_w,
                        FieldKind kind) {
  if (target_h < 1 || target_w < 1) {
    throw std::invalid_argument("rescale_to_level: non-positive target dims");
  }
  if (field.rank() != 3) {
    throw std::invalid_argument("rescale_to_level: rank-3 map expected");
  }
  const double rx = static_cast<double>(target_w) / field.width();
  const double ry = static_cast<double>(target_h) / field.height();
  Tensor out = ad::bilinear_resize(ad::constant(field), target_h, target_w)->value;
  switch (kind) {
    case FieldKind::kDisparity:
      for (long i = 0; i < out.numel(); ++i) out[i] *= rx;
      break;
    case FieldKind::kOpticalFlow: {
      const long plane = static_cast<long>(target_h) * target_w;
      for (long i = 0; i < plane; ++i) out[i] *= rx;
      for (long i = plane; i < 2 * plane; ++i) out[i] *= ry;
      break;
    }
    case FieldKind::kMask:
      for (long i = 0; i < out.numel(); ++i) out[i] = out[i] >= 0.5 ? 1.0 : 0.0;
      break;
    case FieldKind::kImage:
    case FieldKind::kSceneFlow:
      break;
  }
  return out;
}

}  // namespace mmsf
