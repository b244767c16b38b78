// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include "mmsf/geometry/geometry.hpp"

namespace mmsf::geometry {

ad::Sampled backward_warp(const ad::Var& img, const ad::Var& flow) {
  return ad::grid_sample(img, flow);
}

ad::Var softmax_splat(const ad::Var& src, const ad::Var& flow,
                      const ad::Var& importance, const SplatConfig& cfg) {
  return ad::softmax_splat(src, flow, importance, cfg.mode, cfg.alpha,
                           kEpsSplat);
}

Tensor disocclusion_mask(const Tensor& flow_from_next_to_cur) {
  Tensor mass = ad::splat_mass(flow_from_next_to_cur);
  Tensor mask(mass.shape());
  for (long i = 0; i < mass.numel(); ++i) {
    mask[i] = mass[i] >= kDisoccThreshold ? 1.0 : 0.0;
  }
  return mask;
}

Tensor right_to_left_occlusion(const Tensor& d_right) {
  const int h = d_right.height(), w = d_right.width();
  Tensor flow({2, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) flow.at(0, y, x) = d_right.at(0, y, x);
  }
  return disocclusion_mask(flow);
}

}  // namespace mmsf::geometry
