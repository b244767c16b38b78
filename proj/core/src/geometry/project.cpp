// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include <stdexcept>

#include "mmsf/ad/ops.hpp"
#include "mmsf/geometry/geometry.hpp"

namespace mmsf::geometry {

std::array<double, 3> backproject(double px, double py, double depth,
                                  const Intrinsics& k) {
  if (!(depth > 0.0)) throw std::domain_error("backproject: depth must be positive");
  return {depth * (px - k.cx) / k.fx, depth * (py - k.cy) / k.fy, depth};
}

Tensor coord_grid_x(int h, int w) {
  Tensor g({1, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) g.at(0, y, x) = x;
  }
  return g;
}

Tensor coord_grid_y(int h, int w) {
  Tensor g({1, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) g.at(0, y, x) = y;
  }
  return g;
}

ad::Var depth_from_disparity(const ad::Var& d, const StereoRig& rig) {
  return ad::div(ad::scalar(rig.intrinsics.fx * rig.baseline), d);
}

namespace {

Tensor valid_from_pz(const Tensor& pz) {
  Tensor v({1, pz.height(), pz.width()});
  for (long i = 0; i < pz.numel(); ++i) v[i] = pz[i] > kZMin ? 1.0 : 0.0;
  return v;
}

}  // namespace

FlowResult reproject_with_sceneflow(const ad::Var& d, const ad::Var& s,
                                    const StereoRig& rig) {
  using namespace ad;
  const Intrinsics& k = rig.intrinsics;
  const int h = d->value.height(), w = d->value.width();

  Var depth = depth_from_disparity(d, rig);
  Var gx = constant(coord_grid_x(h, w));
  Var gy = constant(coord_grid_y(h, w));
  // Camera rays (x - cx)/fx, (y - cy)/fy are constants of the grid.
  Var rx = mul(add(gx, -k.cx), 1.0 / k.fx);
  Var ry = mul(add(gy, -k.cy), 1.0 / k.fy);

  Var px = add(mul(depth, rx), slice_channels(s, 0, 1));
  Var py = add(mul(depth, ry), slice_channels(s, 1, 1));
  Var pz = add(depth, slice_channels(s, 2, 1));

  Tensor valid = valid_from_pz(pz->value);
  Var pzc = clamp_min(pz, kZMin);

  Var u = add(mul(div(px, pzc), k.fx), k.cx);
  Var v = add(mul(div(py, pzc), k.fy), k.cy);
  Var flow = concat_channels({sub(u, gx), sub(v, gy)});
  return FlowResult{std::move(flow), std::move(valid)};
}

FutureDisparity future_disparity(const ad::Var& d, const ad::Var& s_z,
                                 const StereoRig& rig) {
  using namespace ad;
  Var pz = add(depth_from_disparity(d, rig), s_z);
  Tensor valid = valid_from_pz(pz->value);
  Var d2 = div(scalar(rig.intrinsics.fx * rig.baseline), clamp_min(pz, kZMin));
  return FutureDisparity{std::move(d2), std::move(valid)};
}

}  // namespace mmsf::geometry
