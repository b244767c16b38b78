// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mmsf/ad/image_ops.hpp"
#include "mmsf/ad/ops.hpp"
#include "mmsf/geometry/geometry.hpp"
#include "mmsf/losses/losses.hpp"

namespace mmsf::losses {

using ad::Tensor;
using ad::Var;

namespace {

constexpr double kEpsPointDist = 1e-12;  // under the sqrt; caps the gradient
constexpr double kEpsCount = 1e-8;

struct Rays {
  Tensor rx, ry, norm;  // {1,h,w}; norm = |(rx, ry, 1)|
};

Rays make_rays(const StereoRig& rig, int h, int w) {
  Rays r{Tensor({1, h, w}), Tensor({1, h, w}), Tensor({1, h, w})};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double rx = (x - rig.intrinsics.cx) / rig.intrinsics.fx;
      const double ry = (y - rig.intrinsics.cy) / rig.intrinsics.fy;
      r.rx.at(0, y, x) = rx;
      r.ry.at(0, y, x) = ry;
      r.norm.at(0, y, x) = std::sqrt(rx * rx + ry * ry + 1.0);
    }
  }
  return r;
}

Tensor intersect(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  for (long i = 0; i < out.numel(); ++i) out[i] *= b[i];
  return out;
}

void require_map(const Var& v, int c, int h, int w, const char* what) {
  const Tensor& t = v->value;
  if (t.rank() != 3 || t.channels() != c || t.height() != h || t.width() != w) {
    throw std::invalid_argument(std::string(what) + ": unexpected shape");
  }
}

}  // namespace

void LossWeights::validate() const {
  if (lambda_d_sm < 0 || lambda_sf_pt < 0 || lambda_sf_sm < 0) {
    throw std::invalid_argument("LossWeights: negative term weight");
  }
  if (beta_edge < 0 || sigma_g <= 0 || sigma_t <= 0) {
    throw std::invalid_argument("LossWeights: nonpositive kernel parameter");
  }
  if (census_eps <= 0 || eps_balance <= 0) {
    throw std::invalid_argument("LossWeights: nonpositive epsilon");
  }
}

Var point_reconstruction_loss(const Var& d_t, const Var& d_tp1,
                              const Var& s_f, const Tensor& occ,
                              const StereoRig& rig) {
  const int h = d_t->value.height(), w = d_t->value.width();
  require_map(d_t, 1, h, w, "point_reconstruction_loss: d_t");
  require_map(d_tp1, 1, h, w, "point_reconstruction_loss: d_tp1");
  require_map(s_f, 3, h, w, "point_reconstruction_loss: s_f");
  if (occ.rank() != 3 || occ.channels() != 1 || occ.height() != h ||
      occ.width() != w) {
    throw std::invalid_argument("point_reconstruction_loss: occ shape");
  }

  const Rays rays = make_rays(rig, h, w);
  const geometry::FlowResult fr =
      geometry::reproject_with_sceneflow(d_t, s_f, rig);
  Var depth_t = geometry::depth_from_disparity(d_t, rig);
  Var depth_tp1 = geometry::depth_from_disparity(d_tp1, rig);
  ad::Sampled samp = ad::grid_sample(depth_tp1, fr.flow);

  // Point at t, displaced by the flow estimate.
  Var px = ad::add(ad::mul_const(depth_t, rays.rx), ad::slice_channels(s_f, 0, 1));
  Var py = ad::add(ad::mul_const(depth_t, rays.ry), ad::slice_channels(s_f, 1, 1));
  Var pz = ad::add(depth_t, ad::slice_channels(s_f, 2, 1));

  // Same point seen from t+1: the sampled depth pushed along the target ray.
  Var qrx = ad::add(ad::constant(rays.rx),
                    ad::mul(ad::slice_channels(fr.flow, 0, 1), 1.0 / rig.intrinsics.fx));
  Var qry = ad::add(ad::constant(rays.ry),
                    ad::mul(ad::slice_channels(fr.flow, 1, 1), 1.0 / rig.intrinsics.fy));
  Var qx = ad::mul(samp.out, qrx);
  Var qy = ad::mul(samp.out, qry);

  Var dist = ad::sqrt(ad::add(
      ad::add(ad::square(ad::sub(px, qx)), ad::square(ad::sub(py, qy))),
      ad::add(ad::square(ad::sub(pz, samp.out)), kEpsPointDist)));
  Var scale = ad::mul_const(depth_t, rays.norm);  // |P_t|, distance from camera

  Tensor mask = intersect(intersect(occ, samp.mask), fr.valid);
  double count = 0.0;
  for (long i = 0; i < mask.numel(); ++i) count += mask[i];
  return ad::mul(ad::sum(ad::mul_const(ad::div(dist, scale), mask)),
                 1.0 / (count + kEpsCount));
}

DisparityLossTerms disparity_loss(const Var& d, const Tensor& img_left,
                                  const Tensor& img_right,
                                  const StereoRig& rig, const LossWeights& w) {
  (void)rig;  // the rig fixes the units of d but no term needs intrinsics
  const int h = d->value.height(), wd = d->value.width();
  require_map(d, 1, h, wd, "disparity_loss: d");
  if (img_left.height() != h || img_left.width() != wd ||
      !img_left.same_shape(img_right)) {
    throw std::invalid_argument("disparity_loss: image shape mismatch");
  }

  // Left-image pixel p samples the right image at p - (d, 0).
  Var flow = ad::concat_channels({ad::neg(d), ad::constant(Tensor({1, h, wd}))});
  ad::Sampled warped = ad::grid_sample(ad::constant(img_right), flow);
  Tensor occ =
      intersect(geometry::right_to_left_occlusion(d->value), warped.mask);

  DisparityLossTerms out;
  out.photometric =
      occlusion_aware_census(ad::constant(img_left), warped.out, occ, w);
  out.smoothness = edge_aware_smoothness_2nd(d, img_left, w.beta_edge);
  out.total = ad::add(out.photometric, ad::mul(out.smoothness, w.lambda_d_sm));
  return out;
}

SceneflowLossTerms sceneflow_loss(const Var& d_a, const Var& s_ab,
                                  const Tensor& img_a, const Var& d_b,
                                  const Var& s_ba, const Tensor& img_b,
                                  const StereoRig& rig, const LossWeights& w) {
  const int h = d_a->value.height(), wd = d_a->value.width();
  require_map(d_a, 1, h, wd, "sceneflow_loss: d_a");
  require_map(d_b, 1, h, wd, "sceneflow_loss: d_b");
  require_map(s_ab, 3, h, wd, "sceneflow_loss: s_ab");
  require_map(s_ba, 3, h, wd, "sceneflow_loss: s_ba");
  if (img_a.height() != h || img_a.width() != wd ||
      !img_a.same_shape(img_b)) {
    throw std::invalid_argument("sceneflow_loss: image shape mismatch");
  }

  const geometry::FlowResult fwd =
      geometry::reproject_with_sceneflow(d_a, s_ab, rig);
  ad::Sampled warped = ad::grid_sample(ad::constant(img_b), fwd.flow);

  // Pixels of a that no pixel of b lands on under the reverse flow are
  // disoccluded in b; nothing there can explain them.
  const geometry::FlowResult bwd =
      geometry::reproject_with_sceneflow(d_b, s_ba, rig);
  Tensor occ = intersect(
      intersect(geometry::disocclusion_mask(bwd.flow->value), warped.mask),
      fwd.valid);

  SceneflowLossTerms out;
  out.photometric =
      occlusion_aware_census(ad::constant(img_a), warped.out, occ, w);
  out.point = point_reconstruction_loss(d_a, d_b, s_ab, occ, rig);
  const Rays rays = make_rays(rig, h, wd);
  Var scale = ad::mul_const(geometry::depth_from_disparity(d_a, rig), rays.norm);
  out.smoothness = edge_aware_smoothness_2nd(s_ab, img_a, w.beta_edge, scale);
  out.total = ad::add(
      out.photometric,
      ad::add(ad::mul(out.point, w.lambda_sf_pt),
              ad::mul(out.smoothness, w.lambda_sf_sm)));
  return out;
}

}  // namespace mmsf::losses
