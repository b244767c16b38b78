// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
//
// Self-supervised proxy losses. Images are RGB-like maps in [0,1]; census
// operates on luminance scaled to an 8-bit-like range (x255), where the
// sigma constants are calibrated. Occlusion masks are binary constants; no
// gradient flows through mask construction.
#pragma once

#include <vector>

#include "mmsf/ad/graph.hpp"
#include "mmsf/core/types.hpp"

namespace mmsf::losses {

struct LossWeights {
  double lambda_d_sm = 0.1;
  double lambda_sf_pt = 0.2;
  double lambda_sf_sm = 1000.0;
  double beta_edge = 150.0;
  double sigma_g = 0.1;
  double sigma_t = 0.9;
  double census_eps = 1e-8;
  double eps_balance = 1e-12;
  void validate() const;  // all strictly positive
};

// Continuous ternary signature: (I(p+y) - I(p)) / sqrt((I(p+y)-I(p))^2 + s^2)
// on a single-channel map with replicate borders. p = (px,py), y = (ox,oy).
double ternary_value(const ad::Tensor& luma, int px, int py, int ox, int oy,
                     double sigma_t);

// Geman-McClure penalty (t1-t2)^2 / ((t1-t2)^2 + sigma_g), in [0,1).
double geman_mcclure(double t1, double t2, double sigma_g);

// Occlusion-aware census loss over a 7x7 window. Per visible pixel, the
// Geman-McClure score of the two ternary signatures is averaged over visible
// neighbors (occlusion zero-padded, images replicate-padded), then averaged
// over visible pixels. Exactly 0 for an empty mask. Differentiable in both
// images; occ must be binary.
ad::Var occlusion_aware_census(const ad::Var& img_a, const ad::Var& img_b,
                               const ad::Tensor& occ, const LossWeights& w);

// Edge-aware second-order smoothness: (1/N) sum_p sum_i |dd_i field(p)|_1 *
// exp(-beta * mean_ch |guide(p+i) - guide(p-i)|) [/ normalizer(p)], where
// dd_i is the 1-D second difference along axis i, evaluated on interior
// pixels only. normalizer, when given, is a positive {1,h,w} map.
ad::Var edge_aware_smoothness_2nd(const ad::Var& field,
                                  const ad::Tensor& guide, double beta,
                                  const ad::Var& normalizer = ad::Var{});

// Mean 3D end-point distance between the scene-flow-displaced points at t and
// the surface observed at t+1, relative to each point's distance from the
// camera. Pixels whose correspondence leaves the image or passes behind the
// camera are dropped from the mask; exactly 0 when nothing remains.
ad::Var point_reconstruction_loss(const ad::Var& d_t, const ad::Var& d_tp1,
                                  const ad::Var& s_f, const ad::Tensor& occ,
                                  const StereoRig& rig);

struct DisparityLossTerms {
  ad::Var total, photometric, smoothness;
};

// Census between the left view and the right view warped by (-d, 0), masked
// by the stereo occlusion estimate, plus weighted disparity smoothness. The
// occlusion mask is splatted from d itself, standing in for a second
// right-view network pass.
DisparityLossTerms disparity_loss(const ad::Var& d, const ad::Tensor& img_left,
                                  const ad::Tensor& img_right,
                                  const StereoRig& rig, const LossWeights& w);

struct SceneflowLossTerms {
  ad::Var total, photometric, point, smoothness;
};

// One temporal direction of the pairwise scene flow loss: frame a is the
// reference, s_ab flows a->b, and s_ba (from the other step's estimate)
// provides the disocclusion mask on a's grid.
SceneflowLossTerms sceneflow_loss(const ad::Var& d_a, const ad::Var& s_ab,
                                  const ad::Tensor& img_a, const ad::Var& d_b,
                                  const ad::Var& s_ba, const ad::Tensor& img_b,
                                  const StereoRig& rig, const LossWeights& w);

// Estimates for one interior time step, resampled to input resolution.
struct StepEstimates {
  ad::Var s_f, s_b, d;
};

struct LossReport {
  ad::Var total;    // backpropagation root
  ad::Var d_term;   // L_d alone; separate root for training-schedule probes
  ad::Var sf_term;  // L_sf alone (unweighted)
  double l_total = 0.0;
  double l_d = 0.0;
  double l_sf = 0.0;
  double lambda_sf = 0.0;
  double d_photometric = 0.0;
  double d_smoothness = 0.0;
  double sf_photometric = 0.0;
  double sf_point = 0.0;
  double sf_smoothness = 0.0;
};

// Full sequence objective. levels[l][j] holds the estimates of pyramid level
// l for interior frame j+1; levels are summed with weight 1. Per level,
// L_d averages the disparity loss over the estimated steps and L_sf averages
// the pairwise term over neighboring steps and both temporal directions.
// lambda_sf = L_d / max(L_sf, eps_balance) is recomputed from values and
// carries no gradient. detach_disparity cuts the disparity inputs out of the
// scene flow term (early-training stabilization).
LossReport total_sequence_loss(
    const std::vector<std::vector<StepEstimates>>& levels,
    const SequenceSample& sample, const LossWeights& w, bool detach_disparity);

}  // namespace mmsf::losses
