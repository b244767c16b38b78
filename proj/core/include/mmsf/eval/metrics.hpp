// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#pragma once

#include "mmsf/core/types.hpp"

namespace mmsf::eval {

// Outlier rates in percent, end-point errors in map units. `defined` drops to
// false when a rate had no valid pixels to average over; n_valid counts the
// joint-mask pixels behind sf_all.
struct MetricReport {
  double d1_all = 0.0;
  double d2_all = 0.0;
  double fl_all = 0.0;
  double sf_all = 0.0;
  double epe_flow = 0.0;
  double epe_sf = 0.0;
  long n_valid = 0;
  bool defined = true;
};

// 1 where the estimate misses the ground truth by more than 3 px AND more
// than 5% of the ground-truth magnitude (both tests Euclidean across
// channels), 0 elsewhere and outside the mask.
Tensor outlier_map(const Tensor& est, const Tensor& gt, const Tensor& valid);

struct SceneFlowEval {
  Tensor d1;    // {1,h,w} disparity at t
  Tensor d2;    // {1,h,w} disparity of the displaced point, frame-t pixels
  Tensor flow;  // {2,h,w} optical flow
  Tensor sf;    // {3,h,w} metric scene flow; may be empty
};

struct SceneFlowTruth {
  Tensor d1, d2, flow, sf;
  Tensor d1_valid, d2_valid, flow_valid, sf_valid;  // {1,h,w} binary masks
};

// D1/D2/Fl rates over their own masks; SF-all counts pixels that are an
// outlier in any component, over the mask intersection. epe_sf is filled
// only when both sides carry scene flow.
MetricReport scene_flow_metrics(const SceneFlowEval& est,
                                const SceneFlowTruth& gt);

// Mean Euclidean distance between est and gt over the mask. Throws when the
// mask is empty.
double epe(const Tensor& est, const Tensor& gt, const Tensor& valid);

// Samples sf_tp1 bilinearly at p + gt_flow_t(p) and averages the distance to
// sf_t(p) over valid pixels whose correspondence lands inside the image.
double temporal_consistency_aepe(const Tensor& sf_t, const Tensor& sf_tp1,
                                 const Tensor& gt_flow_t, const Tensor& valid);

}  // namespace mmsf::eval
