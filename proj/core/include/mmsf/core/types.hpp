// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
//
// Domain types. Image-like data is carried in ad::Tensor maps, row-major,
// origin at the top-left pixel center, x rightward, y downward:
//   ImageF        {3,h,w}, values in [0,1]
//   DisparityMap  {1,h,w}, pixels, > 0
//   DepthMap      {1,h,w}, meters
//   SceneFlowMap  {3,h,w}, meters, camera coordinates
//   OpticalFlowMap{2,h,w}, pixels (channel 0 = x)
//   OcclusionMask {1,h,w}, {0,1}, 1 = visible
#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "mmsf/ad/tensor.hpp"

namespace mmsf {

using ad::Tensor;

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
      throw std::invalid_argument("Intrinsics: focal lengths must be positive");
    }
  }
  // Intrinsics of the same camera at a resampled resolution.
  Intrinsics scaled(double sx, double sy) const {
    return Intrinsics{fx * sx, fy * sy, (cx + 0.5) * sx - 0.5,
                      (cy + 0.5) * sy - 0.5};
  }
};

struct StereoRig {
  Intrinsics intrinsics;
  double baseline = 1.0;  // meters

  void validate() const {
    intrinsics.validate();
    if (!(baseline > 0.0)) {
      throw std::invalid_argument("StereoRig: baseline must be positive");
    }
  }
};

struct LSTMState {
  Tensor h;
  Tensor c;
  bool empty() const { return h.numel() == 0; }
};

// Bidirectional estimates at one time step, single resolution.
// d is pinned to the arithmetic mean of d_f and d_b at construction.
struct EstimateBundle {
  Tensor s_f;
  Tensor s_b;
  Tensor d_f;
  Tensor d_b;
  Tensor d;
};

EstimateBundle make_bundle(Tensor s_f, Tensor s_b, Tensor d_f, Tensor d_b);

struct GroundTruth {
  // Per reference frame; entries may be empty where undefined (e.g. the last
  // frame has no forward flow).
  std::vector<Tensor> disp;          // D1
  std::vector<Tensor> disp_future;   // D2, at reference pixels
  std::vector<Tensor> flow;          // forward optical flow
  std::vector<Tensor> sceneflow;     // forward scene flow, meters
  std::vector<Tensor> disp_valid;
  std::vector<Tensor> disp_future_valid;
  std::vector<Tensor> flow_valid;
  std::vector<Tensor> sceneflow_valid;
  // Synthetic-generator extras used by consistency tests.
  std::vector<Tensor> flow_bwd;       // flow toward the previous frame
  std::vector<Tensor> sceneflow_bwd;  // scene flow toward the previous frame
  std::vector<Tensor> vis_next;       // 1 = still visible at t+1
};

struct SequenceSample {
  std::vector<Tensor> left_frames;
  std::vector<Tensor> right_frames;  // may be empty (inference)
  StereoRig rig;
  std::optional<GroundTruth> gt;

  int num_frames() const { return static_cast<int>(left_frames.size()); }
  void validate() const;
};

}  // namespace mmsf
