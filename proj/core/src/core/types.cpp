// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include "mmsf/core/types.hpp"

namespace mmsf {

EstimateBundle make_bundle(Tensor s_f, Tensor s_b, Tensor d_f, Tensor d_b) {
  if (!d_f.same_shape(d_b)) {
    throw std::invalid_argument("make_bundle: disparity shape mismatch");
  }
  EstimateBundle b;
  b.d = Tensor(d_f.shape());
  for (long i = 0; i < d_f.numel(); ++i) b.d[i] = (d_f[i] + d_b[i]) / 2.0;
  b.s_f = std::move(s_f);
  b.s_b = std::move(s_b);
  b.d_f = std::move(d_f);
  b.d_b = std::move(d_b);
  return b;
}

void SequenceSample::validate() const {
  rig.validate();
  if (left_frames.size() < 2) {
    throw std::invalid_argument("SequenceSample: at least 2 frames required");
  }
  if (!right_frames.empty() && right_frames.size() != left_frames.size()) {
    throw std::invalid_argument(
        "SequenceSample: right_frames length must match left_frames");
  }
  const auto& shape = left_frames[0].shape();
  for (const auto& f : left_frames) {
    if (f.shape() != shape) {
      throw std::invalid_argument("SequenceSample: frame resolutions differ");
    }
  }
  for (const auto& f : right_frames) {
    if (f.shape() != shape) {
      throw std::invalid_argument("SequenceSample: frame resolutions differ");
    }
  }
}

}  // namespace mmsf
