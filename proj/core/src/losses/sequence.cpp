// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include <algorithm>
#include <stdexcept>
#include <vector>

#include "mmsf/ad/ops.hpp"
#include "mmsf/losses/losses.hpp"

namespace mmsf::losses {

using ad::Var;

namespace {

void push(Var& acc, const Var& term) {
  acc = acc ? ad::add(acc, term) : term;
}

}  // namespace

LossReport total_sequence_loss(
    const std::vector<std::vector<StepEstimates>>& levels,
    const SequenceSample& sample, const LossWeights& w, bool detach_disparity) {
  w.validate();
  sample.validate();
  sample.rig.validate();
  const int steps = sample.num_frames() - 2;
  if (steps < 2) {
    throw std::invalid_argument(
        "total_sequence_loss: needs at least 4 frames (2 estimated steps)");
  }
  if (sample.right_frames.size() != sample.left_frames.size()) {
    throw std::invalid_argument(
        "total_sequence_loss: stereo pairs required for training");
  }
  if (levels.empty()) {
    throw std::invalid_argument("total_sequence_loss: no pyramid levels");
  }
  for (const auto& level : levels) {
    if (static_cast<int>(level.size()) != steps) {
      throw std::invalid_argument(
          "total_sequence_loss: one estimate per interior frame expected");
    }
  }

  LossReport rep;
  Var l_d_var, l_sf_var;
  const double inv_steps = 1.0 / steps;
  const double inv_pairs = 1.0 / (2 * (steps - 1));

  for (const auto& level : levels) {
    // Estimate j belongs to frame j+1; supervise its disparity against the
    // matching stereo pair.
    for (int j = 0; j < steps; ++j) {
      const DisparityLossTerms t =
          disparity_loss(level[j].d, sample.left_frames[j + 1],
                         sample.right_frames[j + 1], sample.rig, w);
      push(l_d_var, ad::mul(t.total, inv_steps));
      rep.d_photometric += t.photometric->value.item() * inv_steps;
      rep.d_smoothness += t.smoothness->value.item() * inv_steps;
    }
    for (int j = 0; j + 1 < steps; ++j) {
      const StepEstimates& a = level[j];
      const StepEstimates& b = level[j + 1];
      const Var da = detach_disparity ? ad::detach(a.d) : a.d;
      const Var db = detach_disparity ? ad::detach(b.d) : b.d;
      const ad::Tensor& img_a = sample.left_frames[j + 1];
      const ad::Tensor& img_b = sample.left_frames[j + 2];
      const SceneflowLossTerms fwd =
          sceneflow_loss(da, a.s_f, img_a, db, b.s_b, img_b, sample.rig, w);
      const SceneflowLossTerms bwd =
          sceneflow_loss(db, b.s_b, img_b, da, a.s_f, img_a, sample.rig, w);
      for (const SceneflowLossTerms* t : {&fwd, &bwd}) {
        push(l_sf_var, ad::mul(t->total, inv_pairs));
        rep.sf_photometric += t->photometric->value.item() * inv_pairs;
        rep.sf_point += t->point->value.item() * inv_pairs;
        rep.sf_smoothness += t->smoothness->value.item() * inv_pairs;
      }
    }
  }

  rep.d_term = l_d_var;
  rep.sf_term = l_sf_var;
  rep.l_d = l_d_var->value.item();
  rep.l_sf = l_sf_var->value.item();
  rep.lambda_sf = rep.l_d / std::max(rep.l_sf, w.eps_balance);
  rep.total = ad::add(l_d_var, ad::mul(l_sf_var, rep.lambda_sf));
  rep.l_total = rep.total->value.item();
  return rep;
}

}  // namespace mmsf::losses
