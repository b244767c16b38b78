// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mmsf/ad/image_ops.hpp"
#include "mmsf/ad/ops.hpp"
#include "mmsf/core/ops.hpp"
#include "mmsf/geometry/geometry.hpp"
#include "mmsf/net/model.hpp"

namespace mmsf::net {

namespace {

std::string lvl(int level, const char* tail) {
  return "decoder.l" + std::to_string(level) + "." + tail;
}

ad::Var upsample(const ad::Var& x, int oh, int ow, double value_scale) {
  ad::Var r = ad::bilinear_resize(x, oh, ow);
  return value_scale == 1.0 ? r : ad::mul(r, value_scale);
}

StateVars zero_state(int c, int h, int w) {
  return {ad::constant(Tensor({c, h, w})), ad::constant(Tensor({c, h, w}))};
}

StereoRig level_rig(const StereoRig& rig, int h, int w, int full_h, int full_w) {
  StereoRig out = rig;
  out.intrinsics = rig.intrinsics.scaled(static_cast<double>(w) / full_w,
                                         static_cast<double>(h) / full_h);
  return out;
}

// Optical flow induced by level-resolution estimates, as a plain value map:
// the cost-volume warp and the state transport both run on detached flows.
Tensor estimate_flow(const Tensor& d, const Tensor& s, const StereoRig& rig) {
  return geometry::reproject_with_sceneflow(ad::constant(d), ad::constant(s),
                                            rig)
      .flow->value;
}

}  // namespace

Model::Model(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), params_(seed) {
  cfg_.validate();
  const int cv = (2 * cfg_.correlation_radius + 1) *
                 (2 * cfg_.correlation_radius + 1);
  int in_c = 3;
  for (int s = 0; s < cfg_.num_levels; ++s) {
    const std::string base = "encoder.s" + std::to_string(s) + ".conv";
    const int out_c = cfg_.encoder_channels(s);
    params_.conv(base + "0.w", out_c, in_c, 3);
    params_.zeros(base + "0.b", {out_c});
    params_.conv(base + "1.w", out_c, out_c, 3);
    params_.zeros(base + "1.b", {out_c});
    in_c = out_c;
  }
  const int lstm = cfg_.lstm_channels();
  const int c5 = cfg_.branch_channels();
  for (int l = 0; l < cfg_.decode_levels(); ++l) {
    const int feat = cfg_.encoder_channels(cfg_.num_levels - 1 - l);
    int width = 2 * cv + feat + 4 + lstm;
    for (int i = 1; i <= 4; ++i) {
      const int out_c = cfg_.trunk_channels(i - 1);
      const std::string base = lvl(l, "c") + std::to_string(i);
      params_.conv(base + ".w", out_c, width, 3);
      params_.zeros(base + ".b", {out_c});
      width = out_c;
    }
    params_.conv(lvl(l, "lstm.w"), 4 * lstm, width + lstm, 3);
    params_.zeros(lvl(l, "lstm.b"), {4 * lstm});
    for (const char* branch : {"sf", "disp"}) {
      const std::string base = lvl(l, branch);
      params_.conv(base + ".c5.w", c5, lstm, 3);
      params_.zeros(base + ".c5.b", {c5});
      const int out_c = branch[0] == 's' ? 3 : 1;
      params_.conv(base + ".out.w", out_c, c5, 3);
      params_.zeros(base + ".out.b", {out_c});
    }
  }
  // Feature-affinity gate; identity features must pass the 0.5 threshold at
  // initialization, hence weight 1 / bias 0.
  params_.constant_fill("decoder.mask.w", {1, 1, 1, 1}, 1.0);
  params_.zeros("decoder.mask.b", {1});
}

long Model::decoder_parameter_count() const {
  return params_.count_with_prefix("decoder.");
}

std::map<std::string, Tensor> Model::state_arrays() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, v] : params_.all()) out.emplace(name, v->value);
  return out;
}

void Model::load_state_arrays(const std::map<std::string, Tensor>& arrays) {
  for (const auto& [name, v] : params_.all()) {
    auto it = arrays.find(name);
    if (it == arrays.end()) {
      throw std::runtime_error("load_state_arrays: missing parameter " + name);
    }
    if (!it->second.same_shape(v->value)) {
      throw std::runtime_error("load_state_arrays: shape mismatch for " + name);
    }
    v->value = it->second;
  }
}

ForwardResult Model::forward(const SequenceSample& sample,
                             const Carry& carry) const {
  sample.validate();
  const int n = sample.num_frames();
  if (n < (cfg_.two_frame_mode ? 2 : 3)) {
    throw std::invalid_argument("Model::forward: too few frames for the mode");
  }
  const int full_h = sample.left_frames[0].height();
  const int full_w = sample.left_frames[0].width();
  const int n_levels = cfg_.decode_levels();
  const int radius = cfg_.correlation_radius;
  const int cv_ch = (2 * radius + 1) * (2 * radius + 1);

  std::vector<std::vector<ad::Var>> pyr(n), npyr(n);
  for (int t = 0; t < n; ++t) {
    pyr[t] = encode_pyramid(sample.left_frames[t]);
    npyr[t].reserve(n_levels);
    for (int li = 0; li < n_levels; ++li) {
      npyr[t].push_back(normalize_features(pyr[t][li]));
    }
  }

  const int t_first = cfg_.two_frame_mode ? 0 : 1;
  const int t_last = n - 2;
  ForwardResult res;
  res.levels.resize(n_levels);

  std::vector<StateVars> prev_states;
  Tensor prev_sf_full, prev_d_full;
  if (!cfg_.two_frame_mode && !carry.empty()) {
    if (static_cast<int>(carry.states.size()) != n_levels) {
      throw std::invalid_argument("Model::forward: carry level count mismatch");
    }
    prev_states.reserve(n_levels);
    for (const LSTMState& s : carry.states) {
      prev_states.push_back({ad::constant(s.h), ad::constant(s.c)});
    }
    prev_sf_full = carry.s_f;
    prev_d_full = carry.d;
  }

  for (int t = t_first; t <= t_last; ++t) {
    PrevLevel prev;
    std::vector<StateVars> new_states(n_levels);
    losses::StepEstimates finest;
    ad::Var fin_d_f, fin_d_b;
    for (int li = 0; li < n_levels; ++li) {
      const ad::Var& feat = pyr[t][li];
      const int h_l = feat->value.height(), w_l = feat->value.width();
      const StereoRig rig_l = level_rig(sample.rig, h_l, w_l, full_h, full_w);

      ad::Var cv_fwd, cv_bwd;
      if (prev.empty()) {
        cv_fwd = correlation_volume(npyr[t][li], npyr[t + 1][li], radius);
        cv_bwd = cfg_.two_frame_mode
                     ? ad::constant(Tensor({cv_ch, h_l, w_l}))
                     : correlation_volume(npyr[t][li], npyr[t - 1][li], radius);
      } else {
        const Tensor flow_f =
            estimate_flow(prev.d_f->value, prev.s_f->value, rig_l);
        cv_fwd = correlation_volume(
            npyr[t][li],
            ad::grid_sample(npyr[t + 1][li], ad::constant(flow_f)).out, radius);
        if (cfg_.two_frame_mode) {
          cv_bwd = ad::constant(Tensor({cv_ch, h_l, w_l}));
        } else {
          const Tensor flow_b =
              estimate_flow(prev.d_b->value, prev.s_b->value, rig_l);
          cv_bwd = correlation_volume(
              npyr[t][li],
              ad::grid_sample(npyr[t - 1][li], ad::constant(flow_b)).out,
              radius);
        }
      }

      StateVars warped;
      if (cfg_.two_frame_mode || prev_states.empty()) {
        warped = zero_state(cfg_.lstm_channels(), h_l, w_l);
      } else {
        const Tensor s_lvl =
            rescale_to_level(prev_sf_full, h_l, w_l, FieldKind::kSceneFlow);
        const Tensor d_lvl =
            rescale_to_level(prev_d_full, h_l, w_l, FieldKind::kDisparity);
        warped = warp_lstm_state(prev_states[li], s_lvl, d_lvl, pyr[t - 1][li],
                                 feat, rig_l);
      }

      LevelOutputVars out =
          decode_level(cv_fwd, cv_bwd, feat, prev, warped, li, w_l);
      new_states[li] = out.state;

      const double dscale = static_cast<double>(full_w) / w_l;
      losses::StepEstimates est;
      est.s_f = upsample(out.s_f, full_h, full_w, 1.0);
      est.s_b = upsample(out.s_b, full_h, full_w, 1.0);
      est.d = upsample(ad::mul(ad::add(out.d_f, out.d_b), 0.5), full_h, full_w,
                       dscale);
      res.levels[li].push_back(est);
      if (li == n_levels - 1) {
        finest = est;
        fin_d_f = upsample(out.d_f, full_h, full_w, dscale);
        fin_d_b = upsample(out.d_b, full_h, full_w, dscale);
      } else {
        const ad::Var& next_feat = pyr[t][li + 1];
        const int h_n = next_feat->value.height(), w_n = next_feat->value.width();
        const double dgrow = static_cast<double>(w_n) / w_l;
        PrevLevel up;
        up.s_f = upsample(out.s_f, h_n, w_n, 1.0);
        up.s_b = upsample(out.s_b, h_n, w_n, 1.0);
        up.d_f = upsample(out.d_f, h_n, w_n, dgrow);
        up.d_b = upsample(out.d_b, h_n, w_n, dgrow);
        up.h_f = upsample(out.h_f, h_n, w_n, 1.0);
        up.h_b = upsample(out.h_b, h_n, w_n, 1.0);
        prev = up;
      }
    }

    res.bundles.push_back(make_bundle(finest.s_f->value, finest.s_b->value,
                                      fin_d_f->value, fin_d_b->value));
    prev_states = std::move(new_states);
    prev_sf_full = finest.s_f->value;
    prev_d_full = finest.d->value;
  }

  if (!cfg_.two_frame_mode) {
    res.carry.states.reserve(n_levels);
    for (const StateVars& s : prev_states) {
      res.carry.states.push_back({s.h->value, s.c->value});
    }
    res.carry.s_f = prev_sf_full;
    res.carry.d = prev_d_full;
  }
  return res;
}

}  // namespace mmsf::net
