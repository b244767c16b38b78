// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include <stdexcept>
#include <string>

#include "mmsf/ad/conv.hpp"
#include "mmsf/ad/image_ops.hpp"
#include "mmsf/ad/ops.hpp"
#include "mmsf/geometry/geometry.hpp"
#include "mmsf/net/model.hpp"

namespace mmsf::net {

namespace {

constexpr double kLeak = 0.1;
constexpr double kMaskThreshold = 0.5;

std::string lvl(int level, const char* tail) {
  return "decoder.l" + std::to_string(level) + "." + tail;
}

}  // namespace

ad::Var normalize_features(const ad::Var& f) {
  return ad::channel_l2_normalize(f, 1e-8);
}

ad::Var correlation_volume(const ad::Var& f1, const ad::Var& f2, int radius) {
  if (!f1->value.same_shape(f2->value)) {
    throw std::invalid_argument("correlation_volume: shape mismatch");
  }
  return ad::correlation(f1, f2, radius);
}

StateVars convlstm_step(const ad::Var& x, const StateVars& state,
                        const ad::Var& w, const ad::Var& b) {
  const int hidden = state.h->value.channels();
  if (w->value.shape()[1] != x->value.channels() + hidden ||
      w->value.shape()[0] != 4 * hidden) {
    throw std::invalid_argument("convlstm_step: channel mismatch");
  }
  ad::Var gates = ad::conv2d(ad::concat_channels({x, state.h}), w, b, 1, 1);
  ad::Var i = ad::sigmoid(ad::slice_channels(gates, 0, hidden));
  ad::Var f = ad::sigmoid(ad::slice_channels(gates, hidden, hidden));
  ad::Var o = ad::sigmoid(ad::slice_channels(gates, 2 * hidden, hidden));
  ad::Var g = ad::leaky_relu(ad::slice_channels(gates, 3 * hidden, hidden), kLeak);
  ad::Var c_new = ad::add(ad::mul(f, state.c), ad::mul(i, g));
  ad::Var h_new = ad::mul(o, ad::leaky_relu(c_new, kLeak));
  return {h_new, c_new};
}

StateVars Model::warp_lstm_state(const StateVars& state, const Tensor& s_prev,
                                 const Tensor& d_prev, const ad::Var& feat_prev,
                                 const ad::Var& feat_cur,
                                 const StereoRig& rig) const {
  const int h = state.h->value.height(), w = state.h->value.width();
  if (s_prev.height() != h || s_prev.width() != w || d_prev.height() != h ||
      d_prev.width() != w || feat_prev->value.height() != h ||
      !feat_prev->value.same_shape(feat_cur->value)) {
    throw std::invalid_argument("warp_lstm_state: shape mismatch");
  }
  // The transport flow and the splat weights come from the previous frame's
  // estimates as plain values; only the state contents carry gradient.
  const geometry::FlowResult fr = geometry::reproject_with_sceneflow(
      ad::constant(d_prev), ad::constant(s_prev), rig);
  const ad::Var flow = ad::constant(fr.flow->value);
  const ad::Var importance = ad::constant(d_prev);
  geometry::SplatConfig splat;
  ad::Var h_w = geometry::softmax_splat(state.h, flow, importance, splat);
  ad::Var c_w = geometry::softmax_splat(state.c, flow, importance, splat);

  // Affinity between the transported previous features and the current ones
  // decides which warped states survive. Thresholding makes this path
  // non-differentiable by construction.
  const Tensor nprev = normalize_features(feat_prev)->value;
  const Tensor ncur = normalize_features(feat_cur)->value;
  const Tensor moved =
      geometry::softmax_splat(ad::constant(nprev), flow, importance, splat)
          ->value;
  const double mw = params_.at("decoder.mask.w")->value[0];
  const double mb = params_.at("decoder.mask.b")->value[0];
  const int hid = state.h->value.channels();
  Tensor keep({hid, h, w});
  const int c = ncur.channels();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double dot = 0.0;
      for (int ch = 0; ch < c; ++ch) dot += moved.at(ch, y, x) * ncur.at(ch, y, x);
      const double pass = (mw * dot + mb > kMaskThreshold) ? 1.0 : 0.0;
      for (int ch = 0; ch < hid; ++ch) keep.at(ch, y, x) = pass;
    }
  }
  return {ad::mul_const(h_w, keep), ad::mul_const(c_w, keep)};
}

ad::Var Model::direction_pass(const ad::Var& cv_own, const ad::Var& cv_other,
                              const ad::Var& feat, const ad::Var& est_up,
                              const ad::Var& h_up, int level) const {
  ad::Var x = ad::concat_channels({ad::leaky_relu(cv_own, kLeak),
                                   ad::leaky_relu(cv_other, kLeak), feat,
                                   ad::detach(est_up), h_up});
  for (int i = 1; i <= 4; ++i) {
    const std::string base = lvl(level, "c") + std::to_string(i);
    x = ad::leaky_relu(
        ad::conv2d(x, params_.at(base + ".w"), params_.at(base + ".b"), 1, 1),
        kLeak);
  }
  return x;
}

LevelOutputVars Model::decode_level(const ad::Var& cv_fwd, const ad::Var& cv_bwd,
                                    const ad::Var& feat, const PrevLevel& prev,
                                    const StateVars& warped_state, int level,
                                    int level_width) const {
  const int h = feat->value.height(), w = feat->value.width();
  PrevLevel p = prev;
  if (p.empty()) {
    p.s_f = p.s_b = ad::constant(Tensor({3, h, w}));
    p.d_f = p.d_b = ad::constant(Tensor({1, h, w}));
    p.h_f = p.h_b = ad::constant(Tensor({cfg_.lstm_channels(), h, w}));
  }

  const ad::Var lstm_w = params_.at(lvl(level, "lstm.w"));
  const ad::Var lstm_b = params_.at(lvl(level, "lstm.b"));
  auto head = [&](const ad::Var& hid, const char* name) {
    const std::string base = lvl(level, name);
    ad::Var y = ad::leaky_relu(ad::conv2d(hid, params_.at(base + ".c5.w"),
                                          params_.at(base + ".c5.b"), 1, 1),
                               kLeak);
    return ad::conv2d(y, params_.at(base + ".out.w"),
                      params_.at(base + ".out.b"), 1, 1);
  };
  const double d_ceiling = cfg_.disparity_scale * level_width;

  LevelOutputVars out;
  // Forward direction defines the carried state; the backward pass reuses the
  // same weights and input state with the cost volumes swapped.
  ad::Var x_f = direction_pass(cv_fwd, cv_bwd, feat,
                               ad::concat_channels({p.s_f, p.d_f}), p.h_f, level);
  out.state = convlstm_step(x_f, warped_state, lstm_w, lstm_b);
  out.h_f = out.state.h;
  out.s_f = ad::add(head(out.h_f, "sf"), p.s_f);
  out.d_f = ad::mul(ad::sigmoid(head(out.h_f, "disp")), d_ceiling);

  ad::Var x_b = direction_pass(cv_bwd, cv_fwd, feat,
                               ad::concat_channels({p.s_b, p.d_b}), p.h_b, level);
  out.h_b = convlstm_step(x_b, warped_state, lstm_w, lstm_b).h;
  out.s_b = ad::add(head(out.h_b, "sf"), p.s_b);
  out.d_b = ad::mul(ad::sigmoid(head(out.h_b, "disp")), d_ceiling);
  return out;
}

}  // namespace mmsf::net
