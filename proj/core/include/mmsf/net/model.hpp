// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
//
// The pyramid estimator. A 6-stage feature encoder feeds a decoder that runs
// coarse-to-fine over the 5 coarsest levels; per level it correlates the
// reference features against both temporal neighbors, runs a shared trunk
// with a ConvLSTM carried across time via forward warping, and splits into
// scene-flow and disparity heads for the last two layers. Both temporal
// directions reuse the same weights with the cost-volume order swapped.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mmsf/ad/graph.hpp"
#include "mmsf/core/types.hpp"
#include "mmsf/losses/losses.hpp"

namespace mmsf::net {

struct ModelConfig {
  int num_levels = 6;          // encoder stages, each halving the resolution
  int correlation_radius = 4;  // cost volume spans (2r+1)^2 displacements
  int split_at = 2;            // trailing decoder layers private per head
  bool two_frame_mode = false; // pairwise estimation: no backward correlation
                               // target and no temporal recurrence
  double width_multiplier = 0.25;
  double disparity_scale = 0.3;  // disparity head ceiling, fraction of width

  // Channel plans are full-size widths scaled by width_multiplier (min 1).
  int encoder_channels(int stage) const;  // stage 0 = half res .. 5 = 1/64
  int trunk_channels(int layer) const;    // layers 0..3
  int lstm_channels() const;
  int branch_channels() const;
  int decode_levels() const { return num_levels - 1; }

  void validate() const;
  std::uint64_t fingerprint() const;
};

// Named leaf tensors. Construction order is fixed by the model, so a seed
// fully determines the initialization.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed) : rng_(seed) {}

  ad::Var conv(const std::string& name, int out_c, int in_c, int k);  // He init
  ad::Var zeros(const std::string& name, const std::vector<int>& shape);
  ad::Var constant_fill(const std::string& name, const std::vector<int>& shape,
                        double value);

  const std::map<std::string, ad::Var>& all() const { return params_; }
  ad::Var at(const std::string& name) const;
  long total_parameters() const;
  long count_with_prefix(const std::string& prefix) const;
  void zero_grads() const;

 private:
  ad::Var insert(const std::string& name, Tensor init);
  std::map<std::string, ad::Var> params_;
  std::mt19937_64 rng_;
};

struct StateVars {
  ad::Var h, c;
  bool empty() const { return !h; }
};

// ConvLSTM with sigmoid gates and leaky-ReLU (0.1) cell/output nonlinearity.
// The returned hidden state is the cell's output.
StateVars convlstm_step(const ad::Var& x, const StateVars& state,
                        const ad::Var& w, const ad::Var& b);

// Thin contract wrapper: inputs must be channel-normalized feature maps.
ad::Var correlation_volume(const ad::Var& f1, const ad::Var& f2, int radius);
ad::Var normalize_features(const ad::Var& f);

// Per-direction estimates upsampled from the coarser level to the current
// one, plus the coarser hidden output. Empty at the coarsest level.
struct PrevLevel {
  ad::Var s_f, s_b;    // {3,h,w}
  ad::Var d_f, d_b;    // {1,h,w}, pixels at this level's scale
  ad::Var h_f, h_b;    // upsampled LSTM outputs
  bool empty() const { return !s_f; }
};

struct LevelOutputVars {
  ad::Var s_f, s_b;  // scene flow, meters
  ad::Var d_f, d_b;  // disparity, level pixels, strictly positive
  ad::Var h_f, h_b;  // hidden outputs of the two directional runs
  StateVars state;   // forward run's new state, carried across time
};

struct Carry {
  std::vector<LSTMState> states;  // per decode level, coarse to fine
  Tensor s_f;                     // last estimated frame: forward scene flow
  Tensor d;                       // and disparity, both at input resolution
  bool empty() const { return states.empty(); }
};

struct ForwardResult {
  // levels[l][j]: estimates of pyramid level l (coarse to fine) for interior
  // frame j+1, upsampled to input resolution; feeds the sequence loss.
  std::vector<std::vector<losses::StepEstimates>> levels;
  // Finest-level estimates per interior frame, values only.
  std::vector<EstimateBundle> bundles;
  Carry carry;
};

class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t seed);

  ForwardResult forward(const SequenceSample& sample,
                        const Carry& carry = {}) const;

  // Feature maps coarse to fine: index 0 = 1/64 resolution, last = 1/2.
  std::vector<ad::Var> encode_pyramid(const Tensor& img) const;

  // Splats state along the flow induced by the previous frame's estimates
  // (given at this level's scale) and zeroes pixels whose warped feature no
  // longer matches. The flow and splat weights carry no gradient; the state
  // itself does. The match mask is not differentiable.
  StateVars warp_lstm_state(const StateVars& state, const Tensor& s_prev,
                            const Tensor& d_prev, const ad::Var& feat_prev,
                            const ad::Var& feat_cur,
                            const StereoRig& rig) const;

  LevelOutputVars decode_level(const ad::Var& cv_fwd, const ad::Var& cv_bwd,
                               const ad::Var& feat, const PrevLevel& prev,
                               const StateVars& warped_state, int level,
                               int level_width) const;

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  long decoder_parameter_count() const;

  // Checkpoint interface: hierarchical name -> tensor snapshot.
  std::map<std::string, Tensor> state_arrays() const;
  void load_state_arrays(const std::map<std::string, Tensor>& arrays);

 private:
  ad::Var direction_pass(const ad::Var& cv_own, const ad::Var& cv_other,
                         const ad::Var& feat, const ad::Var& est_up,
                         const ad::Var& h_up, int level) const;

  ModelConfig cfg_;
  ParamStore params_;
};

// Parameter count of the single-head alternative this decoder replaces: the
// same trunk widths with one joint 4-channel head, no recurrent cell, plus
// the dilated refinement network such a decoder needs at the finest level,
// and one more decode level (its lineage used a 7-level pyramid).
long joint_reference_decoder_count(const ModelConfig& cfg);

}  // namespace mmsf::net
