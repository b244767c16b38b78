// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "mmsf/net/model.hpp"

namespace mmsf::net {

namespace {

constexpr int kEncoderPlan[6] = {32, 64, 96, 128, 192, 256};
constexpr int kTrunkPlan[4] = {128, 128, 96, 64};
constexpr int kLstmPlan = 32;
constexpr int kBranchPlan = 32;

int scaled(int full, double m) {
  return std::max(1, static_cast<int>(std::lround(full * m)));
}

}  // namespace

int ModelConfig::encoder_channels(int stage) const {
  return scaled(kEncoderPlan[stage], width_multiplier);
}
int ModelConfig::trunk_channels(int layer) const {
  return scaled(kTrunkPlan[layer], width_multiplier);
}
int ModelConfig::lstm_channels() const {
  return scaled(kLstmPlan, width_multiplier);
}
int ModelConfig::branch_channels() const {
  return scaled(kBranchPlan, width_multiplier);
}

void ModelConfig::validate() const {
  if (num_levels != 6) {
    throw std::invalid_argument("ModelConfig: encoder is a 6-stage pyramid");
  }
  if (correlation_radius < 1) {
    throw std::invalid_argument("ModelConfig: correlation_radius must be >= 1");
  }
  if (split_at != 2) {
    throw std::invalid_argument("ModelConfig: heads split at the last 2 layers");
  }
  if (!(width_multiplier > 0.0) || !(disparity_scale > 0.0)) {
    throw std::invalid_argument("ModelConfig: scales must be positive");
  }
}

std::uint64_t ModelConfig::fingerprint() const {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "L%d r%d s%d t%d m%.17g d%.17g", num_levels,
                correlation_radius, split_at, two_frame_mode ? 1 : 0,
                width_multiplier, disparity_scale);
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (const char* p = buf; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 1099511628211ull;
  }
  return h;
}

ad::Var ParamStore::insert(const std::string& name, Tensor init) {
  if (params_.count(name)) {
    throw std::logic_error("ParamStore: duplicate parameter " + name);
  }
  ad::Var v = ad::leaf(std::move(init));
  params_.emplace(name, v);
  return v;
}

ad::Var ParamStore::conv(const std::string& name, int out_c, int in_c, int k) {
  Tensor w({out_c, in_c, k, k});
  const double stddev = std::sqrt(2.0 / (in_c * k * k));
  std::normal_distribution<double> dist(0.0, stddev);
  for (long i = 0; i < w.numel(); ++i) w[i] = dist(rng_);
  return insert(name, std::move(w));
}

ad::Var ParamStore::zeros(const std::string& name,
                          const std::vector<int>& shape) {
  return insert(name, Tensor(shape));
}

ad::Var ParamStore::constant_fill(const std::string& name,
                                  const std::vector<int>& shape, double value) {
  return insert(name, Tensor(shape, value));
}

ad::Var ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw std::out_of_range("ParamStore: unknown parameter " + name);
  }
  return it->second;
}

long ParamStore::total_parameters() const { return count_with_prefix(""); }

long ParamStore::count_with_prefix(const std::string& prefix) const {
  long n = 0;
  for (const auto& [name, v] : params_) {
    if (name.rfind(prefix, 0) == 0) n += v->value.numel();
  }
  return n;
}

void ParamStore::zero_grads() const {
  for (const auto& [name, v] : params_) v->clear_grad();
}

long joint_reference_decoder_count(const ModelConfig& cfg) {
  const int cv = (2 * cfg.correlation_radius + 1) * (2 * cfg.correlation_radius + 1);
  const int t1 = cfg.trunk_channels(0), t2 = cfg.trunk_channels(1),
            t3 = cfg.trunk_channels(2), t4 = cfg.trunk_channels(3);
  const int c5 = cfg.branch_channels();
  auto conv_n = [](int in, int out, int k) {
    return static_cast<long>(out) * in * k * k + out;
  };
  long total = 0;
  // One more decode level than ours: the reference lineage ran a 7-level
  // pyramid. Its extra (finest) level sees half-res encoder features.
  for (int l = 0; l <= cfg.decode_levels(); ++l) {
    const int feat = cfg.encoder_channels(cfg.num_levels - 1 - l);
    const int in = 2 * cv + feat + 4 + c5;  // c5-wide upsampled decoder feature
    total += conv_n(in, t1, 3) + conv_n(t1, t2, 3) + conv_n(t2, t3, 3) +
             conv_n(t3, t4, 3);
    total += conv_n(t4, c5, 3) + conv_n(c5, 4, 3);  // joint head: sf + d
  }
  // Dilated refinement network at the finest level (widths of the lineage).
  const int ctx[6] = {scaled(128, cfg.width_multiplier),
                      scaled(128, cfg.width_multiplier),
                      scaled(128, cfg.width_multiplier),
                      scaled(96, cfg.width_multiplier),
                      scaled(64, cfg.width_multiplier),
                      scaled(32, cfg.width_multiplier)};
  int in = c5 + 4;
  for (int i = 0; i < 6; ++i) {
    total += conv_n(in, ctx[i], 3);
    in = ctx[i];
  }
  total += conv_n(in, 4, 3);
  return total;
}

}  // namespace mmsf::net
