// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include <stdexcept>

#include "mmsf/ad/conv.hpp"
#include "mmsf/ad/ops.hpp"
#include "mmsf/net/model.hpp"

namespace mmsf::net {

namespace {
constexpr double kLeak = 0.1;
}

std::vector<ad::Var> Model::encode_pyramid(const Tensor& img) const {
  if (img.rank() != 3 || img.channels() != 3) {
    throw std::invalid_argument("encode_pyramid: expected a {3,h,w} image");
  }
  const int div = 1 << cfg_.num_levels;
  if (img.height() % div != 0 || img.width() % div != 0) {
    throw std::invalid_argument(
        "encode_pyramid: spatial dims must be divisible by 64");
  }
  std::vector<ad::Var> fine_to_coarse;
  ad::Var x = ad::constant(img);
  for (int s = 0; s < cfg_.num_levels; ++s) {
    const std::string base = "encoder.s" + std::to_string(s) + ".conv";
    x = ad::leaky_relu(ad::conv2d(x, params_.at(base + "0.w"),
                                  params_.at(base + "0.b"), 2, 1),
                       kLeak);
    x = ad::leaky_relu(ad::conv2d(x, params_.at(base + "1.w"),
                                  params_.at(base + "1.b"), 1, 1),
                       kLeak);
    fine_to_coarse.push_back(x);
  }
  return {fine_to_coarse.rbegin(), fine_to_coarse.rend()};
}

}  // namespace mmsf::net
