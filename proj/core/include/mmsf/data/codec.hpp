// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
//
// PNG interchange codecs. Disparity is 16-bit grayscale, value = round(d*256),
// 0 reserved for invalid pixels. Flow is 16-bit RGB, channels 1-2 =
// round(u*64 + 2^15), channel 3 = validity. Color frames are plain 8-bit RGB.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmsf/core/types.hpp"

namespace mmsf::data {

// Quantizes {1,h,w} disparities; `valid` may be empty (all pixels valid).
// Throws std::out_of_range when a valid pixel falls outside (0, 256).
std::vector<std::uint8_t> encode_disparity_png16(const Tensor& d,
                                                 const Tensor& valid = {});

struct DecodedDisparity {
  Tensor d;      // {1,h,w}, 0 at invalid pixels
  Tensor valid;  // {1,h,w} binary
};
DecodedDisparity decode_disparity_png16(const std::vector<std::uint8_t>& bytes);

// Quantizes {2,h,w} flow; throws std::out_of_range when a valid component
// falls outside (-512, 512).
std::vector<std::uint8_t> encode_flow_png16(const Tensor& flow,
                                            const Tensor& valid = {});

struct DecodedFlow {
  Tensor flow;   // {2,h,w}, 0 at invalid pixels
  Tensor valid;  // {1,h,w} binary
};
DecodedFlow decode_flow_png16(const std::vector<std::uint8_t>& bytes);

// {3,h,w} in [0,1] <-> 8-bit RGB. Encoding clamps, so a round trip is only
// exact for values already on the 1/255 grid.
std::vector<std::uint8_t> encode_image_png8(const Tensor& img);
Tensor decode_image_png8(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace mmsf::data
