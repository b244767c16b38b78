// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include "mmsf/data/codec.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mmsf::data {
namespace {

// libpng reports errors by longjmp back into the frame that owns the structs;
// every jump target below only tears the structs down and throws.

struct Sink {
  std::vector<std::uint8_t>* out;
};

void sink_write(png_structp png, png_bytep data, png_size_t n) {
  auto* s = static_cast<Sink*>(png_get_io_ptr(png));
  s->out->insert(s->out->end(), data, data + n);
}

void sink_flush(png_structp) {}

struct Source {
  const std::uint8_t* data;
  png_size_t size;
  png_size_t pos;
};

void source_read(png_structp png, png_bytep out, png_size_t n) {
  auto* s = static_cast<Source*>(png_get_io_ptr(png));
  if (s->pos + n > s->size) png_error(png, "truncated stream");
  std::memcpy(out, s->data + s->pos, n);
  s->pos += n;
}

// Rows are host-endian; 16-bit content is swapped to PNG network order.
std::vector<std::uint8_t> write_png(int h, int w, int color_type, int bit_depth,
                                    const std::vector<png_bytep>& rows) {
  std::vector<std::uint8_t> out;
  Sink sink{&out};
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png: allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png: allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png: encode failed");
  }
  png_set_write_fn(png, &sink, sink_write, sink_flush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w),
               static_cast<png_uint_32>(h), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16 && std::endian::native == std::endian::little) {
    png_set_swap(png);
  }
  for (png_bytep row : rows) png_write_row(png, row);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

struct RawPng {
  int h = 0;
  int w = 0;
  int channels = 0;
  std::vector<std::uint16_t> pix;  // row-major, interleaved channels
};

RawPng read_png16(const std::vector<std::uint8_t>& bytes, int color_type) {
  Source src{bytes.data(), bytes.size(), 0};
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png: allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png: allocation failed");
  }
  RawPng img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png: decode failed");
  }
  png_set_read_fn(png, &src, source_read);
  png_read_info(png, info);
  if (png_get_bit_depth(png, info) != 16 ||
      png_get_color_type(png, info) != color_type) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png: unexpected format");
  }
  if (std::endian::native == std::endian::little) png_set_swap(png);
  img.h = static_cast<int>(png_get_image_height(png, info));
  img.w = static_cast<int>(png_get_image_width(png, info));
  img.channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  img.pix.resize(static_cast<size_t>(img.h) * img.w * img.channels);
  for (int y = 0; y < img.h; ++y) {
    png_read_row(png, reinterpret_cast<png_bytep>(
                     img.pix.data() + static_cast<size_t>(y) * img.w * img.channels),
                 nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

RawPng read_png8_rgb(const std::vector<std::uint8_t>& bytes) {
  Source src{bytes.data(), bytes.size(), 0};
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png: allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png: allocation failed");
  }
  RawPng img;
  std::vector<std::uint8_t> row8;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png: decode failed");
  }
  png_set_read_fn(png, &src, source_read);
  png_read_info(png, info);
  // Normalize palettes, gray and alpha variants to plain 8-bit RGB.
  png_set_expand(png);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  if (png_get_channels(png, info) != 3 || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png: unexpected format");
  }
  img.h = static_cast<int>(png_get_image_height(png, info));
  img.w = static_cast<int>(png_get_image_width(png, info));
  img.channels = 3;
  img.pix.resize(static_cast<size_t>(img.h) * img.w * 3);
  row8.resize(static_cast<size_t>(img.w) * 3);
  for (int y = 0; y < img.h; ++y) {
    png_read_row(png, row8.data(), nullptr);
    for (size_t i = 0; i < row8.size(); ++i) {
      img.pix[static_cast<size_t>(y) * img.w * 3 + i] = row8[i];
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

bool pixel_valid(const Tensor& valid, long p) {
  return valid.numel() == 0 || valid[p] != 0.0;
}

}  // namespace

std::vector<std::uint8_t> encode_disparity_png16(const Tensor& d,
                                                 const Tensor& valid) {
  if (d.rank() != 3 || d.channels() != 1) {
    throw std::invalid_argument("encode_disparity_png16: {1,h,w} expected");
  }
  const int h = d.height();
  const int w = d.width();
  if (valid.numel() != 0 && valid.numel() != d.numel()) {
    throw std::invalid_argument("encode_disparity_png16: mask size mismatch");
  }
  std::vector<std::uint16_t> pix(static_cast<size_t>(h) * w, 0);
  for (long p = 0; p < d.numel(); ++p) {
    if (!pixel_valid(valid, p)) continue;
    const long q = std::llround(d[p] * 256.0);
    if (q < 1 || q > 65535) {
      throw std::out_of_range("encode_disparity_png16: disparity not in (0, 256)");
    }
    pix[static_cast<size_t>(p)] = static_cast<std::uint16_t>(q);
  }
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) {
    rows[y] = reinterpret_cast<png_bytep>(pix.data() + static_cast<size_t>(y) * w);
  }
  return write_png(h, w, PNG_COLOR_TYPE_GRAY, 16, rows);
}

DecodedDisparity decode_disparity_png16(const std::vector<std::uint8_t>& bytes) {
  const RawPng img = read_png16(bytes, PNG_COLOR_TYPE_GRAY);
  DecodedDisparity out;
  out.d = Tensor({1, img.h, img.w});
  out.valid = Tensor({1, img.h, img.w});
  for (long p = 0; p < out.d.numel(); ++p) {
    const std::uint16_t q = img.pix[static_cast<size_t>(p)];
    if (q == 0) continue;
    out.d[p] = q / 256.0;
    out.valid[p] = 1.0;
  }
  return out;
}

std::vector<std::uint8_t> encode_flow_png16(const Tensor& flow,
                                            const Tensor& valid) {
  if (flow.rank() != 3 || flow.channels() != 2) {
    throw std::invalid_argument("encode_flow_png16: {2,h,w} expected");
  }
  const int h = flow.height();
  const int w = flow.width();
  const long plane = static_cast<long>(h) * w;
  if (valid.numel() != 0 && valid.numel() != plane) {
    throw std::invalid_argument("encode_flow_png16: mask size mismatch");
  }
  std::vector<std::uint16_t> pix(static_cast<size_t>(plane) * 3);
  for (long p = 0; p < plane; ++p) {
    std::uint16_t* px = pix.data() + static_cast<size_t>(p) * 3;
    if (!pixel_valid(valid, p)) {
      px[0] = px[1] = 32768;
      px[2] = 0;
      continue;
    }
    for (int c = 0; c < 2; ++c) {
      const long q = std::llround(flow[c * plane + p] * 64.0) + 32768;
      if (q < 0 || q > 65535) {
        throw std::out_of_range("encode_flow_png16: component not in (-512, 512)");
      }
      px[c] = static_cast<std::uint16_t>(q);
    }
    px[2] = 1;
  }
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) {
    rows[y] = reinterpret_cast<png_bytep>(pix.data() + static_cast<size_t>(y) * w * 3);
  }
  return write_png(h, w, PNG_COLOR_TYPE_RGB, 16, rows);
}

DecodedFlow decode_flow_png16(const std::vector<std::uint8_t>& bytes) {
  const RawPng img = read_png16(bytes, PNG_COLOR_TYPE_RGB);
  DecodedFlow out;
  out.flow = Tensor({2, img.h, img.w});
  out.valid = Tensor({1, img.h, img.w});
  const long plane = static_cast<long>(img.h) * img.w;
  for (long p = 0; p < plane; ++p) {
    const std::uint16_t* px = img.pix.data() + static_cast<size_t>(p) * 3;
    if (px[2] == 0) continue;
    out.flow[p] = (px[0] - 32768.0) / 64.0;
    out.flow[plane + p] = (px[1] - 32768.0) / 64.0;
    out.valid[p] = 1.0;
  }
  return out;
}

std::vector<std::uint8_t> encode_image_png8(const Tensor& img) {
  if (img.rank() != 3 || img.channels() != 3) {
    throw std::invalid_argument("encode_image_png8: {3,h,w} expected");
  }
  const int h = img.height();
  const int w = img.width();
  const long plane = static_cast<long>(h) * w;
  std::vector<std::uint8_t> pix(static_cast<size_t>(plane) * 3);
  for (long p = 0; p < plane; ++p) {
    for (int c = 0; c < 3; ++c) {
      const double v = std::clamp(img[c * plane + p], 0.0, 1.0);
      pix[static_cast<size_t>(p) * 3 + c] =
          static_cast<std::uint8_t>(std::llround(v * 255.0));
    }
  }
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) {
    rows[y] = pix.data() + static_cast<size_t>(y) * w * 3;
  }
  return write_png(h, w, PNG_COLOR_TYPE_RGB, 8, rows);
}

Tensor decode_image_png8(const std::vector<std::uint8_t>& bytes) {
  const RawPng img = read_png8_rgb(bytes);
  Tensor out({3, img.h, img.w});
  const long plane = static_cast<long>(img.h) * img.w;
  for (long p = 0; p < plane; ++p) {
    for (int c = 0; c < 3; ++c) {
      out[c * plane + p] = img.pix[static_cast<size_t>(p) * 3 + c] / 255.0;
    }
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_file: cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_file: cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write_file: short write to " + path);
}

}  // namespace mmsf::data
