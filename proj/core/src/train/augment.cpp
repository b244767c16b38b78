// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "mmsf/train/train.hpp"

namespace mmsf::train {

namespace {

Tensor hflip(const Tensor& img) {
  const int c = img.channels(), h = img.height(), w = img.width();
  Tensor out({c, h, w});
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out.at(ch, y, x) = img.at(ch, y, w - 1 - x);
    }
  }
  return out;
}

// Bilinear resample of the window [x0, x0+cw) x [y0, y0+ch) onto oh x ow,
// half-pixel centers, replicate at the border. Window == image and matching
// output size reduce to an exact copy.
Tensor crop_resize(const Tensor& img, double x0, double y0, double cw,
                   double ch, int oh, int ow) {
  const int c = img.channels(), h = img.height(), w = img.width();
  Tensor out({c, oh, ow});
  for (int oy = 0; oy < oh; ++oy) {
    double sy = y0 + (oy + 0.5) * ch / oh - 0.5;
    sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
    const int iy = std::min(static_cast<int>(sy), h > 1 ? h - 2 : 0);
    const double fy = sy - iy;
    for (int ox = 0; ox < ow; ++ox) {
      double sx = x0 + (ox + 0.5) * cw / ow - 0.5;
      sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
      const int ix = std::min(static_cast<int>(sx), w > 1 ? w - 2 : 0);
      const double fx = sx - ix;
      for (int cc = 0; cc < c; ++cc) {
        const double a = img.at(cc, iy, ix), b = img.at(cc, iy, ix + 1);
        const double d = img.at(cc, iy + 1, ix), e = img.at(cc, iy + 1, ix + 1);
        out.at(cc, oy, ox) = (1.0 - fy) * ((1.0 - fx) * a + fx * b) +
                             fy * ((1.0 - fx) * d + fx * e);
      }
    }
  }
  return out;
}

void photometric_chain(Tensor& img, const AugmentParams& p) {
  const int c = img.channels(), h = img.height(), w = img.width();
  for (int ch = 0; ch < c; ++ch) {
    const double gain = p.brightness * p.color[ch % 3];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double v = std::pow(std::max(img.at(ch, y, x), 0.0), p.gamma) * gain;
        img.at(ch, y, x) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
}

}  // namespace

AugmentParams draw_augment_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AugmentParams p;
  p.flip = unit(rng) < 0.5;
  p.scale = 0.93 + 0.07 * unit(rng);
  p.shift_x = -0.035 + 0.07 * unit(rng);
  p.shift_y = -0.035 + 0.07 * unit(rng);
  p.photometric = unit(rng) < 0.5;
  p.gamma = 0.8 + 0.4 * unit(rng);
  p.brightness = 0.5 + 1.5 * unit(rng);
  for (double& ck : p.color) ck = 0.8 + 0.4 * unit(rng);
  return p;
}

SequenceSample apply_augment(const SequenceSample& sample,
                             const AugmentParams& p, int out_h, int out_w) {
  sample.validate();
  const int h = sample.left_frames[0].height();
  const int w = sample.left_frames[0].width();

  SequenceSample out;
  out.rig = sample.rig;
  std::vector<Tensor> lefts = sample.left_frames;
  std::vector<Tensor> rights = sample.right_frames;

  if (p.flip) {
    for (Tensor& t : lefts) t = hflip(t);
    for (Tensor& t : rights) t = hflip(t);
    // Mirroring swaps the camera order: the flipped right view images the
    // mirrored scene from the left of the flipped left view.
    if (!rights.empty()) std::swap(lefts, rights);
    out.rig.intrinsics.cx = (w - 1.0) - out.rig.intrinsics.cx;
  }

  const double cw = p.scale * w, ch = p.scale * h;
  double x0 = (w - cw) / 2.0 + p.shift_x * w;
  double y0 = (h - ch) / 2.0 + p.shift_y * h;
  x0 = std::clamp(x0, 0.0, w - cw);
  y0 = std::clamp(y0, 0.0, h - ch);
  for (Tensor& t : lefts) t = crop_resize(t, x0, y0, cw, ch, out_h, out_w);
  for (Tensor& t : rights) t = crop_resize(t, x0, y0, cw, ch, out_h, out_w);
  const double rx = out_w / cw, ry = out_h / ch;
  Intrinsics& k = out.rig.intrinsics;
  k.fx *= rx;
  k.fy *= ry;
  k.cx = (k.cx - x0 + 0.5) * rx - 0.5;
  k.cy = (k.cy - y0 + 0.5) * ry - 0.5;

  if (p.photometric) {
    for (Tensor& t : lefts) photometric_chain(t, p);
    for (Tensor& t : rights) photometric_chain(t, p);
  }
  out.left_frames = std::move(lefts);
  out.right_frames = std::move(rights);
  return out;
}

SequenceSample augment_sequence(const SequenceSample& sample,
                                std::mt19937_64& rng, int out_h, int out_w) {
  return apply_augment(sample, draw_augment_params(rng), out_h, out_w);
}

}  // namespace mmsf::train
