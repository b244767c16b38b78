// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include <cmath>
#include <stdexcept>

#include "mmsf/ad/image_ops.hpp"
#include "mmsf/ad/ops.hpp"
#include "mmsf/losses/losses.hpp"

namespace mmsf::losses {

using ad::Tensor;
using ad::Var;

namespace {

// Edge weight for one axis: exp(-beta * mean_ch |g(p+i) - g(p-i)|) on pixels
// with both neighbors in bounds, 0 on the axis border. The zero border also
// masks out the replicate-padded second differences.
Tensor guide_weights(const Tensor& guide, double beta, int dy, int dx) {
  const int c = guide.channels(), h = guide.height(), w = guide.width();
  Tensor out({1, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int yp = y + dy, xp = x + dx, ym = y - dy, xm = x - dx;
      if (yp < 0 || yp >= h || xp < 0 || xp >= w || ym < 0 || ym >= h ||
          xm < 0 || xm >= w) {
        continue;
      }
      double contrast = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        contrast += std::abs(guide.at(ch, yp, xp) - guide.at(ch, ym, xm));
      }
      out.at(0, y, x) = std::exp(-beta * contrast / c);
    }
  }
  return out;
}

Tensor tile_channels(const Tensor& plane, int c) {
  if (c == 1) return plane;
  const long n = plane.numel();
  Tensor out({c, plane.height(), plane.width()});
  for (int ch = 0; ch < c; ++ch) {
    for (long i = 0; i < n; ++i) out[ch * n + i] = plane[i];
  }
  return out;
}

}  // namespace

Var edge_aware_smoothness_2nd(const Var& field, const Tensor& guide,
                              double beta, const Var& normalizer) {
  const Tensor& f = field->value;
  if (f.rank() != 3 || guide.rank() != 3 || guide.height() != f.height() ||
      guide.width() != f.width()) {
    throw std::invalid_argument("edge_aware_smoothness_2nd: shape mismatch");
  }
  if (normalizer && !(normalizer->value.channels() == 1 &&
                      normalizer->value.height() == f.height() &&
                      normalizer->value.width() == f.width())) {
    throw std::invalid_argument(
        "edge_aware_smoothness_2nd: normalizer must be {1,h,w}");
  }
  const int c = f.channels();
  Var norm_tiled;
  if (normalizer) {
    norm_tiled = normalizer;
    if (c > 1) {
      norm_tiled = ad::concat_channels(std::vector<Var>(c, normalizer));
    }
  }

  Var acc;
  const int axes[2][2] = {{0, 1}, {1, 0}};  // (dy, dx)
  for (const auto& ax : axes) {
    Var dd = ad::add(ad::sub(ad::shift2d(field, ax[0], ax[1]),
                             ad::mul(field, 2.0)),
                     ad::shift2d(field, -ax[0], -ax[1]));
    Var a = ad::abs(dd);
    if (norm_tiled) a = ad::div(a, norm_tiled);
    Var term = ad::sum(
        ad::mul_const(a, tile_channels(guide_weights(guide, beta, ax[0], ax[1]), c)));
    acc = acc ? ad::add(acc, term) : term;
  }
  return ad::mul(acc, 1.0 / (static_cast<double>(f.height()) * f.width()));
}

}  // namespace mmsf::losses
