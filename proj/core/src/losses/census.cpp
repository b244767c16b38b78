// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
//
// Fused occlusion-aware census kernel. The 7x7 double loop is the hot spot of
// the loss stack, so forward and backward are hand-written over a
// precomputed luminance plane instead of composing ~100 graph nodes per
// pixel.
#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "mmsf/losses/losses.hpp"

namespace mmsf::losses {

using ad::Node;
using ad::Tensor;
using ad::Var;

double ternary_value(const Tensor& luma, int px, int py, int ox, int oy,
                     double sigma_t) {
  const int h = luma.height(), w = luma.width();
  const int qx = std::clamp(px + ox, 0, w - 1);
  const int qy = std::clamp(py + oy, 0, h - 1);
  const double d = luma.at(0, qy, qx) - luma.at(0, py, px);
  return d / std::sqrt(d * d + sigma_t * sigma_t);
}

double geman_mcclure(double t1, double t2, double sigma_g) {
  const double d = t1 - t2;
  return d * d / (d * d + sigma_g);
}

namespace {

constexpr int kWindow = 3;  // census offsets span [-3,3]^2

Tensor luminance255(const Tensor& img) {
  const int c = img.channels(), h = img.height(), w = img.width();
  Tensor out({1, h, w});
  const double scale = 255.0 / c;
  for (int ch = 0; ch < c; ++ch) {
    const double* src = img.data() + static_cast<long>(ch) * h * w;
    for (long i = 0; i < static_cast<long>(h) * w; ++i) out[i] += scale * src[i];
  }
  return out;
}

// d T / d delta for T(delta) = delta / sqrt(delta^2 + s^2).
inline double ternary_slope(double delta, double s2) {
  const double q = delta * delta + s2;
  return s2 / (q * std::sqrt(q));
}

// d f_G / d delta for f_G(delta) = delta^2 / (delta^2 + sigma_g).
inline double geman_slope(double delta, double sigma_g) {
  const double q = delta * delta + sigma_g;
  return 2.0 * delta * sigma_g / (q * q);
}

}  // namespace

Var occlusion_aware_census(const Var& img_a, const Var& img_b,
                           const Tensor& occ, const LossWeights& w) {
  const Tensor& av = img_a->value;
  if (!av.same_shape(img_b->value) || av.rank() != 3 || occ.rank() != 3 ||
      occ.channels() != 1 || occ.height() != av.height() ||
      occ.width() != av.width()) {
    throw std::invalid_argument("occlusion_aware_census: shape mismatch");
  }
  const int h = av.height(), wd = av.width();
  const double st2 = w.sigma_t * w.sigma_t;
  const double sg = w.sigma_g;
  const double eps = w.census_eps;

  auto la = std::make_shared<Tensor>(luminance255(av));
  auto lb = std::make_shared<Tensor>(luminance255(img_b->value));

  double occ_sum = 0.0;
  for (long i = 0; i < occ.numel(); ++i) occ_sum += occ[i];

  auto occ_at = [&occ, h, wd](int y, int x) {
    return (y < 0 || y >= h || x < 0 || x >= wd) ? 0.0 : occ.at(0, y, x);
  };
  auto lum_at = [h, wd](const Tensor& l, int y, int x) {
    return l.at(0, std::clamp(y, 0, h - 1), std::clamp(x, 0, wd - 1));
  };

  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < wd; ++x) {
      if (occ.at(0, y, x) == 0.0) continue;
      const double ca = la->at(0, y, x), cb = lb->at(0, y, x);
      double num = 0.0, den = 0.0;
      for (int dy = -kWindow; dy <= kWindow; ++dy) {
        for (int dx = -kWindow; dx <= kWindow; ++dx) {
          const double o = occ_at(y + dy, x + dx);
          if (o == 0.0) continue;
          const double ua = lum_at(*la, y + dy, x + dx) - ca;
          const double ub = lum_at(*lb, y + dy, x + dx) - cb;
          const double delta = ua / std::sqrt(ua * ua + st2) -
                               ub / std::sqrt(ub * ub + st2);
          num += o * delta * delta / (delta * delta + sg);
          den += o;
        }
      }
      total += num / (den + eps);
    }
  }
  const double loss = total / (occ_sum + eps);

  Tensor occ_copy = occ;
  return make_node(
      Tensor::scalar(loss), {img_a, img_b},
      [la, lb, occ_copy = std::move(occ_copy), occ_sum, st2, sg, eps, h,
       wd](Node& self) {
        Node& an = *self.parents[0];
        Node& bn = *self.parents[1];
        if (!an.requires_grad && !bn.requires_grad) return;
        const double g = self.grad()[0] / (occ_sum + eps);

        auto occ_at = [&occ_copy, h, wd](int y, int x) {
          return (y < 0 || y >= h || x < 0 || x >= wd) ? 0.0
                                                       : occ_copy.at(0, y, x);
        };
        auto cy = [h](int y) { return std::clamp(y, 0, h - 1); };
        auto cx = [wd](int x) { return std::clamp(x, 0, wd - 1); };

        // Gradient w.r.t. the luminance planes, scattered to channels below.
        Tensor dla({1, h, wd}), dlb({1, h, wd});
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < wd; ++x) {
            if (occ_copy.at(0, y, x) == 0.0) continue;
            const double ca = la->at(0, y, x), cb = lb->at(0, y, x);
            double den = 0.0;
            for (int dy = -kWindow; dy <= kWindow; ++dy) {
              for (int dx = -kWindow; dx <= kWindow; ++dx) {
                den += occ_at(y + dy, x + dx);
              }
            }
            const double inv_den = g / (den + eps);
            for (int dy = -kWindow; dy <= kWindow; ++dy) {
              for (int dx = -kWindow; dx <= kWindow; ++dx) {
                const double o = occ_at(y + dy, x + dx);
                if (o == 0.0) continue;
                const int qy = cy(y + dy), qx = cx(x + dx);
                const double ua = la->at(0, qy, qx) - ca;
                const double ub = lb->at(0, qy, qx) - cb;
                const double ta = ua / std::sqrt(ua * ua + st2);
                const double tb = ub / std::sqrt(ub * ub + st2);
                const double common = inv_den * o * geman_slope(ta - tb, sg);
                const double da = common * ternary_slope(ua, st2);
                const double db = -common * ternary_slope(ub, st2);
                dla.at(0, qy, qx) += da;
                dla.at(0, y, x) -= da;
                dlb.at(0, qy, qx) += db;
                dlb.at(0, y, x) -= db;
              }
            }
          }
        }

        auto scatter = [h, wd](Node& n, const Tensor& dl) {
          if (!n.requires_grad) return;
          Tensor& pg = n.ensure_grad();
          const int c = n.value.channels();
          const double scale = 255.0 / c;
          for (int ch = 0; ch < c; ++ch) {
            double* dst = pg.data() + static_cast<long>(ch) * h * wd;
            for (long i = 0; i < static_cast<long>(h) * wd; ++i) {
              dst[i] += scale * dl[i];
            }
          }
        };
        scatter(an, dla);
        scatter(bn, dlb);
      });
}

}  // namespace mmsf::losses
