// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include "mmsf/ad/conv.hpp"

#include <cblas.h>

#include <stdexcept>
#include <vector>

extern "C" void openblas_set_num_threads(int);

namespace mmsf::ad {
namespace {

struct BlasInit {
  BlasInit() { openblas_set_num_threads(1); }  // deterministic, 1-core box
};
const BlasInit blas_init;

void im2col(const Tensor& x, int kh, int kw, int stride, int pad, int ho,
            int wo, std::vector<double>& col) {
  const int ci = x.channels(), h = x.height(), w = x.width();
  const long n = static_cast<long>(ho) * wo;
  col.assign(static_cast<size_t>(ci) * kh * kw * n, 0.0);
  double* cp = col.data();
  for (int c = 0; c < ci; ++c) {
    for (int iy = 0; iy < kh; ++iy) {
      for (int ix = 0; ix < kw; ++ix, cp += n) {
        for (int oy = 0; oy < ho; ++oy) {
          const int sy = oy * stride + iy - pad;
          if (sy < 0 || sy >= h) continue;
          const double* row = x.data() + (static_cast<long>(c) * h + sy) * w;
          double* dst = cp + static_cast<long>(oy) * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const int sx = ox * stride + ix - pad;
            if (sx >= 0 && sx < w) dst[ox] = row[sx];
          }
        }
      }
    }
  }
}

void col2im_accum(const std::vector<double>& col, int ci, int kh, int kw,
                  int stride, int pad, int ho, int wo, Tensor& dx) {
  const int h = dx.height(), w = dx.width();
  const long n = static_cast<long>(ho) * wo;
  const double* cp = col.data();
  for (int c = 0; c < ci; ++c) {
    for (int iy = 0; iy < kh; ++iy) {
      for (int ix = 0; ix < kw; ++ix, cp += n) {
        for (int oy = 0; oy < ho; ++oy) {
          const int sy = oy * stride + iy - pad;
          if (sy < 0 || sy >= h) continue;
          double* row = &dx.at(c, sy, 0);
          const double* src = cp + static_cast<long>(oy) * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const int sx = ox * stride + ix - pad;
            if (sx >= 0 && sx < w) row[sx] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  const Tensor& xv = x->value;
  const Tensor& wv = w->value;
  if (xv.rank() != 3 || wv.rank() != 4 || wv.shape()[1] != xv.channels()) {
    throw std::invalid_argument("conv2d: shape mismatch");
  }
  const int co = wv.shape()[0], ci = wv.shape()[1];
  const int kh = wv.shape()[2], kw = wv.shape()[3];
  const int ho = (xv.height() + 2 * pad - kh) / stride + 1;
  const int wo = (xv.width() + 2 * pad - kw) / stride + 1;
  const long n = static_cast<long>(ho) * wo;
  const long k = static_cast<long>(ci) * kh * kw;
  const bool has_bias = b && b->value.numel() == co;

  std::vector<double> col;
  im2col(xv, kh, kw, stride, pad, ho, wo, col);

  Tensor out({co, ho, wo});
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, co, n, k, 1.0,
              wv.data(), k, col.data(), n, 0.0, out.data(), n);
  if (has_bias) {
    for (int o = 0; o < co; ++o) {
      const double bo = b->value[o];
      double* op = out.data() + o * n;
      for (long i = 0; i < n; ++i) op[i] += bo;
    }
  }

  std::vector<Var> parents = has_bias ? std::vector<Var>{x, w, b}
                                      : std::vector<Var>{x, w};
  return make_node(
      std::move(out), std::move(parents),
      [stride, pad, co, ci, kh, kw, ho, wo, n, k, has_bias](Node& self) {
        Node& xn = *self.parents[0];
        Node& wn = *self.parents[1];
        const Tensor& g = self.grad();

        std::vector<double> col;
        im2col(xn.value, kh, kw, stride, pad, ho, wo, col);

        if (wn.requires_grad) {
          Tensor& dw = wn.ensure_grad();
          cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, co, k, n, 1.0,
                      g.data(), n, col.data(), n, 1.0, dw.data(), k);
        }
        if (xn.requires_grad) {
          std::vector<double> dcol(static_cast<size_t>(k) * n);
          cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, k, n, co, 1.0,
                      wn.value.data(), k, g.data(), n, 0.0, dcol.data(), n);
          col2im_accum(dcol, ci, kh, kw, stride, pad, ho, wo,
                       xn.ensure_grad());
        }
        if (has_bias && self.parents[2]->requires_grad) {
          Tensor& db = self.parents[2]->ensure_grad();
          for (int o = 0; o < co; ++o) {
            double s = 0.0;
            const double* gp = g.data() + o * n;
            for (long i = 0; i < n; ++i) s += gp[i];
            db[o] += s;
          }
        }
      });
}

}  // namespace mmsf::ad
