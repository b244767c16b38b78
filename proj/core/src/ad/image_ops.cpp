// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include "mmsf/ad/image_ops.hpp"

#include <algorithm>
#include <string>
#include <cmath>
#include <stdexcept>

namespace mmsf::ad {
namespace {

void require_map(const Tensor& t, const char* who) {
  if (t.rank() != 3) throw std::invalid_argument(std::string(who) + ": rank-3 map expected");
}

void require_flow(const Tensor& f, const Tensor& ref, const char* who) {
  if (f.rank() != 3 || f.channels() != 2 || f.height() != ref.height() ||
      f.width() != ref.width()) {
    throw std::invalid_argument(std::string(who) + ": flow must be {2,h,w} matching the map");
  }
}

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace

Var bilinear_resize(const Var& x, int out_h, int out_w) {
  require_map(x->value, "bilinear_resize");
  const int c = x->value.channels(), h = x->value.height(), w = x->value.width();
  if (out_h == h && out_w == w) return x;

  const double sy = static_cast<double>(h) / out_h;
  const double sx = static_cast<double>(w) / out_w;
  Tensor out({c, out_h, out_w});
  for (int oy = 0; oy < out_h; ++oy) {
    double py = (oy + 0.5) * sy - 0.5;
    py = std::min(std::max(py, 0.0), static_cast<double>(h - 1));
    const int y0 = std::min(static_cast<int>(py), h - 2 < 0 ? 0 : h - 2);
    const double fy = py - y0;
    for (int ox = 0; ox < out_w; ++ox) {
      double px = (ox + 0.5) * sx - 0.5;
      px = std::min(std::max(px, 0.0), static_cast<double>(w - 1));
      const int x0 = std::min(static_cast<int>(px), w - 2 < 0 ? 0 : w - 2);
      const double fx = px - x0;
      const int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
      for (int ch = 0; ch < c; ++ch) {
        out.at(ch, oy, ox) =
            (1 - fy) * ((1 - fx) * x->value.at(ch, y0, x0) + fx * x->value.at(ch, y0, x1)) +
            fy * ((1 - fx) * x->value.at(ch, y1, x0) + fx * x->value.at(ch, y1, x1));
      }
    }
  }
  return make_node(std::move(out), {x}, [c, h, w, out_h, out_w, sy, sx](Node& self) {
    Tensor& pg = self.parents[0]->ensure_grad();
    const Tensor& g = self.grad();
    for (int oy = 0; oy < out_h; ++oy) {
      double py = (oy + 0.5) * sy - 0.5;
      py = std::min(std::max(py, 0.0), static_cast<double>(h - 1));
      const int y0 = std::min(static_cast<int>(py), h - 2 < 0 ? 0 : h - 2);
      const double fy = py - y0;
      for (int ox = 0; ox < out_w; ++ox) {
        double px = (ox + 0.5) * sx - 0.5;
        px = std::min(std::max(px, 0.0), static_cast<double>(w - 1));
        const int x0 = std::min(static_cast<int>(px), w - 2 < 0 ? 0 : w - 2);
        const double fx = px - x0;
        const int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
        for (int ch = 0; ch < c; ++ch) {
          const double gv = g.at(ch, oy, ox);
          pg.at(ch, y0, x0) += (1 - fy) * (1 - fx) * gv;
          pg.at(ch, y0, x1) += (1 - fy) * fx * gv;
          pg.at(ch, y1, x0) += fy * (1 - fx) * gv;
          pg.at(ch, y1, x1) += fy * fx * gv;
        }
      }
    }
  });
}

Sampled grid_sample(const Var& img, const Var& flow) {
  require_map(img->value, "grid_sample");
  require_flow(flow->value, img->value, "grid_sample");
  const int c = img->value.channels(), h = img->value.height(), w = img->value.width();

  Tensor out({c, h, w});
  Tensor mask({1, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double px = x + flow->value.at(0, y, x);
      const double py = y + flow->value.at(1, y, x);
      mask.at(0, y, x) =
          (px >= 0.0 && px <= w - 1 && py >= 0.0 && py <= h - 1) ? 1.0 : 0.0;
      const int x0 = static_cast<int>(std::floor(px));
      const int y0 = static_cast<int>(std::floor(py));
      const double fx = px - x0, fy = py - y0;
      const double wgt[4] = {(1 - fy) * (1 - fx), (1 - fy) * fx,
                             fy * (1 - fx), fy * fx};
      const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
      const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
      for (int ch = 0; ch < c; ++ch) {
        double v = 0.0;
        for (int t = 0; t < 4; ++t) {
          if (xs[t] >= 0 && xs[t] < w && ys[t] >= 0 && ys[t] < h) {
            v += wgt[t] * img->value.at(ch, ys[t], xs[t]);
          }
        }
        out.at(ch, y, x) = v;
      }
    }
  }

  Var node = make_node(std::move(out), {img, flow}, [c, h, w](Node& self) {
    Node& in = *self.parents[0];
    Node& fl = *self.parents[1];
    const Tensor& g = self.grad();
    Tensor* dimg = in.requires_grad ? &in.ensure_grad() : nullptr;
    Tensor* dflow = fl.requires_grad ? &fl.ensure_grad() : nullptr;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double px = x + fl.value.at(0, y, x);
        const double py = y + fl.value.at(1, y, x);
        const int x0 = static_cast<int>(std::floor(px));
        const int y0 = static_cast<int>(std::floor(py));
        const double fx = px - x0, fy = py - y0;
        double du = 0.0, dv = 0.0;
        for (int ch = 0; ch < c; ++ch) {
          const double gv = g.at(ch, y, x);
          if (gv == 0.0) continue;
          double tap[4] = {0, 0, 0, 0};
          const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
          const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
          const double wgt[4] = {(1 - fy) * (1 - fx), (1 - fy) * fx,
                                 fy * (1 - fx), fy * fx};
          for (int t = 0; t < 4; ++t) {
            const bool inb = xs[t] >= 0 && xs[t] < w && ys[t] >= 0 && ys[t] < h;
            if (inb) {
              tap[t] = in.value.at(ch, ys[t], xs[t]);
              if (dimg) dimg->at(ch, ys[t], xs[t]) += wgt[t] * gv;
            }
          }
          du += gv * ((1 - fy) * (tap[1] - tap[0]) + fy * (tap[3] - tap[2]));
          dv += gv * ((1 - fx) * (tap[2] - tap[0]) + fx * (tap[3] - tap[1]));
        }
        if (dflow) {
          dflow->at(0, y, x) += du;
          dflow->at(1, y, x) += dv;
        }
      }
    }
  });
  return Sampled{std::move(node), std::move(mask)};
}

namespace {

struct SplatAux {
  Tensor den;  // accumulated kernel-weighted source weight per target
  Tensor wq;   // per-source weight (1 or stabilized exp)
};

}  // namespace

Var softmax_splat(const Var& src, const Var& flow, const Var& importance,
                  SplatMode mode, double alpha, double eps) {
  require_map(src->value, "softmax_splat");
  require_flow(flow->value, src->value, "softmax_splat");
  const int c = src->value.channels(), h = src->value.height(), w = src->value.width();
  const bool soft = mode == SplatMode::kSoftmax;
  if (soft && (!importance || importance->value.height() != h ||
               importance->value.width() != w || importance->value.channels() != 1)) {
    throw std::invalid_argument("softmax_splat: importance must be {1,h,w}");
  }

  auto aux = std::make_shared<SplatAux>();
  aux->den = Tensor({1, h, w});
  aux->wq = Tensor({1, h, w}, 1.0);
  if (soft) {
    // Global stabilizer keeps exp bounded; the normalized output is exactly
    // invariant to it, so constant importance shifts are bitwise no-ops.
    double m = -1e300;
    for (long i = 0; i < importance->value.numel(); ++i) {
      m = std::max(m, alpha * importance->value[i]);
    }
    for (long i = 0; i < aux->wq.numel(); ++i) {
      aux->wq[i] = std::exp(alpha * importance->value[i] - m);
    }
  }

  Tensor num({c, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double px = x + flow->value.at(0, y, x);
      const double py = y + flow->value.at(1, y, x);
      const int x0 = static_cast<int>(std::floor(px));
      const int y0 = static_cast<int>(std::floor(py));
      const double fx = px - x0, fy = py - y0;
      const double wq = aux->wq.at(0, y, x);
      const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
      const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
      const double wgt[4] = {(1 - fy) * (1 - fx), (1 - fy) * fx,
                             fy * (1 - fx), fy * fx};
      for (int t = 0; t < 4; ++t) {
        if (xs[t] < 0 || xs[t] >= w || ys[t] < 0 || ys[t] >= h) continue;
        aux->den.at(0, ys[t], xs[t]) += wgt[t] * wq;
        for (int ch = 0; ch < c; ++ch) {
          num.at(ch, ys[t], xs[t]) += wgt[t] * wq * src->value.at(ch, y, x);
        }
      }
    }
  }

  Tensor out({c, h, w});
  if (soft) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double d = aux->den.at(0, y, x) + eps;
        for (int ch = 0; ch < c; ++ch) out.at(ch, y, x) = num.at(ch, y, x) / d;
      }
    }
  } else {
    out = std::move(num);
  }

  std::vector<Var> parents{src, flow};
  if (soft) parents.push_back(importance);
  return make_node(
      std::move(out), std::move(parents),
      [c, h, w, soft, alpha, eps, aux](Node& self) {
        Node& sn = *self.parents[0];
        Node& fn = *self.parents[1];
        Node* in = soft ? self.parents[2].get() : nullptr;
        const Tensor& g = self.grad();
        Tensor* dsrc = sn.requires_grad ? &sn.ensure_grad() : nullptr;
        Tensor* dflow = fn.requires_grad ? &fn.ensure_grad() : nullptr;
        Tensor* dimp = (in && in->requires_grad) ? &in->ensure_grad() : nullptr;

        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            const double px = x + fn.value.at(0, y, x);
            const double py = y + fn.value.at(1, y, x);
            const int x0 = static_cast<int>(std::floor(px));
            const int y0 = static_cast<int>(std::floor(py));
            const double fx = px - x0, fy = py - y0;
            const double wq = aux->wq.at(0, y, x);
            const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
            const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
            const double wgt[4] = {(1 - fy) * (1 - fx), (1 - fy) * fx,
                                   fy * (1 - fx), fy * fx};
            // d(kernel)/d(px), d(kernel)/d(py) per tap.
            const double dkx[4] = {-(1 - fy), (1 - fy), -fy, fy};
            const double dky[4] = {-(1 - fx), -fx, (1 - fx), fx};
            double du = 0.0, dv = 0.0, dw = 0.0;
            for (int t = 0; t < 4; ++t) {
              if (xs[t] < 0 || xs[t] >= w || ys[t] < 0 || ys[t] >= h) continue;
              const double dn = soft ? aux->den.at(0, ys[t], xs[t]) + eps : 1.0;
              for (int ch = 0; ch < c; ++ch) {
                const double gv = g.at(ch, ys[t], xs[t]);
                if (gv == 0.0) continue;
                const double sv = sn.value.at(ch, y, x);
                const double ov = soft ? self.value.at(ch, ys[t], xs[t]) : 0.0;
                if (dsrc) dsrc->at(ch, y, x) += gv * wgt[t] * wq / dn;
                const double resid = soft ? (sv - ov) : sv;
                du += gv * dkx[t] * wq * resid / dn;
                dv += gv * dky[t] * wq * resid / dn;
                if (dimp) dw += gv * wgt[t] * resid / dn;
              }
            }
            if (dflow) {
              dflow->at(0, y, x) += du;
              dflow->at(1, y, x) += dv;
            }
            if (dimp) dimp->at(0, y, x) += alpha * wq * dw;
          }
        }
      });
}

Tensor splat_mass(const Tensor& flow) {
  if (flow.rank() != 3 || flow.channels() != 2) {
    throw std::invalid_argument("splat_mass: flow must be {2,h,w}");
  }
  const int h = flow.height(), w = flow.width();
  Tensor mass({1, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double px = x + flow.at(0, y, x);
      const double py = y + flow.at(1, y, x);
      const int x0 = static_cast<int>(std::floor(px));
      const int y0 = static_cast<int>(std::floor(py));
      const double fx = px - x0, fy = py - y0;
      const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
      const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
      const double wgt[4] = {(1 - fy) * (1 - fx), (1 - fy) * fx,
                             fy * (1 - fx), fy * fx};
      for (int t = 0; t < 4; ++t) {
        if (xs[t] >= 0 && xs[t] < w && ys[t] >= 0 && ys[t] < h) {
          mass.at(0, ys[t], xs[t]) += wgt[t];
        }
      }
    }
  }
  return mass;
}

Var correlation(const Var& f1, const Var& f2, int radius) {
  require_map(f1->value, "correlation");
  if (!f1->value.same_shape(f2->value)) {
    throw std::invalid_argument("correlation: feature shape mismatch");
  }
  const int c = f1->value.channels(), h = f1->value.height(), w = f1->value.width();
  const int side = 2 * radius + 1;
  Tensor out({side * side, h, w});
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const int o = (dy + radius) * side + (dx + radius);
      for (int y = 0; y < h; ++y) {
        const int ty = y + dy;
        if (ty < 0 || ty >= h) continue;
        for (int x = 0; x < w; ++x) {
          const int tx = x + dx;
          if (tx < 0 || tx >= w) continue;
          double s = 0.0;
          for (int ch = 0; ch < c; ++ch) {
            s += f1->value.at(ch, y, x) * f2->value.at(ch, ty, tx);
          }
          out.at(o, y, x) = s / c;
        }
      }
    }
  }
  return make_node(std::move(out), {f1, f2}, [c, h, w, radius, side](Node& self) {
    Node& a = *self.parents[0];
    Node& b = *self.parents[1];
    const Tensor& g = self.grad();
    const double inv_c = 1.0 / c;
    if (a.requires_grad) {
      Tensor& da = a.ensure_grad();
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          const int o = (dy + radius) * side + (dx + radius);
          for (int y = 0; y < h; ++y) {
            const int ty = y + dy;
            if (ty < 0 || ty >= h) continue;
            for (int x = 0; x < w; ++x) {
              const int tx = x + dx;
              if (tx < 0 || tx >= w) continue;
              const double gv = g.at(o, y, x) * inv_c;
              if (gv == 0.0) continue;
              for (int ch = 0; ch < c; ++ch) {
                da.at(ch, y, x) += gv * b.value.at(ch, ty, tx);
              }
            }
          }
        }
      }
    }
    if (b.requires_grad) {
      Tensor& db = b.ensure_grad();
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          const int o = (dy + radius) * side + (dx + radius);
          for (int y = 0; y < h; ++y) {
            const int ty = y + dy;
            if (ty < 0 || ty >= h) continue;
            for (int x = 0; x < w; ++x) {
              const int tx = x + dx;
              if (tx < 0 || tx >= w) continue;
              const double gv = g.at(o, y, x) * inv_c;
              if (gv == 0.0) continue;
              for (int ch = 0; ch < c; ++ch) {
                db.at(ch, ty, tx) += gv * a.value.at(ch, y, x);
              }
            }
          }
        }
      }
    }
  });
}

Var channel_l2_normalize(const Var& x, double eps) {
  require_map(x->value, "channel_l2_normalize");
  const int c = x->value.channels(), h = x->value.height(), w = x->value.width();
  Tensor out({c, h, w});
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      double ss = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        const double v = x->value.at(ch, y, xx);
        ss += v * v;
      }
      const double inv = 1.0 / std::sqrt(ss + eps);
      for (int ch = 0; ch < c; ++ch) out.at(ch, y, xx) = x->value.at(ch, y, xx) * inv;
    }
  }
  return make_node(std::move(out), {x}, [c, h, w, eps](Node& self) {
    Tensor& pg = self.parents[0]->ensure_grad();
    const Tensor& xv = self.parents[0]->value;
    const Tensor& g = self.grad();
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        double ss = 0.0, gx = 0.0;
        for (int ch = 0; ch < c; ++ch) {
          const double v = xv.at(ch, y, xx);
          ss += v * v;
          gx += g.at(ch, y, xx) * v;
        }
        const double inv = 1.0 / std::sqrt(ss + eps);
        const double inv3 = inv * inv * inv;
        for (int ch = 0; ch < c; ++ch) {
          pg.at(ch, y, xx) += g.at(ch, y, xx) * inv - xv.at(ch, y, xx) * inv3 * gx;
        }
      }
    }
  });
}

Var shift2d(const Var& x, int dy, int dx) {
  require_map(x->value, "shift2d");
  const int c = x->value.channels(), h = x->value.height(), w = x->value.width();
  Tensor out({c, h, w});
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      const int sy = clampi(y + dy, 0, h - 1);
      for (int xx = 0; xx < w; ++xx) {
        out.at(ch, y, xx) = x->value.at(ch, sy, clampi(xx + dx, 0, w - 1));
      }
    }
  }
  return make_node(std::move(out), {x}, [c, h, w, dy, dx](Node& self) {
    Tensor& pg = self.parents[0]->ensure_grad();
    const Tensor& g = self.grad();
    for (int ch = 0; ch < c; ++ch) {
      for (int y = 0; y < h; ++y) {
        const int sy = clampi(y + dy, 0, h - 1);
        for (int xx = 0; xx < w; ++xx) {
          pg.at(ch, sy, clampi(xx + dx, 0, w - 1)) += g.at(ch, y, xx);
        }
      }
    }
  });
}

}  // namespace mmsf::ad
