// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include "mmsf/ad/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace mmsf::ad {
namespace {

bool broadcast_ok(const Tensor& a, const Tensor& b) {
  return a.same_shape(b) || a.numel() == 1 || b.numel() == 1;
}

// Accumulates g (shaped like the op output) into the grad of parent p,
// which may be a 1-element tensor broadcast across the output. No-op for
// constant parents so mixed const/leaf graphs allocate no dead buffers.
void accum_bcast(Node& p, const Tensor& g) {
  if (!p.requires_grad) return;
  Tensor& pg = p.ensure_grad();
  const long n = g.numel();
  if (pg.numel() == n) {
    for (long i = 0; i < n; ++i) pg[i] += g[i];
  } else {
    double s = 0.0;
    for (long i = 0; i < n; ++i) s += g[i];
    pg[0] += s;
  }
}

double bval(const Tensor& t, long i) { return t.numel() == 1 ? t[0] : t[i]; }

// Ties (both single-element) keep the higher-rank shape so that a {1,1,1}
// map combined with a scalar stays a map.
std::vector<int> out_shape(const Tensor& a, const Tensor& b) {
  if (a.numel() == 1 && b.numel() == 1) {
    return a.rank() >= b.rank() ? a.shape() : b.shape();
  }
  return a.numel() == 1 ? b.shape() : a.shape();
}

}  // namespace

Var add(const Var& a, const Var& b) {
  if (!broadcast_ok(a->value, b->value)) {
    throw std::invalid_argument("add: shape mismatch");
  }
  Tensor out(out_shape(a->value, b->value));
  const long n = out.numel();
  for (long i = 0; i < n; ++i) out[i] = bval(a->value, i) + bval(b->value, i);
  return make_node(std::move(out), {a, b}, [](Node& self) {
    accum_bcast(*self.parents[0], self.grad());
    accum_bcast(*self.parents[1], self.grad());
  });
}

Var sub(const Var& a, const Var& b) {
  if (!broadcast_ok(a->value, b->value)) {
    throw std::invalid_argument("sub: shape mismatch");
  }
  Tensor out(out_shape(a->value, b->value));
  const long n = out.numel();
  for (long i = 0; i < n; ++i) out[i] = bval(a->value, i) - bval(b->value, i);
  return make_node(std::move(out), {a, b}, [](Node& self) {
    accum_bcast(*self.parents[0], self.grad());
    Node& p = *self.parents[1];
    if (!p.requires_grad) return;
    Tensor& pg = p.ensure_grad();
    const Tensor& g = self.grad();
    if (pg.numel() == g.numel()) {
      for (long i = 0; i < g.numel(); ++i) pg[i] -= g[i];
    } else {
      double s = 0.0;
      for (long i = 0; i < g.numel(); ++i) s += g[i];
      pg[0] -= s;
    }
  });
}

Var mul(const Var& a, const Var& b) {
  if (!broadcast_ok(a->value, b->value)) {
    throw std::invalid_argument("mul: shape mismatch");
  }
  Tensor out(out_shape(a->value, b->value));
  const long n = out.numel();
  for (long i = 0; i < n; ++i) out[i] = bval(a->value, i) * bval(b->value, i);
  return make_node(std::move(out), {a, b}, [](Node& self) {
    const Tensor& g = self.grad();
    const Tensor& av = self.parents[0]->value;
    const Tensor& bv = self.parents[1]->value;
    if (self.parents[0]->requires_grad) {
      Tensor& pg = self.parents[0]->ensure_grad();
      if (pg.numel() == g.numel()) {
        for (long i = 0; i < g.numel(); ++i) pg[i] += g[i] * bval(bv, i);
      } else {
        double s = 0.0;
        for (long i = 0; i < g.numel(); ++i) s += g[i] * bval(bv, i);
        pg[0] += s;
      }
    }
    if (self.parents[1]->requires_grad) {
      Tensor& pg = self.parents[1]->ensure_grad();
      if (pg.numel() == g.numel()) {
        for (long i = 0; i < g.numel(); ++i) pg[i] += g[i] * bval(av, i);
      } else {
        double s = 0.0;
        for (long i = 0; i < g.numel(); ++i) s += g[i] * bval(av, i);
        pg[0] += s;
      }
    }
  });
}

Var div(const Var& a, const Var& b) {
  if (!broadcast_ok(a->value, b->value)) {
    throw std::invalid_argument("div: shape mismatch");
  }
  Tensor out(out_shape(a->value, b->value));
  const long n = out.numel();
  for (long i = 0; i < n; ++i) out[i] = bval(a->value, i) / bval(b->value, i);
  return make_node(std::move(out), {a, b}, [](Node& self) {
    const Tensor& g = self.grad();
    const Tensor& av = self.parents[0]->value;
    const Tensor& bv = self.parents[1]->value;
    if (self.parents[0]->requires_grad) {
      Tensor& pg = self.parents[0]->ensure_grad();
      if (pg.numel() == g.numel()) {
        for (long i = 0; i < g.numel(); ++i) pg[i] += g[i] / bval(bv, i);
      } else {
        double s = 0.0;
        for (long i = 0; i < g.numel(); ++i) s += g[i] / bval(bv, i);
        pg[0] += s;
      }
    }
    if (self.parents[1]->requires_grad) {
      Tensor& pg = self.parents[1]->ensure_grad();
      if (pg.numel() == g.numel()) {
        for (long i = 0; i < g.numel(); ++i) {
          const double bi = bval(bv, i);
          pg[i] -= g[i] * bval(av, i) / (bi * bi);
        }
      } else {
        double s = 0.0;
        for (long i = 0; i < g.numel(); ++i) {
          const double bi = bval(bv, i);
          s -= g[i] * bval(av, i) / (bi * bi);
        }
        pg[0] += s;
      }
    }
  });
}

Var add(const Var& a, double b) { return add(a, scalar(b)); }
Var sub(double a, const Var& b) { return sub(scalar(a), b); }
Var mul(const Var& a, double b) { return mul(a, scalar(b)); }

namespace {

template <typename F, typename DF>
Var unary(const Var& x, F f, DF df) {
  Tensor out(x->value.shape());
  const long n = out.numel();
  for (long i = 0; i < n; ++i) out[i] = f(x->value[i]);
  return make_node(std::move(out), {x}, [df](Node& self) {
    Tensor& pg = self.parents[0]->ensure_grad();
    const Tensor& xv = self.parents[0]->value;
    const Tensor& yv = self.value;
    const Tensor& g = self.grad();
    for (long i = 0; i < g.numel(); ++i) pg[i] += g[i] * df(xv[i], yv[i]);
  });
}

}  // namespace

Var neg(const Var& x) {
  return unary(x, [](double v) { return -v; },
               [](double, double) { return -1.0; });
}
Var exp(const Var& x) {
  return unary(x, [](double v) { return std::exp(v); },
               [](double, double y) { return y; });
}
Var sqrt(const Var& x) {
  return unary(x, [](double v) { return std::sqrt(v); },
               [](double, double y) { return 0.5 / y; });
}
Var square(const Var& x) {
  return unary(x, [](double v) { return v * v; },
               [](double v, double) { return 2.0 * v; });
}
Var abs(const Var& x) {
  // Subgradient 0 at the kink.
  return unary(x, [](double v) { return std::abs(v); },
               [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}
Var sigmoid(const Var& x) {
  return unary(x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
               [](double, double y) { return y * (1.0 - y); });
}
Var leaky_relu(const Var& x, double slope) {
  return unary(x, [slope](double v) { return v > 0 ? v : slope * v; },
               [slope](double v, double) { return v > 0 ? 1.0 : slope; });
}
Var clamp_min(const Var& x, double lo) {
  return unary(x, [lo](double v) { return v < lo ? lo : v; },
               [lo](double v, double) { return v < lo ? 0.0 : 1.0; });
}

Var sum(const Var& x) {
  double s = 0.0;
  for (long i = 0; i < x->value.numel(); ++i) s += x->value[i];
  return make_node(Tensor::scalar(s), {x}, [](Node& self) {
    Tensor& pg = self.parents[0]->ensure_grad();
    const double g = self.grad()[0];
    for (long i = 0; i < pg.numel(); ++i) pg[i] += g;
  });
}

Var mean(const Var& x) {
  const long n = x->value.numel();
  double s = 0.0;
  for (long i = 0; i < n; ++i) s += x->value[i];
  return make_node(Tensor::scalar(s / static_cast<double>(n)), {x},
                   [n](Node& self) {
                     Tensor& pg = self.parents[0]->ensure_grad();
                     const double g = self.grad()[0] / static_cast<double>(n);
                     for (long i = 0; i < pg.numel(); ++i) pg[i] += g;
                   });
}

Var concat_channels(const std::vector<Var>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_channels: empty");
  const int h = xs[0]->value.height();
  const int w = xs[0]->value.width();
  int c = 0;
  for (const auto& x : xs) {
    if (x->value.rank() != 3 || x->value.height() != h || x->value.width() != w) {
      throw std::invalid_argument("concat_channels: incompatible shapes");
    }
    c += x->value.channels();
  }
  Tensor out({c, h, w});
  long off = 0;
  for (const auto& x : xs) {
    const long n = x->value.numel();
    for (long i = 0; i < n; ++i) out[off + i] = x->value[i];
    off += n;
  }
  return make_node(std::move(out), xs, [](Node& self) {
    const Tensor& g = self.grad();
    long off = 0;
    for (auto& p : self.parents) {
      const long n = p->value.numel();
      if (p->requires_grad) {
        Tensor& pg = p->ensure_grad();
        for (long i = 0; i < n; ++i) pg[i] += g[off + i];
      }
      off += n;
    }
  });
}

Var slice_channels(const Var& x, int first, int count) {
  const Tensor& v = x->value;
  if (v.rank() != 3 || first < 0 || first + count > v.channels()) {
    throw std::invalid_argument("slice_channels: bad range");
  }
  const long plane = static_cast<long>(v.height()) * v.width();
  Tensor out({count, v.height(), v.width()});
  for (long i = 0; i < count * plane; ++i) out[i] = v[first * plane + i];
  return make_node(std::move(out), {x}, [first, plane, count](Node& self) {
    Tensor& pg = self.parents[0]->ensure_grad();
    const Tensor& g = self.grad();
    for (long i = 0; i < count * plane; ++i) pg[first * plane + i] += g[i];
  });
}

Var mul_const(const Var& x, const Tensor& m) {
  if (!(x->value.same_shape(m) || m.numel() == 1)) {
    throw std::invalid_argument("mul_const: shape mismatch");
  }
  Tensor out(x->value.shape());
  const long n = out.numel();
  for (long i = 0; i < n; ++i) out[i] = x->value[i] * bval(m, i);
  return make_node(std::move(out), {x}, [m](Node& self) {
    Tensor& pg = self.parents[0]->ensure_grad();
    const Tensor& g = self.grad();
    for (long i = 0; i < g.numel(); ++i) pg[i] += g[i] * bval(m, i);
  });
}

}  // namespace mmsf::ad
