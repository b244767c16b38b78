// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include "mmsf/eval/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace mmsf::eval {
namespace {

void check_map(const Tensor& t, long channels, const char* what) {
  if (t.rank() != 3 || t.shape()[0] != channels) {
    throw std::invalid_argument(std::string(what) + ": wrong shape");
  }
}

void check_like(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
  }
}

double pixel_norm(const Tensor& t, long c0, long plane, long p) {
  double s = 0.0;
  for (long c = 0; c < c0; ++c) {
    const double v = t.data()[c * plane + p];
    s += v * v;
  }
  return std::sqrt(s);
}

struct Rate {
  double percent = 0.0;
  long n = 0;
  bool defined = false;
};

Rate masked_rate(const Tensor& map, const Tensor& valid) {
  long n = 0;
  long bad = 0;
  for (long p = 0; p < map.numel(); ++p) {
    if (valid.data()[p] == 0.0) continue;
    ++n;
    bad += map.data()[p] != 0.0;
  }
  Rate r;
  r.n = n;
  r.defined = n > 0;
  r.percent = n > 0 ? 100.0 * static_cast<double>(bad) / n : 0.0;
  return r;
}

}  // namespace

Tensor outlier_map(const Tensor& est, const Tensor& gt, const Tensor& valid) {
  if (est.rank() != 3) throw std::invalid_argument("outlier_map: rank-3 maps expected");
  check_like(est, gt, "outlier_map");
  check_map(valid, 1, "outlier_map: valid");
  const long c = est.shape()[0];
  const long plane = est.shape()[1] * est.shape()[2];
  if (valid.numel() != plane) throw std::invalid_argument("outlier_map: mask size mismatch");

  Tensor out({1, est.shape()[1], est.shape()[2]});
  for (long p = 0; p < plane; ++p) {
    if (valid.data()[p] == 0.0) continue;
    double err2 = 0.0;
    for (long ch = 0; ch < c; ++ch) {
      const double d = est.data()[ch * plane + p] - gt.data()[ch * plane + p];
      err2 += d * d;
    }
    const double err = std::sqrt(err2);
    const bool inlier = err <= 3.0 || err <= 0.05 * pixel_norm(gt, c, plane, p);
    out.data()[p] = inlier ? 0.0 : 1.0;
  }
  return out;
}

MetricReport scene_flow_metrics(const SceneFlowEval& est, const SceneFlowTruth& gt) {
  const Tensor o1 = outlier_map(est.d1, gt.d1, gt.d1_valid);
  const Tensor o2 = outlier_map(est.d2, gt.d2, gt.d2_valid);
  const Tensor of = outlier_map(est.flow, gt.flow, gt.flow_valid);
  check_like(o1, o2, "scene_flow_metrics");
  check_like(o1, of, "scene_flow_metrics");

  MetricReport rep;
  const Rate r1 = masked_rate(o1, gt.d1_valid);
  const Rate r2 = masked_rate(o2, gt.d2_valid);
  const Rate rf = masked_rate(of, gt.flow_valid);
  rep.d1_all = r1.percent;
  rep.d2_all = r2.percent;
  rep.fl_all = rf.percent;

  long n = 0;
  long bad = 0;
  for (long p = 0; p < o1.numel(); ++p) {
    if (gt.d1_valid.data()[p] == 0.0 || gt.d2_valid.data()[p] == 0.0 ||
        gt.flow_valid.data()[p] == 0.0) {
      continue;
    }
    ++n;
    bad += o1.data()[p] != 0.0 || o2.data()[p] != 0.0 || of.data()[p] != 0.0;
  }
  rep.n_valid = n;
  rep.sf_all = n > 0 ? 100.0 * static_cast<double>(bad) / n : 0.0;
  rep.defined = r1.defined && r2.defined && rf.defined && n > 0;

  if (rf.defined) rep.epe_flow = epe(est.flow, gt.flow, gt.flow_valid);
  if (est.sf.numel() > 0 && gt.sf.numel() > 0) {
    const Rate rs = masked_rate(gt.sf_valid, gt.sf_valid);
    if (rs.defined) rep.epe_sf = epe(est.sf, gt.sf, gt.sf_valid);
  }
  return rep;
}

double epe(const Tensor& est, const Tensor& gt, const Tensor& valid) {
  if (est.rank() != 3) throw std::invalid_argument("epe: rank-3 maps expected");
  check_like(est, gt, "epe");
  const long c = est.shape()[0];
  const long plane = est.shape()[1] * est.shape()[2];
  if (valid.numel() != plane) throw std::invalid_argument("epe: mask size mismatch");

  double sum = 0.0;
  long n = 0;
  for (long p = 0; p < plane; ++p) {
    if (valid.data()[p] == 0.0) continue;
    double err2 = 0.0;
    for (long ch = 0; ch < c; ++ch) {
      const double d = est.data()[ch * plane + p] - gt.data()[ch * plane + p];
      err2 += d * d;
    }
    sum += std::sqrt(err2);
    ++n;
  }
  if (n == 0) throw std::invalid_argument("epe: empty valid mask");
  return sum / n;
}

double temporal_consistency_aepe(const Tensor& sf_t, const Tensor& sf_tp1,
                                 const Tensor& gt_flow_t, const Tensor& valid) {
  check_map(sf_t, 3, "temporal_consistency_aepe: sf_t");
  check_like(sf_t, sf_tp1, "temporal_consistency_aepe");
  check_map(gt_flow_t, 2, "temporal_consistency_aepe: flow");
  const long h = sf_t.shape()[1];
  const long w = sf_t.shape()[2];
  const long plane = h * w;
  if (gt_flow_t.shape()[1] != h || gt_flow_t.shape()[2] != w ||
      valid.numel() != plane) {
    throw std::invalid_argument("temporal_consistency_aepe: size mismatch");
  }

  double sum = 0.0;
  long n = 0;
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      const long p = y * w + x;
      if (valid.data()[p] == 0.0) continue;
      const double sx = x + gt_flow_t.data()[p];
      const double sy = y + gt_flow_t.data()[plane + p];
      if (sx < 0.0 || sx > w - 1 || sy < 0.0 || sy > h - 1) continue;
      const long x0 = static_cast<long>(std::floor(sx));
      const long y0 = static_cast<long>(std::floor(sy));
      const double ax = sx - x0;
      const double ay = sy - y0;
      const long x1 = std::min(x0 + 1, w - 1);
      const long y1 = std::min(y0 + 1, h - 1);
      double err2 = 0.0;
      for (long c = 0; c < 3; ++c) {
        const double* ch = sf_tp1.data() + c * plane;
        const double sampled = (1.0 - ay) * ((1.0 - ax) * ch[y0 * w + x0] + ax * ch[y0 * w + x1]) +
                               ay * ((1.0 - ax) * ch[y1 * w + x0] + ax * ch[y1 * w + x1]);
        const double d = sf_t.data()[c * plane + p] - sampled;
        err2 += d * d;
      }
      sum += std::sqrt(err2);
      ++n;
    }
  }
  if (n == 0) {
    throw std::invalid_argument("temporal_consistency_aepe: no valid correspondences");
  }
  return sum / n;
}

}  // namespace mmsf::eval
