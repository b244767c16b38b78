// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include "mmsf/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace mmsf::data {
namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double lattice(std::uint64_t key, int sid, int ch, int oct, long ix, long iy) {
  std::uint64_t h = key;
  h = mix64(h ^ static_cast<std::uint64_t>(sid * 16 + ch * 4 + oct));
  h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(ix)));
  h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(iy)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

// Band-limited value noise in surface-local meters. The continuous function
// is shared by both views, so stereo appearance is consistent by
// construction.
double octave_noise(std::uint64_t key, int sid, int ch, double u, double v,
                    double cell) {
  double value = 0.0;
  double norm = 0.0;
  double amp = 1.0;
  for (int oct = 0; oct < 3; ++oct) {
    const double su = u / cell;
    const double sv = v / cell;
    const double fu = std::floor(su);
    const double fv = std::floor(sv);
    const long ix = static_cast<long>(fu);
    const long iy = static_cast<long>(fv);
    const double ax = smooth(su - fu);
    const double ay = smooth(sv - fv);
    const double v00 = lattice(key, sid, ch, oct, ix, iy);
    const double v10 = lattice(key, sid, ch, oct, ix + 1, iy);
    const double v01 = lattice(key, sid, ch, oct, ix, iy + 1);
    const double v11 = lattice(key, sid, ch, oct, ix + 1, iy + 1);
    value += amp * ((1.0 - ay) * ((1.0 - ax) * v00 + ax * v10) +
                    ay * ((1.0 - ax) * v01 + ax * v11));
    norm += amp;
    amp *= 0.5;
    cell *= 0.5;
  }
  return 0.1 + 0.8 * value / norm;
}

struct Hit {
  int sid = 0;  // 0 = background plane, k+1 = objects[k]
  double z = 0.0;
  double x = 0.0;  // world point, left-camera coordinates
  double y = 0.0;
};

class Scene {
 public:
  Scene(const SynthConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), key_(mix64(cfg.texture_seed) ^ mix64(seed)) {
    // Base texture cells sized so features project to roughly ten pixels.
    bg_cell_ = 10.0 * cfg.background_depth / cfg.rig.intrinsics.fx;
    for (const RectSpec& r : cfg.objects) {
      obj_cell_.push_back(std::min(r.width, r.height) / 3.0);
    }
  }

  // Nearest surface along the ray of pixel (px, py) of a camera at
  // (cam_x, 0, 0) looking down +z.
  Hit trace(double px, double py, double cam_x, double t) const {
    const Intrinsics& k = cfg_.rig.intrinsics;
    const double rx = (px - k.cx) / k.fx;
    const double ry = (py - k.cy) / k.fy;
    Hit hit;
    hit.z = cfg_.background_depth;
    hit.x = cam_x + rx * hit.z;
    hit.y = ry * hit.z;
    for (size_t i = 0; i < cfg_.objects.size(); ++i) {
      const RectSpec& r = cfg_.objects[i];
      const double z = r.z + r.vz * t;
      if (z <= 0.0 || z >= hit.z) continue;
      const double x = cam_x + rx * z;
      const double y = ry * z;
      if (std::abs(x - (r.cx + r.vx * t)) <= 0.5 * r.width &&
          std::abs(y - (r.cy + r.vy * t)) <= 0.5 * r.height) {
        hit = {static_cast<int>(i) + 1, z, x, y};
      }
    }
    return hit;
  }

  double shade(const Hit& hit, int ch, double t) const {
    if (hit.sid == 0) {
      return octave_noise(key_, 0, ch, hit.x, hit.y, bg_cell_);
    }
    const RectSpec& r = cfg_.objects[static_cast<size_t>(hit.sid - 1)];
    const double u = hit.x - (r.cx + r.vx * t);
    const double v = hit.y - (r.cy + r.vy * t);
    return octave_noise(key_, hit.sid, ch, u, v,
                        obj_cell_[static_cast<size_t>(hit.sid - 1)]);
  }

  // Per-frame velocity of the surface behind a hit.
  void velocity(const Hit& hit, double* vx, double* vy, double* vz) const {
    if (hit.sid == 0) {
      *vx = *vy = *vz = 0.0;
      return;
    }
    const RectSpec& r = cfg_.objects[static_cast<size_t>(hit.sid - 1)];
    *vx = r.vx;
    *vy = r.vy;
    *vz = r.vz;
  }

 private:
  const SynthConfig& cfg_;
  std::uint64_t key_;
  double bg_cell_;
  std::vector<double> obj_cell_;
};

}  // namespace

void SynthConfig::validate() const {
  if (height < 2 || width < 2) {
    throw std::invalid_argument("SynthConfig: resolution too small");
  }
  if (num_frames < 3) {
    throw std::invalid_argument("SynthConfig: at least 3 frames required");
  }
  rig.validate();
  if (!(background_depth > 0.0)) {
    throw std::invalid_argument("SynthConfig: background must be in front of the camera");
  }
  for (const RectSpec& r : objects) {
    if (!(r.width > 0.0) || !(r.height > 0.0)) {
      throw std::invalid_argument("SynthConfig: object extents must be positive");
    }
    // One frame past the end: frame n-1 still reports D2 and visibility.
    for (int t = 0; t <= num_frames; ++t) {
      if (!(r.z + r.vz * t > 0.0)) {
        throw std::invalid_argument("SynthConfig: object crosses the camera plane");
      }
    }
  }
}

SequenceSample generate_synthetic_sequence(const SynthConfig& cfg,
                                           std::uint64_t seed) {
  cfg.validate();
  const Scene scene(cfg, seed);
  const Intrinsics& k = cfg.rig.intrinsics;
  const double b = cfg.rig.baseline;
  const int h = cfg.height;
  const int w = cfg.width;
  const int n = cfg.num_frames;
  const long plane = static_cast<long>(h) * w;

  SequenceSample out;
  out.rig = cfg.rig;
  GroundTruth gt;
  const auto empty = Tensor();
  gt.disp.resize(n);
  gt.disp_valid.resize(n);
  gt.disp_future.assign(n, empty);
  gt.disp_future_valid.assign(n, empty);
  gt.flow.assign(n, empty);
  gt.flow_valid.assign(n, empty);
  gt.sceneflow.assign(n, empty);
  gt.sceneflow_valid.assign(n, empty);
  gt.flow_bwd.assign(n, empty);
  gt.sceneflow_bwd.assign(n, empty);
  gt.vis_next.assign(n, empty);

  for (int t = 0; t < n; ++t) {
    Tensor left({3, h, w});
    Tensor right({3, h, w});
    Tensor disp({1, h, w});
    const bool has_next = t + 1 < n;
    const bool has_prev = t > 0;
    Tensor d2, flow, sf, vis, flow_b, sf_b;
    if (has_next) {
      d2 = Tensor({1, h, w});
      flow = Tensor({2, h, w});
      sf = Tensor({3, h, w});
      vis = Tensor({1, h, w});
    }
    if (has_prev) {
      flow_b = Tensor({2, h, w});
      sf_b = Tensor({3, h, w});
    }

    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const long p = static_cast<long>(y) * w + x;
        const Hit hl = scene.trace(x, y, 0.0, t);
        const Hit hr = scene.trace(x, y, b, t);
        for (int c = 0; c < 3; ++c) {
          left[c * plane + p] = scene.shade(hl, c, t);
          right[c * plane + p] = scene.shade(hr, c, t);
        }
        disp[p] = k.fx * b / hl.z;

        double vx, vy, vz;
        scene.velocity(hl, &vx, &vy, &vz);
        // Flow is the difference of two identically-formed projections, so a
        // zero velocity cancels exactly instead of to rounding error.
        const double u0 = k.fx * hl.x / hl.z + k.cx;
        const double v0 = k.fy * hl.y / hl.z + k.cy;
        if (has_next) {
          const double zn = hl.z + vz;
          const double un = k.fx * (hl.x + vx) / zn + k.cx;
          const double vn = k.fy * (hl.y + vy) / zn + k.cy;
          d2[p] = k.fx * b / zn;
          flow[p] = un - u0;
          flow[plane + p] = vn - v0;
          sf[p] = vx;
          sf[plane + p] = vy;
          sf[2 * plane + p] = vz;
          // Visible at t+1 iff the advected point is still the nearest
          // surface along its new ray and lands inside the image.
          bool visible = un >= 0.0 && un <= w - 1 && vn >= 0.0 && vn <= h - 1;
          if (visible) {
            const Hit next = scene.trace(un, vn, 0.0, t + 1);
            visible = next.sid == hl.sid &&
                      std::abs(next.z - zn) <= 1e-9 * std::max(1.0, zn);
          }
          vis[p] = visible ? 1.0 : 0.0;
        }
        if (has_prev) {
          const double zp = hl.z - vz;
          const double up = k.fx * (hl.x - vx) / zp + k.cx;
          const double vp = k.fy * (hl.y - vy) / zp + k.cy;
          flow_b[p] = up - u0;
          flow_b[plane + p] = vp - v0;
          sf_b[p] = -vx;
          sf_b[plane + p] = -vy;
          sf_b[2 * plane + p] = -vz;
        }
      }
    }

    out.left_frames.push_back(std::move(left));
    out.right_frames.push_back(std::move(right));
    gt.disp[t] = std::move(disp);
    gt.disp_valid[t] = Tensor({1, h, w}, 1.0);
    if (has_next) {
      gt.disp_future[t] = std::move(d2);
      gt.disp_future_valid[t] = Tensor({1, h, w}, 1.0);
      gt.flow[t] = std::move(flow);
      gt.flow_valid[t] = Tensor({1, h, w}, 1.0);
      gt.sceneflow[t] = std::move(sf);
      gt.sceneflow_valid[t] = Tensor({1, h, w}, 1.0);
      gt.vis_next[t] = std::move(vis);
    }
    if (has_prev) {
      gt.flow_bwd[t] = std::move(flow_b);
      gt.sceneflow_bwd[t] = std::move(sf_b);
    }
  }

  out.gt = std::move(gt);
  return out;
}

SynthConfig random_scene(int height, int width, int num_frames,
                         int num_objects, std::uint64_t seed) {
  if (num_objects < 0) {
    throw std::invalid_argument("random_scene: negative object count");
  }
  SynthConfig cfg;
  cfg.height = height;
  cfg.width = width;
  cfg.num_frames = num_frames;
  cfg.rig.intrinsics = {width / 2.0, width / 2.0, (width - 1) / 2.0,
                        (height - 1) / 2.0};
  cfg.rig.baseline = 0.5;
  cfg.background_depth = 20.0;
  cfg.texture_seed = seed;

  std::mt19937_64 rng(mix64(seed));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double fx = cfg.rig.intrinsics.fx;
  for (int i = 0; i < num_objects; ++i) {
    RectSpec r;
    r.z = 4.0 + 5.0 * u01(rng);
    // Aim the center at a pixel in the central 80% of the view.
    const double px = (0.1 + 0.8 * u01(rng)) * (width - 1);
    const double py = (0.1 + 0.8 * u01(rng)) * (height - 1);
    r.cx = (px - cfg.rig.intrinsics.cx) / fx * r.z;
    r.cy = (py - cfg.rig.intrinsics.cy) / cfg.rig.intrinsics.fy * r.z;
    r.width = (1.0 + 1.5 * u01(rng)) * r.z / 6.0;
    r.height = (1.0 + 1.5 * u01(rng)) * r.z / 6.0;
    // A few pixels of image motion per frame, and a depth change that keeps
    // the object inside (3, 0.9 * background) for the whole sequence.
    const double vmax = 3.0 * r.z / fx;
    r.vx = (2.0 * u01(rng) - 1.0) * vmax;
    r.vy = (2.0 * u01(rng) - 1.0) * vmax * 0.5;
    const double lo = (3.0 - r.z) / num_frames;
    const double hi = (0.9 * cfg.background_depth - r.z) / num_frames;
    r.vz = lo + (hi - lo) * u01(rng);
    r.vz = std::min(std::max(r.vz, -0.2), 0.2);
    cfg.objects.push_back(r);
  }
  cfg.validate();
  return cfg;
}

}  // namespace mmsf::data
