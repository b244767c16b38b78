// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mmsf/cli/cli.hpp"

namespace mmsf::cli {
namespace {

// Anchor and spans chosen to keep the unit ball mostly inside the sRGB gamut.
constexpr double kAnchorL = 55.0;
constexpr double kSpanL = 35.0;
constexpr double kSpanChroma = 60.0;

double srgb_gamma(double c) {
  c = std::clamp(c, 0.0, 1.0);
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double lab_finv(double t) {
  const double d = 6.0 / 29.0;
  return t > d ? t * t * t : 3.0 * d * d * (t - 4.0 / 29.0);
}

}  // namespace

Tensor sceneflow_to_lab(const Tensor& sf, double max_norm) {
  if (sf.rank() != 3 || sf.channels() != 3) {
    throw std::invalid_argument("sceneflow_to_lab: {3,h,w} expected");
  }
  if (!(max_norm > 0.0)) {
    throw std::invalid_argument("sceneflow_to_lab: max_norm must be positive");
  }
  const long plane = static_cast<long>(sf.height()) * sf.width();
  Tensor lab(sf.shape());
  for (long p = 0; p < plane; ++p) {
    double nx = sf[p] / max_norm;
    double ny = sf[plane + p] / max_norm;
    double nz = sf[2 * plane + p] / max_norm;
    const double len = std::sqrt(nx * nx + ny * ny + nz * nz);
    if (len > 1.0) {
      nx /= len;
      ny /= len;
      nz /= len;
    }
    lab[p] = kAnchorL - kSpanL * ny;  // up in camera coordinates = brighter
    lab[plane + p] = kSpanChroma * nx;
    lab[2 * plane + p] = kSpanChroma * nz;
  }
  return lab;
}

Tensor lab_to_srgb(const Tensor& lab) {
  if (lab.rank() != 3 || lab.channels() != 3) {
    throw std::invalid_argument("lab_to_srgb: {3,h,w} expected");
  }
  // D65 reference white.
  const double xn = 0.95047, yn = 1.0, zn = 1.08883;
  const long plane = static_cast<long>(lab.height()) * lab.width();
  Tensor rgb(lab.shape());
  for (long p = 0; p < plane; ++p) {
    const double fy = (lab[p] + 16.0) / 116.0;
    const double fx = fy + lab[plane + p] / 500.0;
    const double fz = fy - lab[2 * plane + p] / 200.0;
    const double x = xn * lab_finv(fx);
    const double y = yn * lab_finv(fy);
    const double z = zn * lab_finv(fz);
    const double r = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z;
    const double g = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z;
    const double b = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z;
    rgb[p] = srgb_gamma(r);
    rgb[plane + p] = srgb_gamma(g);
    rgb[2 * plane + p] = srgb_gamma(b);
  }
  return rgb;
}

Tensor sceneflow_to_rgb(const Tensor& sf, double max_norm) {
  return lab_to_srgb(sceneflow_to_lab(sf, max_norm));
}

double percentile_norm(const Tensor& sf, double percentile) {
  if (sf.rank() != 3 || sf.channels() != 3) {
    throw std::invalid_argument("percentile_norm: {3,h,w} expected");
  }
  if (!(percentile > 0.0) || percentile > 100.0) {
    throw std::invalid_argument("percentile_norm: percentile in (0, 100]");
  }
  const long plane = static_cast<long>(sf.height()) * sf.width();
  std::vector<double> mag(static_cast<size_t>(plane));
  for (long p = 0; p < plane; ++p) {
    mag[static_cast<size_t>(p)] =
        std::sqrt(sf[p] * sf[p] + sf[plane + p] * sf[plane + p] +
                  sf[2 * plane + p] * sf[2 * plane + p]);
  }
  const long rank =
      std::max<long>(0, static_cast<long>(std::ceil(percentile / 100.0 * plane)) - 1);
  std::nth_element(mag.begin(), mag.begin() + rank, mag.end());
  const double v = mag[static_cast<size_t>(rank)];
  return v > 0.0 ? v : 1.0;
}

}  // namespace mmsf::cli
