// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#pragma once

#include "mmsf/core/types.hpp"

namespace mmsf::cli {

// Scene-flow color coding. The vector is scaled by 1/max_norm, clamped to the
// unit ball, and placed in CIE-LAB around a mid-gray anchor: s_x and s_z span
// the a/b chroma plane, s_y darkens or lightens L. Zero flow is the anchor.
Tensor sceneflow_to_lab(const Tensor& sf, double max_norm);

// D65 LAB -> sRGB with out-of-gamut clamping; output {3,h,w} in [0,1].
Tensor lab_to_srgb(const Tensor& lab);

Tensor sceneflow_to_rgb(const Tensor& sf, double max_norm);

// Magnitude percentile used as the default max_norm; 1.0 for an all-zero map.
double percentile_norm(const Tensor& sf, double percentile = 95.0);

// The command-line driver behind the mmsf tool. Returns 0 on success, 1 on
// usage errors, 2 on runtime failures.
int run(int argc, const char* const* argv);

}  // namespace mmsf::cli
