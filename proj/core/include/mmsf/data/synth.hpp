// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
//
// Synthetic stereo sequences with exact per-pixel ground truth. The scene is
// a static textured background plane plus fronto-parallel textured rectangles
// translating at constant 3D velocity; every map is ray-traced analytically,
// so geometric ground truth is accurate to rounding.
#pragma once

#include <cstdint>
#include <vector>

#include "mmsf/core/types.hpp"

namespace mmsf::data {

struct RectSpec {
  double cx = 0.0, cy = 0.0, z = 5.0;  // center at frame 0, meters
  double width = 1.0, height = 1.0;    // extents, meters
  double vx = 0.0, vy = 0.0, vz = 0.0; // meters per frame
};

struct SynthConfig {
  int height = 64;
  int width = 128;
  int num_frames = 5;
  StereoRig rig;
  double background_depth = 20.0;
  std::vector<RectSpec> objects;
  std::uint64_t texture_seed = 0;

  // Rejects degenerate scenes: any surface at or behind the camera during
  // the sequence, including one frame past the end (D2 needs it).
  void validate() const;
};

// Deterministic in (cfg, seed); seed perturbs the textures on top of
// cfg.texture_seed. Ground truth covers forward and backward flow and scene
// flow, future disparity at reference pixels, and next-frame visibility.
SequenceSample generate_synthetic_sequence(const SynthConfig& cfg,
                                           std::uint64_t seed);

// A ready-made scene: num_objects rectangles with safe depths and velocities
// drawn from the seed. The rig focal length tracks the resolution so object
// motion stays a few pixels per frame.
SynthConfig random_scene(int height, int width, int num_frames,
                         int num_objects, std::uint64_t seed);

}  // namespace mmsf::data
