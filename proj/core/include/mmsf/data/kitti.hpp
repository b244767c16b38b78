// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#pragma once

#include <string>
#include <vector>

#include "mmsf/core/types.hpp"

namespace mmsf::data {

// Scans `path` for scene directories shaped like
//   scene_xx/image_left/%06d.png, scene_xx/image_right/%06d.png,
//   scene_xx/calib.txt ("fx fy cx cy baseline"),
// and yields every window of seq_len consecutive frame indices within a
// scene. Optional disp/, disp_future/ and flow/ subfolders are decoded into
// ground truth where present. Windows with an unpaired left frame are
// skipped with a warning; a scene without calib.txt is an error; a directory
// with no scenes yields an empty dataset.
std::vector<SequenceSample> load_kitti_dir(const std::string& path,
                                           int seq_len);

}  // namespace mmsf::data
