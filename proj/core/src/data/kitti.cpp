// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include "mmsf/data/kitti.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include "mmsf/core/log.hpp"
#include "mmsf/data/codec.hpp"

namespace fs = std::filesystem;

namespace mmsf::data {
namespace {

StereoRig parse_calib(const fs::path& file) {
  std::ifstream in(file);
  StereoRig rig;
  if (!(in >> rig.intrinsics.fx >> rig.intrinsics.fy >> rig.intrinsics.cx >>
        rig.intrinsics.cy >> rig.baseline)) {
    throw std::runtime_error("load_kitti_dir: unreadable calibration " +
                             file.string());
  }
  rig.validate();
  return rig;
}

std::string frame_name(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d.png", id);
  return buf;
}

// Frame ids present in image_left/, sorted. Non-numeric entries are ignored.
std::vector<int> scan_frames(const fs::path& scene) {
  std::vector<int> ids;
  for (const auto& e : fs::directory_iterator(scene / "image_left")) {
    if (e.path().extension() != ".png") continue;
    const std::string stem = e.path().stem().string();
    if (stem.empty() ||
        stem.find_first_not_of("0123456789") != std::string::npos) {
      continue;
    }
    ids.push_back(std::stoi(stem));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

// Decoded-once caches per scene; windows copy out of them.
struct SceneCache {
  std::map<int, Tensor> left, right;
  std::map<int, DecodedDisparity> disp, disp_future;
  std::map<int, DecodedFlow> flow;
};

template <typename T, typename Decode>
const T* cached(std::map<int, T>& cache, const fs::path& file, int id,
                Decode decode) {
  auto it = cache.find(id);
  if (it == cache.end()) {
    if (!fs::exists(file)) return nullptr;
    it = cache.emplace(id, decode(read_file(file.string()))).first;
  }
  return &it->second;
}

}  // namespace

std::vector<SequenceSample> load_kitti_dir(const std::string& path,
                                           int seq_len) {
  if (seq_len < 2) {
    throw std::invalid_argument("load_kitti_dir: seq_len must be at least 2");
  }
  if (!fs::is_directory(path)) {
    throw std::invalid_argument("load_kitti_dir: not a directory: " + path);
  }

  std::vector<fs::path> scenes;
  for (const auto& e : fs::directory_iterator(path)) {
    if (e.is_directory() && fs::is_directory(e.path() / "image_left")) {
      scenes.push_back(e.path());
    }
  }
  std::sort(scenes.begin(), scenes.end());

  std::vector<SequenceSample> out;
  for (const fs::path& scene : scenes) {
    if (!fs::exists(scene / "calib.txt")) {
      throw std::runtime_error("load_kitti_dir: missing calibration in " +
                               scene.string());
    }
    const StereoRig rig = parse_calib(scene / "calib.txt");
    const std::vector<int> ids = scan_frames(scene);
    const bool any_gt = fs::is_directory(scene / "disp") ||
                        fs::is_directory(scene / "disp_future") ||
                        fs::is_directory(scene / "flow");
    SceneCache cache;

    for (size_t start = 0; start + seq_len <= ids.size(); ++start) {
      // Consecutive ids only; a numbering gap ends the window run.
      bool consecutive = true;
      for (int j = 1; j < seq_len; ++j) {
        if (ids[start + j] != ids[start] + j) {
          consecutive = false;
          break;
        }
      }
      if (!consecutive) continue;

      bool paired = true;
      for (int j = 0; j < seq_len && paired; ++j) {
        const int id = ids[start + j];
        if (!fs::exists(scene / "image_right" / frame_name(id))) {
          log::write(log::Level::kWarn,
                     "%s: skipping window at frame %d (no right image %06d)",
                     scene.string().c_str(), ids[start], id);
          paired = false;
        }
      }
      if (!paired) continue;

      SequenceSample sample;
      sample.rig = rig;
      GroundTruth gt;
      if (any_gt) {
        gt.disp.resize(seq_len);
        gt.disp_valid.resize(seq_len);
        gt.disp_future.resize(seq_len);
        gt.disp_future_valid.resize(seq_len);
        gt.flow.resize(seq_len);
        gt.flow_valid.resize(seq_len);
      }
      for (int j = 0; j < seq_len; ++j) {
        const int id = ids[start + j];
        const Tensor* left =
            cached(cache.left, scene / "image_left" / frame_name(id), id,
                   decode_image_png8);
        const Tensor* right =
            cached(cache.right, scene / "image_right" / frame_name(id), id,
                   decode_image_png8);
        sample.left_frames.push_back(*left);
        sample.right_frames.push_back(*right);
        if (!any_gt) continue;
        if (const auto* d = cached(cache.disp, scene / "disp" / frame_name(id),
                                   id, decode_disparity_png16)) {
          gt.disp[j] = d->d;
          gt.disp_valid[j] = d->valid;
        }
        if (const auto* d =
                cached(cache.disp_future,
                       scene / "disp_future" / frame_name(id), id,
                       decode_disparity_png16)) {
          gt.disp_future[j] = d->d;
          gt.disp_future_valid[j] = d->valid;
        }
        if (const auto* f = cached(cache.flow, scene / "flow" / frame_name(id),
                                   id, decode_flow_png16)) {
          gt.flow[j] = f->flow;
          gt.flow_valid[j] = f->valid;
        }
      }
      if (any_gt) sample.gt = std::move(gt);
      sample.validate();
      out.push_back(std::move(sample));
    }
  }
  return out;
}

}  // namespace mmsf::data
