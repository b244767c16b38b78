// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
//
// Subcommand driver. Every command is a thin shell over the library: the
// heavy lifting stays in the data/train/eval modules so CLI behavior and
// library behavior cannot drift apart.
#include "mmsf/cli/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmsf/ad/graph.hpp"
#include "mmsf/core/log.hpp"
#include "mmsf/data/codec.hpp"
#include "mmsf/data/kitti.hpp"
#include "mmsf/data/synth.hpp"
#include "mmsf/eval/metrics.hpp"
#include "mmsf/geometry/geometry.hpp"
#include "mmsf/net/checkpoint.hpp"
#include "mmsf/net/model.hpp"
#include "mmsf/train/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace mmsf::cli {
namespace {

// Codec-encodable clamps applied when writing predictions to disk.
constexpr double kDispFloor = 1.0 / 256.0;
constexpr double kDispCeil = 255.99;
constexpr double kFlowCeil = 511.98;

std::string frame_name(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d.png", id);
  return buf;
}

std::string seq_name(size_t idx) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "seq_%04zu", idx);
  return buf;
}

// ---- resolved tool configuration ----

struct ToolConfig {
  net::ModelConfig model;
  train::TrainConfig train;
  std::uint64_t seed = 0;
};

void apply_json_file(ToolConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  const json j = json::parse(in);
  if (j.contains("width_multiplier")) cfg.model.width_multiplier = j["width_multiplier"];
  if (j.contains("correlation_radius")) cfg.model.correlation_radius = j["correlation_radius"];
  if (j.contains("two_frame")) cfg.model.two_frame_mode = j["two_frame"];
  if (j.contains("steps")) cfg.train.total_steps = j["steps"];
  if (j.contains("lr")) cfg.train.lr_initial = j["lr"];
  if (j.contains("seq_len")) cfg.train.seq_len = j["seq_len"];
  if (j.contains("height")) cfg.train.train_h = j["height"];
  if (j.contains("width")) cfg.train.train_w = j["width"];
  if (j.contains("augment")) cfg.train.augment = j["augment"];
  if (j.contains("detach_epochs")) cfg.train.detach_epochs = j["detach_epochs"];
  if (j.contains("checkpoint_every")) cfg.train.checkpoint_every = j["checkpoint_every"];
  if (j.contains("seed")) cfg.seed = j["seed"];
}

void write_json_file(const ToolConfig& cfg, const std::string& path) {
  json j;
  j["width_multiplier"] = cfg.model.width_multiplier;
  j["correlation_radius"] = cfg.model.correlation_radius;
  j["two_frame"] = cfg.model.two_frame_mode;
  j["steps"] = cfg.train.total_steps;
  j["lr"] = cfg.train.lr_initial;
  j["seq_len"] = cfg.train.seq_len;
  j["height"] = cfg.train.train_h;
  j["width"] = cfg.train.train_w;
  j["augment"] = cfg.train.augment;
  j["detach_epochs"] = cfg.train.detach_epochs;
  j["checkpoint_every"] = cfg.train.checkpoint_every;
  j["seed"] = cfg.seed;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path);
  out << j.dump(2) << "\n";
}

// Precedence: built-in defaults < JSON config < flags the user passed.
// Configs travel with checkpoints, so eval/infer fall back to the sibling
// config.json of --checkpoint when --config is absent.
ToolConfig resolve_config(const CLI::App* sub, const ToolConfig& flags,
                          const std::string& config_path,
                          const std::string& checkpoint_path) {
  std::string path = config_path;
  if (path.empty() && !checkpoint_path.empty()) {
    const fs::path sibling =
        fs::path(checkpoint_path).parent_path() / "config.json";
    if (fs::exists(sibling)) path = sibling.string();
  }
  if (path.empty()) return flags;

  ToolConfig cfg;
  apply_json_file(cfg, path);
  if (sub->count("--seed")) cfg.seed = flags.seed;
  if (sub->count("--steps")) cfg.train.total_steps = flags.train.total_steps;
  if (sub->count("--width-mult")) {
    cfg.model.width_multiplier = flags.model.width_multiplier;
  }
  if (sub->count("--seq-len")) cfg.train.seq_len = flags.train.seq_len;
  if (sub->count("--lr")) cfg.train.lr_initial = flags.train.lr_initial;
  if (sub->count("--height")) cfg.train.train_h = flags.train.train_h;
  if (sub->count("--width")) cfg.train.train_w = flags.train.train_w;
  if (sub->count("--detach-epochs")) {
    cfg.train.detach_epochs = flags.train.detach_epochs;
  }
  if (sub->count("--checkpoint-every")) {
    cfg.train.checkpoint_every = flags.train.checkpoint_every;
  }
  if (sub->count("--two-frame")) {
    cfg.model.two_frame_mode = flags.model.two_frame_mode;
  }
  if (sub->count("--no-augment")) cfg.train.augment = flags.train.augment;
  return cfg;
}

// ---- prediction plumbing ----

struct FramePrediction {
  int frame = 0;  // window-relative reference frame
  Tensor d1, d2, flow, sf;
};

std::vector<FramePrediction> predict_sequence(const net::Model& model,
                                              const SequenceSample& sample) {
  const net::ForwardResult res = model.forward(sample);
  const int t_first = model.config().two_frame_mode ? 0 : 1;
  const int h = sample.left_frames[0].height();
  const int w = sample.left_frames[0].width();
  std::vector<FramePrediction> out;
  for (size_t j = 0; j < res.bundles.size(); ++j) {
    const EstimateBundle& b = res.bundles[j];
    FramePrediction p;
    p.frame = t_first + static_cast<int>(j);
    p.d1 = b.d;
    p.sf = b.s_f;
    const ad::Var d = ad::constant(b.d);
    const ad::Var sf = ad::constant(b.s_f);
    p.flow = geometry::reproject_with_sceneflow(d, sf, sample.rig).flow->value;
    Tensor sz({1, h, w});
    const long plane = static_cast<long>(h) * w;
    for (long i = 0; i < plane; ++i) sz[i] = b.s_f[2 * plane + i];
    p.d2 = geometry::future_disparity(d, ad::constant(sz), sample.rig).d2->value;
    out.push_back(std::move(p));
  }
  return out;
}

// Inverse of the projection pair: recover metric scene flow from stored
// disparity, future disparity and flow. Pixels invalid on either disparity
// stay zero.
Tensor sceneflow_from_maps(const Tensor& d1, const Tensor& d2,
                           const Tensor& flow, const Tensor& valid,
                           const StereoRig& rig) {
  const int h = d1.height();
  const int w = d1.width();
  const long plane = static_cast<long>(h) * w;
  const Intrinsics& k = rig.intrinsics;
  Tensor sf({3, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const long p = static_cast<long>(y) * w + x;
      if (valid[p] == 0.0 || d1[p] <= 0.0 || d2[p] <= 0.0) continue;
      const double z1 = k.fx * rig.baseline / d1[p];
      const double z2 = k.fx * rig.baseline / d2[p];
      const double x1 = (x - k.cx) / k.fx * z1;
      const double y1 = (y - k.cy) / k.fy * z1;
      const double x2 = (x + flow[p] - k.cx) / k.fx * z2;
      const double y2 = (y + flow[plane + p] - k.cy) / k.fy * z2;
      sf[p] = x2 - x1;
      sf[plane + p] = y2 - y1;
      sf[2 * plane + p] = z2 - z1;
    }
  }
  return sf;
}

Tensor clamped(const Tensor& t, double lo, double hi) {
  Tensor out = t;
  for (long i = 0; i < out.numel(); ++i) out[i] = std::clamp(out[i], lo, hi);
  return out;
}

// ---- synth ----

struct SynthOpts {
  std::string out;
  int scenes = 1;
  int frames = 5;
  int height = 64;
  int width = 128;
  int objects = 3;
  std::uint64_t seed = 0;
};

void cmd_synth(const SynthOpts& o) {
  for (int s = 0; s < o.scenes; ++s) {
    const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(s);
    const data::SynthConfig cfg =
        data::random_scene(o.height, o.width, o.frames, o.objects, seed);
    const SequenceSample sample = data::generate_synthetic_sequence(cfg, seed);
    const GroundTruth& gt = *sample.gt;

    char name[32];
    std::snprintf(name, sizeof(name), "scene_%02d", s);
    const fs::path dir = fs::path(o.out) / name;
    fs::create_directories(dir / "image_left");
    fs::create_directories(dir / "image_right");
    fs::create_directories(dir / "disp");
    fs::create_directories(dir / "disp_future");
    fs::create_directories(dir / "flow");

    char calib[160];
    std::snprintf(calib, sizeof(calib), "%.17g %.17g %.17g %.17g %.17g\n",
                  cfg.rig.intrinsics.fx, cfg.rig.intrinsics.fy,
                  cfg.rig.intrinsics.cx, cfg.rig.intrinsics.cy,
                  cfg.rig.baseline);
    std::ofstream(dir / "calib.txt") << calib;

    for (int t = 0; t < o.frames; ++t) {
      const std::string f = frame_name(t);
      data::write_file((dir / "image_left" / f).string(),
                       data::encode_image_png8(sample.left_frames[t]));
      data::write_file((dir / "image_right" / f).string(),
                       data::encode_image_png8(sample.right_frames[t]));
      data::write_file((dir / "disp" / f).string(),
                       data::encode_disparity_png16(gt.disp[t]));
      if (t + 1 < o.frames) {
        data::write_file((dir / "disp_future" / f).string(),
                         data::encode_disparity_png16(gt.disp_future[t]));
        data::write_file((dir / "flow" / f).string(),
                         data::encode_flow_png16(gt.flow[t]));
      }
    }
  }
  log::write(log::Level::kInfo, "synth: wrote %d scene(s) to %s", o.scenes,
             o.out.c_str());
}

// ---- train ----

struct TrainOpts {
  std::string data, out, config, resume;
};

void cmd_train(const TrainOpts& o, ToolConfig cfg) {
  const auto dataset = data::load_kitti_dir(o.data, cfg.train.seq_len);
  if (dataset.empty()) {
    throw std::runtime_error("no training windows under " + o.data);
  }
  fs::create_directories(o.out);
  cfg.train.seed = cfg.seed;
  cfg.train.checkpoint_dir = o.out;
  cfg.train.validate();
  cfg.model.validate();

  net::Model model(cfg.model, cfg.seed);
  std::ofstream csv(fs::path(o.out) / "train_log.csv");
  csv << "step,lr,l_total,l_d,l_sf,lambda_sf\n";
  const auto sink = [&csv](const train::TrainLogEntry& e) {
    csv << e.step << ',' << e.lr << ',' << e.l_total << ',' << e.l_d << ','
        << e.l_sf << ',' << e.lambda_sf << '\n';
  };
  train::fit(model, dataset, cfg.train, o.resume, sink);

  net::save_checkpoint((fs::path(o.out) / "final.ckpt").string(),
                       net::snapshot(model));
  write_json_file(cfg, (fs::path(o.out) / "config.json").string());
}

// ---- eval ----

struct EvalOpts {
  std::string data, checkpoint, pred, config, out;
  bool gt_as_prediction = false;
  bool aepe = false;
};

bool frame_has_gt(const GroundTruth& gt, int t) {
  return t < static_cast<int>(gt.disp.size()) && gt.disp[t].numel() > 0 &&
         t < static_cast<int>(gt.disp_future.size()) &&
         gt.disp_future[t].numel() > 0 &&
         t < static_cast<int>(gt.flow.size()) && gt.flow[t].numel() > 0;
}

eval::SceneFlowTruth truth_at(const GroundTruth& gt, int t) {
  eval::SceneFlowTruth truth;
  truth.d1 = gt.disp[t];
  truth.d1_valid = gt.disp_valid[t];
  truth.d2 = gt.disp_future[t];
  truth.d2_valid = gt.disp_future_valid[t];
  truth.flow = gt.flow[t];
  truth.flow_valid = gt.flow_valid[t];
  if (t < static_cast<int>(gt.sceneflow.size()) &&
      gt.sceneflow[t].numel() > 0) {
    truth.sf = gt.sceneflow[t];
    truth.sf_valid = gt.sceneflow_valid[t];
  }
  return truth;
}

std::vector<FramePrediction> read_predictions(const fs::path& seq_dir,
                                              const StereoRig& rig,
                                              int num_frames) {
  std::vector<FramePrediction> out;
  for (int t = 0; t < num_frames; ++t) {
    const std::string f = frame_name(t);
    if (!fs::exists(seq_dir / "disp" / f) ||
        !fs::exists(seq_dir / "disp_future" / f) ||
        !fs::exists(seq_dir / "flow" / f)) {
      continue;
    }
    FramePrediction p;
    p.frame = t;
    p.d1 = data::decode_disparity_png16(data::read_file((seq_dir / "disp" / f).string())).d;
    p.d2 = data::decode_disparity_png16(
               data::read_file((seq_dir / "disp_future" / f).string())).d;
    const auto fl = data::decode_flow_png16(data::read_file((seq_dir / "flow" / f).string()));
    p.flow = fl.flow;
    p.sf = sceneflow_from_maps(p.d1, p.d2, p.flow, fl.valid, rig);
    out.push_back(std::move(p));
  }
  return out;
}

struct EvalAccumulator {
  double d1 = 0, d2 = 0, fl = 0, sf = 0, epe_flow = 0;
  long frames = 0;
  long n_valid = 0;
  double epe_sf = 0;
  long epe_sf_frames = 0;
  double aepe = 0;
  long aepe_pairs = 0;
};

void cmd_eval(const EvalOpts& o, const ToolConfig& cfg) {
  const auto dataset = data::load_kitti_dir(o.data, cfg.train.seq_len);
  if (dataset.empty()) throw std::runtime_error("no sequences under " + o.data);

  std::optional<net::Model> model;
  if (!o.gt_as_prediction && o.pred.empty()) {
    if (o.checkpoint.empty()) {
      throw std::runtime_error(
          "eval needs --checkpoint, --pred or --gt-as-prediction");
    }
    model.emplace(cfg.model, cfg.seed);
    net::apply_checkpoint(*model, net::load_checkpoint(o.checkpoint));
  }

  EvalAccumulator acc;
  for (size_t i = 0; i < dataset.size(); ++i) {
    const SequenceSample& sample = dataset[i];
    if (!sample.gt.has_value()) continue;
    const GroundTruth& gt = *sample.gt;

    std::vector<FramePrediction> preds;
    if (o.gt_as_prediction) {
      for (int t = 0; t < sample.num_frames(); ++t) {
        if (!frame_has_gt(gt, t)) continue;
        FramePrediction p;
        p.frame = t;
        p.d1 = gt.disp[t];
        p.d2 = gt.disp_future[t];
        p.flow = gt.flow[t];
        if (t < static_cast<int>(gt.sceneflow.size())) p.sf = gt.sceneflow[t];
        preds.push_back(std::move(p));
      }
    } else if (!o.pred.empty()) {
      preds = read_predictions(fs::path(o.pred) / seq_name(i), sample.rig,
                               sample.num_frames());
    } else {
      preds = predict_sequence(*model, sample);
    }

    for (const FramePrediction& p : preds) {
      if (!frame_has_gt(gt, p.frame)) continue;
      eval::SceneFlowEval est;
      est.d1 = p.d1;
      est.d2 = p.d2;
      est.flow = p.flow;
      est.sf = p.sf;
      const eval::MetricReport rep =
          eval::scene_flow_metrics(est, truth_at(gt, p.frame));
      if (!rep.defined) continue;
      acc.d1 += rep.d1_all;
      acc.d2 += rep.d2_all;
      acc.fl += rep.fl_all;
      acc.sf += rep.sf_all;
      acc.epe_flow += rep.epe_flow;
      acc.n_valid += rep.n_valid;
      ++acc.frames;
      if (p.sf.numel() > 0 &&
          p.frame < static_cast<int>(gt.sceneflow.size()) &&
          gt.sceneflow[p.frame].numel() > 0) {
        acc.epe_sf += rep.epe_sf;
        ++acc.epe_sf_frames;
      }
    }

    if (o.aepe) {
      for (size_t j = 0; j + 1 < preds.size(); ++j) {
        const FramePrediction& a = preds[j];
        const FramePrediction& b = preds[j + 1];
        if (b.frame != a.frame + 1 || a.sf.numel() == 0 || b.sf.numel() == 0) continue;
        if (a.frame >= static_cast<int>(gt.flow.size()) ||
            gt.flow[a.frame].numel() == 0) {
          continue;
        }
        acc.aepe += eval::temporal_consistency_aepe(
            a.sf, b.sf, gt.flow[a.frame], gt.flow_valid[a.frame]);
        ++acc.aepe_pairs;
      }
    }
  }

  if (acc.frames == 0) {
    throw std::runtime_error("no frames with complete ground truth to score");
  }
  if (o.aepe && acc.aepe_pairs == 0) {
    throw std::runtime_error(
        "temporal consistency needs ground-truth flow and consecutive "
        "scene-flow estimates");
  }

  const double n = static_cast<double>(acc.frames);
  char epe_sf_col[32];
  if (acc.epe_sf_frames > 0) {
    std::snprintf(epe_sf_col, sizeof(epe_sf_col), "%10.2f",
                  acc.epe_sf / acc.epe_sf_frames);
  } else {
    std::snprintf(epe_sf_col, sizeof(epe_sf_col), "%10s", "-");
  }
  std::printf("%8s %8s %8s %8s %10s %10s\n", "D1-all", "D2-all", "Fl-all",
              "SF-all", "EPE-flow", "EPE-sf");
  std::printf("%7.2f%% %7.2f%% %7.2f%% %7.2f%% %10.2f %s\n", acc.d1 / n,
              acc.d2 / n, acc.fl / n, acc.sf / n, acc.epe_flow / n, epe_sf_col);
  if (o.aepe) {
    std::printf("AEPE %.4f over %ld frame pair(s)\n", acc.aepe / acc.aepe_pairs,
                acc.aepe_pairs);
  }

  if (!o.out.empty()) {
    std::ofstream kv(o.out);
    if (!kv) throw std::runtime_error("cannot write " + o.out);
    kv << "frames " << acc.frames << "\n";
    kv << "n_valid " << acc.n_valid << "\n";
    char line[64];
    std::snprintf(line, sizeof(line), "d1_all %.6f\n", acc.d1 / n);
    kv << line;
    std::snprintf(line, sizeof(line), "d2_all %.6f\n", acc.d2 / n);
    kv << line;
    std::snprintf(line, sizeof(line), "fl_all %.6f\n", acc.fl / n);
    kv << line;
    std::snprintf(line, sizeof(line), "sf_all %.6f\n", acc.sf / n);
    kv << line;
    std::snprintf(line, sizeof(line), "epe_flow %.6f\n", acc.epe_flow / n);
    kv << line;
    if (acc.epe_sf_frames > 0) {
      std::snprintf(line, sizeof(line), "epe_sf %.6f\n",
                    acc.epe_sf / acc.epe_sf_frames);
      kv << line;
    }
    if (o.aepe) {
      std::snprintf(line, sizeof(line), "aepe %.6f\n", acc.aepe / acc.aepe_pairs);
      kv << line;
    }
  }
}

// ---- infer ----

struct InferOpts {
  std::string data, checkpoint, out, config;
};

void cmd_infer(const InferOpts& o, const ToolConfig& cfg) {
  const auto dataset = data::load_kitti_dir(o.data, cfg.train.seq_len);
  if (dataset.empty()) throw std::runtime_error("no sequences under " + o.data);
  net::Model model(cfg.model, cfg.seed);
  net::apply_checkpoint(model, net::load_checkpoint(o.checkpoint));

  for (size_t i = 0; i < dataset.size(); ++i) {
    const SequenceSample& sample = dataset[i];
    const fs::path dir = fs::path(o.out) / seq_name(i);
    fs::create_directories(dir / "disp");
    fs::create_directories(dir / "disp_future");
    fs::create_directories(dir / "flow");
    fs::create_directories(dir / "vis");
    char calib[160];
    std::snprintf(calib, sizeof(calib), "%.17g %.17g %.17g %.17g %.17g\n",
                  sample.rig.intrinsics.fx, sample.rig.intrinsics.fy,
                  sample.rig.intrinsics.cx, sample.rig.intrinsics.cy,
                  sample.rig.baseline);
    std::ofstream(dir / "calib.txt") << calib;

    for (const FramePrediction& p : predict_sequence(model, sample)) {
      const std::string f = frame_name(p.frame);
      data::write_file((dir / "disp" / f).string(),
                       data::encode_disparity_png16(
                           clamped(p.d1, kDispFloor, kDispCeil)));
      data::write_file((dir / "disp_future" / f).string(),
                       data::encode_disparity_png16(
                           clamped(p.d2, kDispFloor, kDispCeil)));
      data::write_file((dir / "flow" / f).string(),
                       data::encode_flow_png16(
                           clamped(p.flow, -kFlowCeil, kFlowCeil)));
      data::write_file((dir / "vis" / ("sceneflow_" + f)).string(),
                       data::encode_image_png8(sceneflow_to_rgb(
                           p.sf, percentile_norm(p.sf))));
    }
  }
}

// ---- visualize ----

struct VisOpts {
  std::string pred, out;
  double max_norm = 0.0;  // 0 = per-image 95th percentile
};

StereoRig read_calib(const fs::path& file) {
  std::ifstream in(file);
  StereoRig rig;
  if (!(in >> rig.intrinsics.fx >> rig.intrinsics.fy >> rig.intrinsics.cx >>
        rig.intrinsics.cy >> rig.baseline)) {
    throw std::runtime_error("unreadable calibration " + file.string());
  }
  rig.validate();
  return rig;
}

Tensor gray3(const Tensor& map) {
  double peak = 0.0;
  for (long i = 0; i < map.numel(); ++i) peak = std::max(peak, map[i]);
  if (peak <= 0.0) peak = 1.0;
  Tensor img({3, map.height(), map.width()});
  for (long i = 0; i < map.numel(); ++i) {
    for (int c = 0; c < 3; ++c) img[c * map.numel() + i] = map[i] / peak;
  }
  return img;
}

void cmd_visualize(const VisOpts& o) {
  std::vector<fs::path> seqs;
  for (const auto& e : fs::directory_iterator(o.pred)) {
    if (e.is_directory() && fs::exists(e.path() / "calib.txt")) {
      seqs.push_back(e.path());
    }
  }
  std::sort(seqs.begin(), seqs.end());
  if (seqs.empty()) {
    throw std::runtime_error("no prediction sequences under " + o.pred);
  }
  for (const fs::path& seq : seqs) {
    const StereoRig rig = read_calib(seq / "calib.txt");
    const fs::path out_dir = fs::path(o.out) / seq.filename();
    fs::create_directories(out_dir);
    for (const auto& e : fs::directory_iterator(seq / "disp")) {
      if (e.path().extension() != ".png") continue;
      const std::string f = e.path().filename().string();
      const Tensor d1 = data::decode_disparity_png16(
                            data::read_file(e.path().string())).d;
      data::write_file((out_dir / ("depth_" + f)).string(),
                       data::encode_image_png8(gray3(d1)));
      if (!fs::exists(seq / "disp_future" / f) || !fs::exists(seq / "flow" / f)) {
        continue;
      }
      const Tensor d2 = data::decode_disparity_png16(
                            data::read_file((seq / "disp_future" / f).string())).d;
      const auto fl = data::decode_flow_png16(
          data::read_file((seq / "flow" / f).string()));
      const Tensor sf = sceneflow_from_maps(d1, d2, fl.flow, fl.valid, rig);
      const double norm = o.max_norm > 0.0 ? o.max_norm : percentile_norm(sf);
      data::write_file((out_dir / ("sceneflow_" + f)).string(),
                       data::encode_image_png8(sceneflow_to_rgb(sf, norm)));
    }
  }
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"multi-frame monocular scene flow toolkit"};
  app.require_subcommand(1);

  SynthOpts synth;
  auto* s_synth = app.add_subcommand("synth", "generate a synthetic dataset");
  s_synth->add_option("--out", synth.out, "output dataset directory")->required();
  s_synth->add_option("--scenes", synth.scenes, "number of scenes");
  s_synth->add_option("--frames", synth.frames, "frames per scene");
  s_synth->add_option("--height", synth.height, "image height");
  s_synth->add_option("--width", synth.width, "image width");
  s_synth->add_option("--objects", synth.objects, "moving objects per scene");
  s_synth->add_option("--seed", synth.seed, "scene and texture seed");

  ToolConfig cfg;
  TrainOpts train_o;
  auto* s_train = app.add_subcommand("train", "fit a model on a dataset");
  s_train->add_option("--data", train_o.data, "dataset directory")->required();
  s_train->add_option("--out", train_o.out, "run directory (checkpoints, logs)")
      ->required();
  s_train->add_option("--config", train_o.config, "JSON config file");
  s_train->add_option("--resume", train_o.resume, "checkpoint to resume from");

  EvalOpts eval_o;
  auto* s_eval = app.add_subcommand("eval", "score predictions against ground truth");
  s_eval->add_option("--data", eval_o.data, "dataset directory")->required();
  s_eval->add_option("--checkpoint", eval_o.checkpoint, "model checkpoint");
  s_eval->add_option("--pred", eval_o.pred, "prediction directory from infer");
  s_eval->add_flag("--gt-as-prediction", eval_o.gt_as_prediction,
                   "score the ground truth against itself");
  s_eval->add_option("--config", eval_o.config, "JSON config file");
  s_eval->add_option("--out", eval_o.out, "write metrics as key-value lines");
  s_eval->add_flag("--aepe", eval_o.aepe,
                   "also report temporal scene-flow consistency");

  InferOpts infer_o;
  auto* s_infer = app.add_subcommand("infer", "write per-frame predictions");
  s_infer->add_option("--data", infer_o.data, "dataset directory")->required();
  s_infer->add_option("--checkpoint", infer_o.checkpoint, "model checkpoint")
      ->required();
  s_infer->add_option("--out", infer_o.out, "prediction directory")->required();
  s_infer->add_option("--config", infer_o.config, "JSON config file");

  VisOpts vis_o;
  auto* s_vis = app.add_subcommand("visualize", "render stored predictions");
  s_vis->add_option("--pred", vis_o.pred, "prediction directory")->required();
  s_vis->add_option("--out", vis_o.out, "image output directory")->required();
  s_vis->add_option("--max-norm", vis_o.max_norm,
                    "color-coding saturation norm (0 = auto)");

  // Shared overrides; JSON config values load first, flags win.
  bool no_augment = false;
  for (CLI::App* sub : {s_train, s_eval, s_infer}) {
    sub->add_option("--seed", cfg.seed, "model and data seed");
    sub->add_option("--steps", cfg.train.total_steps, "training steps");
    sub->add_option("--width-mult", cfg.model.width_multiplier,
                    "channel width multiplier");
    sub->add_option("--seq-len", cfg.train.seq_len, "frames per window");
    sub->add_option("--lr", cfg.train.lr_initial, "initial learning rate");
    sub->add_option("--height", cfg.train.train_h, "training height");
    sub->add_option("--width", cfg.train.train_w, "training width");
    sub->add_option("--detach-epochs", cfg.train.detach_epochs,
                    "epochs with disparity detached from the scene-flow loss");
    sub->add_option("--checkpoint-every", cfg.train.checkpoint_every,
                    "periodic checkpoint interval (0 = off)");
    sub->add_flag("--two-frame", cfg.model.two_frame_mode,
                  "pairwise baseline mode (no recurrence)");
    sub->add_flag("--no-augment", no_augment, "train on raw windows");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  if (no_augment) cfg.train.augment = false;

  try {
    if (s_synth->parsed()) {
      cmd_synth(synth);
    } else if (s_train->parsed()) {
      cmd_train(train_o, resolve_config(s_train, cfg, train_o.config, {}));
    } else if (s_eval->parsed()) {
      cmd_eval(eval_o,
               resolve_config(s_eval, cfg, eval_o.config, eval_o.checkpoint));
    } else if (s_infer->parsed()) {
      cmd_infer(infer_o, resolve_config(s_infer, cfg, infer_o.config,
                                        infer_o.checkpoint));
    } else if (s_vis->parsed()) {
      cmd_visualize(vis_o);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

}  // namespace mmsf::cli
