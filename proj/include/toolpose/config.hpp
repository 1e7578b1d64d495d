#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "toolpose/augment.hpp"
#include "toolpose/eval.hpp"
#include "toolpose/heatmap.hpp"
#include "toolpose/pose_decode.hpp"
#include "toolpose/ssl.hpp"

namespace toolpose {

// Every module configuration in one place. Files are JSON objects mirroring
// these fields; keys that are present override the base, unknown keys fail.
struct RunConfig {
  FrameSize frame{256, 320};
  SkeletonSpec skeleton = SkeletonSpec::endovis();
  RenderConfig render;
  double label_noise = kDefaultLabelNoise;
  DecodeConfig decode;
  PseudoLabelConfig pseudo_label;
  EmaConfig ema;
  EvalConfig eval;
  AugmentConfig augment;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const;

  // 256x320 frames, five-joint skeleton, 20 px evaluation, 20 degree rotation cap.
  static RunConfig endovis();
  // 288x384 frames, four-joint skeleton, 15 px evaluation, 10 degree cap,
  // single-instrument gating.
  static RunConfig rmit();
  static RunConfig preset(std::string_view name);
};

std::string config_to_json(const RunConfig& cfg, int indent = 2);
RunConfig parse_config_json(std::string_view text, const std::string& source, RunConfig base);
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base);

// {"joints": [names...], "edges": [[from, to], ...]} with edges named by joint.
SkeletonSpec parse_skeleton_json(std::string_view text, const std::string& source);
SkeletonSpec load_skeleton_file(const std::filesystem::path& path);
std::string skeleton_to_json(const SkeletonSpec& skeleton);

}  // namespace toolpose
