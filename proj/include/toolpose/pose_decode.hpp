#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "toolpose/assignment.hpp"
#include "toolpose/geometry.hpp"
#include "toolpose/heatmap.hpp"

namespace toolpose {

struct DecodeConfig {
  double smooth_sigma = 3.0;
  double nms_threshold = 0.3;
  std::size_t nms_window = 5;
  // Edge channels are sharpened when the raw maps' TV total falls below this.
  double tv_boost_threshold = 1000.0;
  std::size_t line_samples = 10;
  double pair_score_threshold = 0.5;
  double high_boost_k = 1.0;
  double high_boost_sigma = kDefaultHighBoostSigma;
  // Connected groups with fewer joints are discarded (skeletons with edges only).
  std::size_t min_pose_joints = 2;

  void validate() const;
};

struct JointCandidate {
  std::size_t channel = 0;
  Point position;
  double score = 0.0;

  friend bool operator==(const JointCandidate&, const JointCandidate&) = default;
};

struct PoseJoint {
  Point position;
  double score = 0.0;
};

struct PoseEdge {
  std::size_t edge = 0;
  double score = 0.0;
};

struct InstrumentPose {
  std::map<std::string, PoseJoint> joints;
  std::vector<PoseEdge> edges;

  double score_sum() const;
};

struct PairMatch {
  std::size_t a = 0;
  std::size_t b = 0;
  double score = 0.0;

  friend bool operator==(const PairMatch&, const PairMatch&) = default;
};

struct DecodeResult {
  std::vector<InstrumentPose> poses;
  ConfidenceReport confidence;
};

// Thresholded strict local maxima of the first `channel_count` channels
// (all channels when omitted). Equal values inside a window go to the pixel
// earliest in row-major order. Sorted by descending score.
std::vector<JointCandidate> nms_candidates(const Heatmap& map, const DecodeConfig& cfg);
std::vector<JointCandidate> nms_candidates(const Heatmap& map, const DecodeConfig& cfg,
                                           std::size_t channel_count);

// Bilinear sample of one channel; coordinates are clamped to the frame.
double sample_bilinear(const Heatmap& map, std::size_t channel, Point p);

// Mean of `samples` bilinear samples spaced uniformly on p -> q, endpoints included.
double line_integral_score(Point p, Point q, const Heatmap& map, std::size_t channel,
                           std::size_t samples);

// Maximum-total-score one-to-one matching restricted to entries >= threshold.
// Result is sorted by row index.
std::vector<PairMatch> max_score_matching(const Matrix& scores, double threshold);

std::vector<PairMatch> match_pairs(std::span<const JointCandidate> cands_a,
                                   std::span<const JointCandidate> cands_b, const Heatmap& maps,
                                   std::size_t edge_channel, const DecodeConfig& cfg);

DecodeResult parse_instruments(const Heatmap& maps, const SkeletonSpec& skeleton,
                               const DecodeConfig& cfg = {});

// Per channel: smooth, then take the row-major-first global maximum.
InstrumentPose decode_single(const Heatmap& maps, double smooth_sigma);

}  // namespace toolpose
