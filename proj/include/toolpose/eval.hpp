#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toolpose/geometry.hpp"
#include "toolpose/heatmap.hpp"
#include "toolpose/pose_decode.hpp"

namespace toolpose {

enum class MatchingRule { optimal, greedy };

std::string_view to_string(MatchingRule rule);
MatchingRule parse_matching_rule(std::string_view s);

struct EvalConfig {
  double pixel_threshold = 20.0;
  // Multiplies prediction and ground-truth coordinates before matching.
  double frame_scale = 1.0;
  MatchingRule matching = MatchingRule::optimal;
  // Predicted joints scoring below this are ignored; 0 keeps every output.
  double min_score = 0.0;

  void validate() const;
  // 15 px detection threshold.
  static EvalConfig rmit();
};

struct MatchedPair {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double distance = 0.0;
};

struct DetectionMatch {
  std::vector<MatchedPair> pairs;  // sorted by pred index
  std::vector<std::size_t> unmatched_preds;
  std::vector<std::size_t> unmatched_gts;

  double total_distance() const;
};

// One joint class in one frame. Only pairs within pixel_threshold (inclusive)
// may match. The optimal rule maximises the number of matches, then minimises
// their total distance; greedy takes the closest remaining pair first.
DetectionMatch match_detections(std::span<const Point> preds, std::span<const Point> gts,
                                const EvalConfig& cfg);

struct JointMetrics {
  std::string joint;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> rmse;  // absent without true positives
};

struct MetricsTable {
  std::vector<JointMetrics> joints;
  // Unweighted means over joint classes; RMSE over classes that define it.
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> rmse;
};

struct JointMatch {
  std::string joint;
  DetectionMatch match;
};

// Associative accumulation of per-frame matches into per-joint counts.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(std::vector<std::string> joint_order = {});

  void add(const std::string& joint, const DetectionMatch& match);
  void merge(const MetricsAccumulator& other);
  MetricsTable finish() const;

 private:
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
    double squared_error = 0.0;
  };
  std::vector<std::string> order_;
  std::map<std::string, Counts> counts_;
};

MetricsTable compute_metrics(std::span<const JointMatch> matches,
                             std::vector<std::string> joint_order = {});

struct FramePoses {
  std::string frame_id;
  std::vector<InstrumentPose> poses;
};

struct FrameAnnotations {
  std::string frame_id;
  std::vector<InstrumentAnnotation> instruments;
};

// Frames without predictions count their ground truth as missed; predicted
// frames without ground truth count as false positives.
MetricsTable evaluate_frames(std::span<const FramePoses> predictions,
                             std::span<const FrameAnnotations> truth,
                             std::vector<std::string> joint_order, const EvalConfig& cfg);

void write_metrics_table(std::ostream& out, const MetricsTable& table);
// One "key=value ..." line per joint class plus one for the averages.
void write_metrics_records(std::ostream& out, const MetricsTable& table);

}  // namespace toolpose
