#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "toolpose/eval.hpp"
#include "toolpose/heatmap.hpp"
#include "toolpose/pose_decode.hpp"

namespace toolpose {

// Annotation text: one joint per line, "<frame> <instrument> <joint> <x> <y>",
// whitespace separated. A line holding only "<frame>" declares a frame with no
// instruments. '#' starts a comment; blank lines are ignored. Frames keep
// their first-appearance order, instruments are ordered by index.
std::vector<FrameAnnotations> read_annotations(std::istream& in, const std::string& source);
std::vector<FrameAnnotations> read_annotation_file(const std::filesystem::path& path);
void write_annotations(std::ostream& out, const FrameAnnotations& frame);

struct PoseRecord {
  std::string frame_id;
  std::vector<InstrumentPose> poses;
  ConfidenceReport confidence;
};

// One JSON object per line:
// {"frame": id, "instruments": [{"joints": {name: {"x","y","score"}},
//   "edges": [{"index","name","score"}]}],
//  "confidence": {"tv_total", "per_channel": [...], "boosted"}}
std::string pose_record_json(const PoseRecord& record, const SkeletonSpec& skeleton);
std::vector<PoseRecord> read_pose_records(std::istream& in, const std::string& source);
std::vector<PoseRecord> read_pose_record_file(const std::filesystem::path& path);

}  // namespace toolpose
