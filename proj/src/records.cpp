#include "toolpose/records.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "toolpose/error.hpp"

namespace toolpose {

namespace {

using nlohmann::json;

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

bool parse_double(const std::string& s, double& v) {
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc{} && ptr == end && std::isfinite(v);
}

bool parse_index(const std::string& s, std::size_t& v) {
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc{} && ptr == end;
}

double number_field(const json& obj, const char* key, const std::string& source, std::uint64_t offset) {
  if (!obj.is_object() || !obj.contains(key) || !obj[key].is_number()) {
    throw FormatError(source, offset, std::string("missing numeric field '") + key + "'");
  }
  return obj[key].get<double>();
}

}  // namespace

std::vector<FrameAnnotations> read_annotations(std::istream& in, const std::string& source) {
  struct Pending {
    std::string id;
    std::map<std::size_t, InstrumentAnnotation> instruments;
  };
  std::vector<Pending> frames;
  std::unordered_map<std::string, std::size_t> index_of;
  std::string line;
  std::uint64_t offset = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    const std::uint64_t line_start = offset;
    offset += line.size() + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    const auto fail = [&](const std::string& what) -> FormatError {
      return FormatError(source, line_start, "line " + std::to_string(line_no) + ": " + what);
    };
    if (tok.size() != 1 && tok.size() != 5) {
      throw fail("expected '<frame> <instrument> <joint> <x> <y>' or '<frame>'");
    }
    auto [it, fresh] = index_of.try_emplace(tok[0], frames.size());
    if (fresh) frames.push_back({tok[0], {}});
    if (tok.size() == 1) continue;
    std::size_t inst = 0;
    Point p;
    if (!parse_index(tok[1], inst)) throw fail("instrument index '" + tok[1] + "' is not a non-negative integer");
    if (!parse_double(tok[3], p.x) || !parse_double(tok[4], p.y)) throw fail("joint coordinates must be finite numbers");
    auto& joints = frames[it->second].instruments[inst].joints;
    if (!joints.emplace(tok[2], p).second) throw fail("duplicate joint '" + tok[2] + "' for instrument " + tok[1]);
  }
  std::vector<FrameAnnotations> out;
  out.reserve(frames.size());
  for (auto& f : frames) {
    FrameAnnotations fa{f.id, {}};
    for (auto& [idx, inst] : f.instruments) fa.instruments.push_back(std::move(inst));
    out.push_back(std::move(fa));
  }
  return out;
}

std::vector<FrameAnnotations> read_annotation_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string(), 0, "cannot open file");
  return read_annotations(in, path.string());
}

void write_annotations(std::ostream& out, const FrameAnnotations& frame) {
  if (frame.instruments.empty()) {
    out << frame.frame_id << '\n';
    return;
  }
  for (std::size_t i = 0; i < frame.instruments.size(); ++i) {
    for (const auto& [name, p] : frame.instruments[i].joints) {
      out << frame.frame_id << ' ' << i << ' ' << name << ' ' << json(p.x).dump() << ' '
          << json(p.y).dump() << '\n';
    }
  }
}

std::string pose_record_json(const PoseRecord& record, const SkeletonSpec& skeleton) {
  json instruments = json::array();
  for (const auto& pose : record.poses) {
    json joints = json::object();
    for (const auto& [name, j] : pose.joints) {
      joints[name] = {{"x", j.position.x}, {"y", j.position.y}, {"score", j.score}};
    }
    json edges = json::array();
    for (const auto& e : pose.edges) {
      json entry = {{"index", e.edge}, {"score", e.score}};
      if (e.edge < skeleton.edges.size()) entry["name"] = skeleton.edge_name(e.edge);
      edges.push_back(std::move(entry));
    }
    instruments.push_back({{"joints", std::move(joints)}, {"edges", std::move(edges)}});
  }
  json rec = {{"frame", record.frame_id},
              {"instruments", std::move(instruments)},
              {"confidence",
               {{"tv_total", record.confidence.total},
                {"per_channel", record.confidence.per_channel},
                {"boosted", record.confidence.boosted}}}};
  return rec.dump();
}

std::vector<PoseRecord> read_pose_records(std::istream& in, const std::string& source) {
  std::vector<PoseRecord> out;
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(in, line)) {
    const std::uint64_t start = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(source, start + (e.byte > 0 ? e.byte - 1 : 0), "invalid JSON in pose record");
    }
    if (!rec.is_object() || !rec.contains("frame") || !rec["frame"].is_string()) {
      throw FormatError(source, start, "pose record needs a string 'frame'");
    }
    PoseRecord r;
    r.frame_id = rec["frame"].get<std::string>();
    if (!rec.contains("instruments") || !rec["instruments"].is_array()) {
      throw FormatError(source, start, "pose record needs an 'instruments' array");
    }
    for (const auto& inst : rec["instruments"]) {
      if (!inst.is_object() || !inst.contains("joints") || !inst["joints"].is_object()) {
        throw FormatError(source, start, "instrument needs a 'joints' object");
      }
      InstrumentPose pose;
      for (const auto& [name, j] : inst["joints"].items()) {
        pose.joints[name] = PoseJoint{
            {number_field(j, "x", source, start), number_field(j, "y", source, start)},
            number_field(j, "score", source, start)};
      }
      if (inst.contains("edges")) {
        if (!inst["edges"].is_array()) throw FormatError(source, start, "'edges' must be an array");
        for (const auto& e : inst["edges"]) {
          if (!e.is_object() || !e.contains("index") || !e["index"].is_number_unsigned()) {
            throw FormatError(source, start, "edge needs a non-negative 'index'");
          }
          pose.edges.push_back({e["index"].get<std::size_t>(), number_field(e, "score", source, start)});
        }
      }
      r.poses.push_back(std::move(pose));
    }
    if (rec.contains("confidence")) {
      const auto& c = rec["confidence"];
      r.confidence.total = number_field(c, "tv_total", source, start);
      if (c.contains("per_channel")) {
        if (!c["per_channel"].is_array()) throw FormatError(source, start, "'per_channel' must be an array");
        for (const auto& v : c["per_channel"]) {
          if (!v.is_number()) throw FormatError(source, start, "'per_channel' must hold numbers");
          r.confidence.per_channel.push_back(v.get<double>());
        }
      }
      if (c.contains("boosted")) {
        if (!c["boosted"].is_boolean()) throw FormatError(source, start, "'boosted' must be a boolean");
        r.confidence.boosted = c["boosted"].get<bool>();
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PoseRecord> read_pose_record_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string(), 0, "cannot open file");
  return read_pose_records(in, path.string());
}

}  // namespace toolpose
