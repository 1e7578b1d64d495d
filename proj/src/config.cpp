#include "toolpose/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "toolpose/error.hpp"

namespace toolpose {

namespace {

using nlohmann::json;

class Overlay {
 public:
  Overlay(const json& obj, std::string path, const std::string& source)
      : obj_(obj), path_(std::move(path)), source_(source) {
    if (!obj_.is_object()) fail("expected an object");
  }

  // Rejects keys that no accessor asked for.
  void done() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!used_.contains(key)) fail("unknown key '" + key + "'");
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(source_, 0, (path_.empty() ? std::string("config") : path_) + ": " + what);
  }

  const json* get(const std::string& key) {
    used_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& dst) {
    if (const json* v = get(key)) {
      if (!v->is_number()) fail("'" + key + "' must be a number");
      dst = v->get<double>();
    }
  }

  template <typename Int>
  void count(const std::string& key, Int& dst) {
    if (const json* v = get(key)) {
      if (!v->is_number_unsigned()) fail("'" + key + "' must be a non-negative integer");
      dst = v->get<Int>();
    }
  }

  template <typename Fn>
  void text(const std::string& key, Fn&& assign) {
    if (const json* v = get(key)) {
      if (!v->is_string()) fail("'" + key + "' must be a string");
      try {
        assign(v->get<std::string>());
      } catch (const InvalidInput& e) {
        fail(e.what());
      }
    }
  }

  Overlay child(const std::string& key, bool& present) {
    const json* v = get(key);
    present = v != nullptr;
    static const json empty = json::object();
    return Overlay(v ? *v : empty, path_.empty() ? key : path_ + "." + key, source_);
  }

 private:
  const json& obj_;
  std::string path_;
  const std::string& source_;
  std::set<std::string> used_;
};

json skeleton_json(const SkeletonSpec& s) {
  json edges = json::array();
  for (const auto& [a, b] : s.edges) edges.push_back({s.joint_names[a], s.joint_names[b]});
  return {{"joints", s.joint_names}, {"edges", edges}};
}

SkeletonSpec skeleton_from(const json& j, const std::string& source) {
  const auto fail = [&](const std::string& what) -> FormatError {
    return FormatError(source, 0, "skeleton: " + what);
  };
  if (!j.is_object() || !j.contains("joints") || !j["joints"].is_array()) throw fail("needs a 'joints' array");
  for (const auto& [key, v] : j.items()) {
    if (key != "joints" && key != "edges") throw fail("unknown key '" + key + "'");
  }
  SkeletonSpec s;
  for (const auto& n : j["joints"]) {
    if (!n.is_string()) throw fail("joint names must be strings");
    const auto name = n.get<std::string>();
    if (name.find_first_of(" \t\r\n#") != std::string::npos) {
      throw fail("joint name '" + name + "' contains whitespace or '#'");
    }
    s.joint_names.push_back(name);
  }
  if (j.contains("edges")) {
    if (!j["edges"].is_array()) throw fail("'edges' must be an array");
    for (const auto& e : j["edges"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
        throw fail("each edge must be a [from, to] pair of joint names");
      }
      const auto a = s.joint_index(e[0].get<std::string>());
      const auto b = s.joint_index(e[1].get<std::string>());
      if (!a || !b) throw fail("edge refers to an unknown joint");
      s.edges.emplace_back(*a, *b);
    }
  }
  try {
    s.validate();
  } catch (const InvalidInput& e) {
    throw fail(e.what());
  }
  return s;
}

json parse_text(std::string_view text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(source, e.byte > 0 ? e.byte - 1 : 0, "invalid JSON");
  }
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string(), 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void RunConfig::validate() const {
  if (frame.height < 2 || frame.width < 2) throw InvalidInput("frame size must be at least 2x2");
  skeleton.validate();
  render.validate();
  if (!(label_noise >= 0.0)) throw InvalidInput("label_noise must be >= 0");
  decode.validate();
  pseudo_label.validate();
  ema.validate();
  eval.validate();
  augment.validate();
  if (threads == 0) throw InvalidInput("threads must be >= 1");
}

RunConfig RunConfig::endovis() { return RunConfig{}; }

RunConfig RunConfig::rmit() {
  RunConfig cfg;
  cfg.frame = {288, 384};
  cfg.skeleton = SkeletonSpec::rmit();
  cfg.eval = EvalConfig::rmit();
  cfg.augment = AugmentConfig::rmit();
  cfg.pseudo_label.mode = InstrumentMode::single;
  return cfg;
}

RunConfig RunConfig::preset(std::string_view name) {
  if (name == "endovis") return endovis();
  if (name == "rmit") return rmit();
  throw InvalidInput("unknown preset '" + std::string(name) + "' (expected endovis or rmit)");
}

std::string config_to_json(const RunConfig& c, int indent) {
  const json j = {
      {"frame", {{"height", c.frame.height}, {"width", c.frame.width}}},
      {"skeleton", skeleton_json(c.skeleton)},
      {"render", {{"sigma", c.render.sigma}, {"amplitude", c.render.amplitude}}},
      {"label_noise", c.label_noise},
      {"decode",
       {{"smooth_sigma", c.decode.smooth_sigma},
        {"nms_threshold", c.decode.nms_threshold},
        {"nms_window", c.decode.nms_window},
        {"tv_boost_threshold", c.decode.tv_boost_threshold},
        {"line_samples", c.decode.line_samples},
        {"pair_score_threshold", c.decode.pair_score_threshold},
        {"high_boost_k", c.decode.high_boost_k},
        {"high_boost_sigma", c.decode.high_boost_sigma},
        {"min_pose_joints", c.decode.min_pose_joints}}},
      {"pseudo_label",
       {{"tv_threshold_multi", c.pseudo_label.tv_threshold_multi},
        {"tv_threshold_single", c.pseudo_label.tv_threshold_single},
        {"mode", std::string(to_string(c.pseudo_label.mode))}}},
      {"ema", {{"alpha", c.ema.alpha}}},
      {"eval",
       {{"pixel_threshold", c.eval.pixel_threshold},
        {"frame_scale", c.eval.frame_scale},
        {"matching", std::string(to_string(c.eval.matching))},
        {"min_score", c.eval.min_score}}},
      {"augment",
       {{"max_translation", c.augment.max_translation},
        {"max_rotation_deg", c.augment.max_rotation_deg}}},
      {"seed", c.seed},
      {"threads", c.threads}};
  return j.dump(indent);
}

RunConfig parse_config_json(std::string_view text, const std::string& source, RunConfig c) {
  const json root = parse_text(text, source);
  {
    Overlay top(root, "", source);
    bool present = false;
    {
      auto o = top.child("frame", present);
      o.count("height", c.frame.height);
      o.count("width", c.frame.width);
      o.done();
    }
    if (const json* sk = top.get("skeleton")) c.skeleton = skeleton_from(*sk, source);
    {
      auto o = top.child("render", present);
      o.number("sigma", c.render.sigma);
      o.number("amplitude", c.render.amplitude);
      o.done();
    }
    top.number("label_noise", c.label_noise);
    {
      auto o = top.child("decode", present);
      o.number("smooth_sigma", c.decode.smooth_sigma);
      o.number("nms_threshold", c.decode.nms_threshold);
      o.count("nms_window", c.decode.nms_window);
      o.number("tv_boost_threshold", c.decode.tv_boost_threshold);
      o.count("line_samples", c.decode.line_samples);
      o.number("pair_score_threshold", c.decode.pair_score_threshold);
      o.number("high_boost_k", c.decode.high_boost_k);
      o.number("high_boost_sigma", c.decode.high_boost_sigma);
      o.count("min_pose_joints", c.decode.min_pose_joints);
      o.done();
    }
    {
      auto o = top.child("pseudo_label", present);
      o.number("tv_threshold_multi", c.pseudo_label.tv_threshold_multi);
      o.number("tv_threshold_single", c.pseudo_label.tv_threshold_single);
      o.text("mode", [&](const std::string& s) { c.pseudo_label.mode = parse_instrument_mode(s); });
      o.done();
    }
    {
      auto o = top.child("ema", present);
      o.number("alpha", c.ema.alpha);
      o.done();
    }
    {
      auto o = top.child("eval", present);
      o.number("pixel_threshold", c.eval.pixel_threshold);
      o.number("frame_scale", c.eval.frame_scale);
      o.text("matching", [&](const std::string& s) { c.eval.matching = parse_matching_rule(s); });
      o.number("min_score", c.eval.min_score);
      o.done();
    }
    {
      auto o = top.child("augment", present);
      o.number("max_translation", c.augment.max_translation);
      o.number("max_rotation_deg", c.augment.max_rotation_deg);
      o.done();
    }
    top.count("seed", c.seed);
    top.count("threads", c.threads);
    top.done();
  }
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(source, 0, std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
  return parse_config_json(slurp(path), path.string(), std::move(base));
}

SkeletonSpec parse_skeleton_json(std::string_view text, const std::string& source) {
  return skeleton_from(parse_text(text, source), source);
}

SkeletonSpec load_skeleton_file(const std::filesystem::path& path) {
  return parse_skeleton_json(slurp(path), path.string());
}

std::string skeleton_to_json(const SkeletonSpec& skeleton) { return skeleton_json(skeleton).dump(2); }

}  // namespace toolpose
