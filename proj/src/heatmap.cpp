#include "toolpose/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "toolpose/error.hpp"
#include "toolpose/rng.hpp"

namespace toolpose {

namespace {

std::vector<std::string> default_names(std::size_t channels) {
  std::vector<std::string> names;
  names.reserve(channels);
  for (std::size_t c = 0; c < channels; ++c) names.push_back("c" + std::to_string(c));
  return names;
}

void check_dims(std::size_t h, std::size_t w, std::size_t c) {
  if (h < 2 || w < 2 || c < 1) {
    throw InvalidInput("heatmap needs H >= 2, W >= 2, C >= 1 (got " + std::to_string(h) + "x" +
                       std::to_string(w) + "x" + std::to_string(c) + ")");
  }
}

std::vector<std::size_t> all_channels(const Heatmap& map) {
  std::vector<std::size_t> chs(map.channels());
  for (std::size_t c = 0; c < chs.size(); ++c) chs[c] = c;
  return chs;
}

// Horizontal then vertical pass over one H*W plane with clamped indices.
void smooth_plane(std::vector<double>& plane, std::size_t h, std::size_t w,
                  const std::vector<double>& kernel, std::vector<double>& scratch) {
  const auto r = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const auto sw = static_cast<std::ptrdiff_t>(w);
  const auto sh = static_cast<std::ptrdiff_t>(h);
  scratch.resize(plane.size());
  for (std::ptrdiff_t y = 0; y < sh; ++y) {
    const double* row = plane.data() + y * sw;
    double* out = scratch.data() + y * sw;
    for (std::ptrdiff_t x = 0; x < sw; ++x) {
      double acc = 0.0;
      if (x >= r && x + r < sw) {
        const double* src = row + x - r;
        for (std::size_t k = 0; k < kernel.size(); ++k) acc += kernel[k] * src[k];
      } else {
        for (std::ptrdiff_t k = -r; k <= r; ++k) {
          const std::ptrdiff_t xx = std::clamp<std::ptrdiff_t>(x + k, 0, sw - 1);
          acc += kernel[static_cast<std::size_t>(k + r)] * row[xx];
        }
      }
      out[x] = acc;
    }
  }
  std::fill(plane.begin(), plane.end(), 0.0);
  for (std::ptrdiff_t k = -r; k <= r; ++k) {
    const double wk = kernel[static_cast<std::size_t>(k + r)];
    for (std::ptrdiff_t y = 0; y < sh; ++y) {
      const std::ptrdiff_t yy = std::clamp<std::ptrdiff_t>(y + k, 0, sh - 1);
      const double* src = scratch.data() + yy * sw;
      double* dst = plane.data() + y * sw;
      for (std::ptrdiff_t x = 0; x < sw; ++x) dst[x] += wk * src[x];
    }
  }
}

}  // namespace

Heatmap::Heatmap(std::size_t height, std::size_t width, std::size_t channels,
                 std::vector<std::string> names)
    : Heatmap(height, width, channels, std::vector<double>(height * width * channels, 0.0),
              std::move(names)) {}

Heatmap::Heatmap(std::size_t height, std::size_t width, std::size_t channels,
                 std::vector<double> data, std::vector<std::string> names)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)),
      names_(std::move(names)) {
  check_dims(height, width, channels);
  if (data_.size() != height * width * channels) {
    throw InvalidInput("heatmap data length " + std::to_string(data_.size()) +
                       " does not match H*W*C = " + std::to_string(height * width * channels));
  }
  if (names_.empty()) names_ = default_names(channels);
  if (names_.size() != channels) throw InvalidInput("heatmap needs one name per channel");
}

std::optional<std::size_t> Heatmap::find_channel(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::vector<double> Heatmap::plane(std::size_t ch) const {
  std::vector<double> out(pixels());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = data_[i * channels_ + ch];
  return out;
}

void Heatmap::set_plane(std::size_t ch, std::span<const double> values) {
  if (values.size() != pixels()) throw InvalidInput("plane size does not match heatmap");
  for (std::size_t i = 0; i < values.size(); ++i) data_[i * channels_ + ch] = values[i];
}

void RenderConfig::validate() const {
  if (!(sigma > 0.0)) throw InvalidInput("render sigma must be > 0");
  if (!(amplitude > 0.0)) throw InvalidInput("render amplitude must be > 0");
}

void SkeletonSpec::validate() const {
  if (joint_names.empty()) throw InvalidInput("skeleton has no joints");
  std::set<std::string> seen_names;
  for (const auto& n : joint_names) {
    if (n.empty()) throw InvalidInput("skeleton joint names must be non-empty");
    if (!seen_names.insert(n).second) throw InvalidInput("duplicate joint name '" + n + "'");
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [a, b] : edges) {
    if (a >= joint_names.size() || b >= joint_names.size()) {
      throw InvalidInput("skeleton edge index out of range");
    }
    if (a == b) throw InvalidInput("skeleton self-edge on '" + joint_names[a] + "'");
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) {
      throw InvalidInput("duplicate skeleton edge " + joint_names[a] + "-" + joint_names[b]);
    }
  }
}

std::optional<std::size_t> SkeletonSpec::joint_index(const std::string& name) const {
  const auto it = std::find(joint_names.begin(), joint_names.end(), name);
  if (it == joint_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - joint_names.begin());
}

std::string SkeletonSpec::edge_name(std::size_t e) const {
  return joint_names.at(edges.at(e).first) + "-" + joint_names.at(edges.at(e).second);
}

std::vector<std::string> SkeletonSpec::channel_names() const {
  std::vector<std::string> names = joint_names;
  for (std::size_t e = 0; e < edges.size(); ++e) names.push_back(edge_name(e));
  return names;
}

SkeletonSpec SkeletonSpec::endovis() {
  return SkeletonSpec{{"left_clasper", "right_clasper", "head", "shaft", "end"},
                      {{0, 2}, {1, 2}, {2, 3}, {3, 4}}};
}

SkeletonSpec SkeletonSpec::rmit() {
  return SkeletonSpec{{"left_tip", "right_tip", "shaft", "end"}, {{0, 2}, {1, 2}, {2, 3}}};
}

Heatmap render_targets(std::span<const InstrumentAnnotation> annotations,
                       const SkeletonSpec& skeleton, FrameSize frame, const RenderConfig& cfg) {
  skeleton.validate();
  cfg.validate();
  Heatmap out(frame.height, frame.width, skeleton.channel_count(), skeleton.channel_names());
  const auto w = static_cast<double>(frame.width);
  const auto h = static_cast<double>(frame.height);

  for (const auto& inst : annotations) {
    for (const auto& [name, p] : inst.joints) {
      if (!skeleton.joint_index(name)) throw InvalidInput("unknown joint name '" + name + "'");
      if (!(p.x >= 0.0 && p.x < w && p.y >= 0.0 && p.y < h)) {
        throw InvalidInput("joint '" + name + "' at (" + std::to_string(p.x) + ", " +
                           std::to_string(p.y) + ") lies outside the frame");
      }
    }
  }

  const double inv2s2 = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
  const std::size_t nj = skeleton.joint_names.size();
  for (const auto& inst : annotations) {
    for (std::size_t j = 0; j < nj; ++j) {
      const auto it = inst.joints.find(skeleton.joint_names[j]);
      if (it == inst.joints.end()) continue;
      const Point c = it->second;
      for (std::size_t y = 0; y < frame.height; ++y) {
        const double dy = static_cast<double>(y) - c.y;
        for (std::size_t x = 0; x < frame.width; ++x) {
          const double dx = static_cast<double>(x) - c.x;
          double& v = out.at(y, x, j);
          v = std::max(v, cfg.amplitude * std::exp(-(dx * dx + dy * dy) * inv2s2));
        }
      }
    }
    for (std::size_t e = 0; e < skeleton.edges.size(); ++e) {
      const auto ia = inst.joints.find(skeleton.joint_names[skeleton.edges[e].first]);
      const auto ib = inst.joints.find(skeleton.joint_names[skeleton.edges[e].second]);
      if (ia == inst.joints.end() || ib == inst.joints.end()) continue;
      const std::size_t ch = nj + e;
      for (std::size_t y = 0; y < frame.height; ++y) {
        for (std::size_t x = 0; x < frame.width; ++x) {
          const Point p{static_cast<double>(x), static_cast<double>(y)};
          const double d2 = squared_distance_to_segment(p, ia->second, ib->second);
          double& v = out.at(y, x, ch);
          v = std::max(v, cfg.amplitude * std::exp(-d2 * inv2s2));
        }
      }
    }
  }
  return out;
}

ConfidenceReport total_variation(const Heatmap& map) {
  const std::size_t h = map.height(), w = map.width(), nc = map.channels();
  const auto d = map.data();
  ConfidenceReport report;
  report.per_channel.assign(nc, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    const double* row = d.data() + y * w * nc;
    const double* below = y + 1 < h ? row + w * nc : nullptr;
    for (std::size_t x = 0; x < w; ++x) {
      const double* px = row + x * nc;
      for (std::size_t c = 0; c < nc; ++c) {
        double acc = 0.0;
        if (below) acc += std::abs(below[x * nc + c] - px[c]);
        if (x + 1 < w) acc += std::abs(px[nc + c] - px[c]);
        report.per_channel[c] += acc;
      }
    }
  }
  for (double v : report.per_channel) report.total += v;
  return report;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw InvalidInput("gaussian sigma must be > 0");
  const auto r = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -r; i <= r; ++i) {
    const double v = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + r)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

Heatmap gaussian_smooth(const Heatmap& map, double sigma) {
  const auto chs = all_channels(map);
  return gaussian_smooth(map, sigma, chs);
}

Heatmap gaussian_smooth(const Heatmap& map, double sigma, std::span<const std::size_t> channels) {
  const auto kernel = gaussian_kernel(sigma);
  Heatmap out = map;
  std::vector<double> scratch;
  for (std::size_t c : channels) {
    if (c >= map.channels()) throw InvalidInput("channel index out of range");
    auto plane = map.plane(c);
    smooth_plane(plane, map.height(), map.width(), kernel, scratch);
    out.set_plane(c, plane);
  }
  return out;
}

Heatmap high_boost(const Heatmap& map, double k, double sigma) {
  const auto chs = all_channels(map);
  return high_boost(map, k, sigma, chs);
}

Heatmap high_boost(const Heatmap& map, double k, double sigma,
                   std::span<const std::size_t> channels) {
  if (!(k >= 0.0)) throw InvalidInput("high-boost gain must be >= 0");
  const Heatmap blurred = gaussian_smooth(map, sigma, channels);
  Heatmap out = map;
  const std::size_t nc = map.channels();
  const auto src = map.data();
  const auto low = blurred.data();
  auto dst = out.data();
  for (std::size_t c : channels) {
    for (std::size_t i = 0; i < map.pixels(); ++i) {
      const std::size_t idx = i * nc + c;
      dst[idx] = std::clamp(src[idx] + k * (src[idx] - low[idx]), 0.0, 1.0);
    }
  }
  return out;
}

Heatmap add_label_noise(const Heatmap& map, double amplitude, std::uint64_t seed) {
  if (!(amplitude >= 0.0)) throw InvalidInput("label noise amplitude must be >= 0");
  Heatmap out = map;
  if (amplitude == 0.0) return out;
  Rng rng(seed);
  for (double& v : out.data()) v += uniform(rng, -amplitude, amplitude);
  return out;
}

}  // namespace toolpose
