#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "toolpose/geometry.hpp"

namespace toolpose {

// Dense H x W x C grid, row-major with the channel index varying fastest.
class Heatmap {
 public:
  Heatmap() = default;
  // Zero-filled map. Empty `names` yields "c0", "c1", ...
  Heatmap(std::size_t height, std::size_t width, std::size_t channels,
          std::vector<std::string> names = {});
  Heatmap(std::size_t height, std::size_t width, std::size_t channels,
          std::vector<double> data, std::vector<std::string> names = {});

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t pixels() const noexcept { return height_ * width_; }

  const std::vector<std::string>& channel_names() const noexcept { return names_; }
  std::optional<std::size_t> find_channel(const std::string& name) const;

  double& at(std::size_t row, std::size_t col, std::size_t ch) {
    return data_[(row * width_ + col) * channels_ + ch];
  }
  double at(std::size_t row, std::size_t col, std::size_t ch) const {
    return data_[(row * width_ + col) * channels_ + ch];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  // Copies one channel out as a contiguous H*W plane, and back.
  std::vector<double> plane(std::size_t ch) const;
  void set_plane(std::size_t ch, std::span<const double> values);

  friend bool operator==(const Heatmap&, const Heatmap&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> data_;
  std::vector<std::string> names_;
};

struct RenderConfig {
  double sigma = 20.0;
  double amplitude = 1.0;

  void validate() const;
};

// Instrument topology. Target maps list the joint channels first, then one
// channel per edge named "<a>-<b>".
struct SkeletonSpec {
  std::vector<std::string> joint_names;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  void validate() const;
  std::size_t channel_count() const { return joint_names.size() + edges.size(); }
  std::optional<std::size_t> joint_index(const std::string& name) const;
  std::string edge_name(std::size_t e) const;
  std::vector<std::string> channel_names() const;

  // Left clasper, right clasper, head, shaft, end. Edges: both claspers to the
  // head, head to shaft, shaft to end.
  static SkeletonSpec endovis();
  // Left tip, right tip, shaft, end.
  static SkeletonSpec rmit();
};

// Named joint positions for one instrument; absent joints are not in the map.
struct InstrumentAnnotation {
  std::map<std::string, Point> joints;

  friend bool operator==(const InstrumentAnnotation&, const InstrumentAnnotation&) = default;
};

struct ConfidenceReport {
  std::vector<double> per_channel;
  double total = 0.0;
  // Set by the multi-instrument decoder when edge channels were sharpened.
  bool boosted = false;
};

struct FrameSize {
  std::size_t height = 0;
  std::size_t width = 0;
};

Heatmap render_targets(std::span<const InstrumentAnnotation> annotations,
                       const SkeletonSpec& skeleton, FrameSize frame,
                       const RenderConfig& cfg = {});

// Anisotropic total variation: absolute forward differences along rows and
// columns, summed per channel, without wraparound or padding.
ConfidenceReport total_variation(const Heatmap& map);

// Separable Gaussian, radius ceil(3 sigma), border replication. The channel
// list restricts which channels are filtered; others are copied through.
Heatmap gaussian_smooth(const Heatmap& map, double sigma);
Heatmap gaussian_smooth(const Heatmap& map, double sigma, std::span<const std::size_t> channels);

inline constexpr double kDefaultHighBoostSigma = 2.0;

// clamp(map + k (map - smooth(map)), 0, 1).
Heatmap high_boost(const Heatmap& map, double k, double sigma = kDefaultHighBoostSigma);
Heatmap high_boost(const Heatmap& map, double k, double sigma, std::span<const std::size_t> channels);

inline constexpr double kDefaultLabelNoise = 0.01;

Heatmap add_label_noise(const Heatmap& map, double amplitude, std::uint64_t seed);

// Normalised 1D kernel used by gaussian_smooth (length 2 * ceil(3 sigma) + 1).
std::vector<double> gaussian_kernel(double sigma);

}  // namespace toolpose
