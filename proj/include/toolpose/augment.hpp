#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toolpose/geometry.hpp"
#include "toolpose/heatmap.hpp"
#include "toolpose/image.hpp"

namespace toolpose {

struct Frame {
  Image image;
  std::vector<InstrumentAnnotation> annotations;
};

struct AugmentConfig {
  double max_translation = 5.0;
  double max_rotation_deg = 20.0;

  void validate() const;
  // Rotation capped at 10 degrees.
  static AugmentConfig rmit();
};

enum class Resampling { nearest, bilinear };

// Swaps "left" and "right" (any capitalisation of the first letter or all caps).
std::string mirror_joint_name(std::string_view name);

// x -> W - 1 - x; left/right joints (and left/right heatmap channels) swap.
Frame flip_h(const Frame& f);
Heatmap flip_h(const Heatmap& map);

// Integer shift with zero fill; joints pushed outside the frame are dropped.
Frame translate(const Frame& f, int dx, int dy, const AugmentConfig& cfg = {});
Heatmap translate(const Heatmap& map, int dx, int dy);

// Counter-clockwise (as displayed) rotation about the frame centre with zero
// fill. Heatmaps always use nearest-neighbour sampling.
Frame rotate(const Frame& f, double degrees, const AugmentConfig& cfg = {},
             Resampling resampling = Resampling::nearest);
Heatmap rotate(const Heatmap& map, double degrees);
Point rotate_point(Point p, double degrees, std::size_t height, std::size_t width);

// Column layout of a random swap: columns [crop_left, split_a) of frame a,
// then `pad` zero columns, then columns [split_b, W - crop_right) of frame b.
struct SwapPlan {
  std::size_t width = 0;
  std::size_t split_a = 0;
  std::size_t split_b = 0;
  std::size_t pad = 0;
  std::size_t crop_left = 0;
  std::size_t crop_right = 0;

  double offset_a() const { return -static_cast<double>(crop_left); }
  double offset_b() const {
    return static_cast<double>(split_a - crop_left + pad) - static_cast<double>(split_b);
  }
};

bool is_clasper_joint(std::string_view name);

SwapPlan plan_swap(const Frame& a, const Frame& b, std::uint64_t seed);
SwapPlan plan_swap(std::size_t width, double clasper_x_a, double clasper_x_b);
Image apply_swap(const SwapPlan& plan, const Image& a, const Image& b);
Heatmap apply_swap(const SwapPlan& plan, const Heatmap& a, const Heatmap& b);
// Joints of a with x <= split_a and joints of b with x >= split_b, shifted with
// their part; joints leaving the frame are dropped, as are emptied instruments.
std::vector<InstrumentAnnotation> apply_swap(const SwapPlan& plan,
                                             std::span<const InstrumentAnnotation> a,
                                             std::span<const InstrumentAnnotation> b,
                                             std::size_t height);
Frame random_swap(const Frame& a, const Frame& b, std::uint64_t seed);

struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  double alpha = 1.0;
};

inline constexpr double kDefaultBBoxAlpha = 1.0;

// Box around the joints grown by alpha * max(x extent, y extent) on every side.
BBox bbox_from_joints(std::span<const Point> joints, double alpha = kDefaultBBoxAlpha);

// Annotation-independent photometric stage. A zero or false parameter
// disables its operation.
struct PixelOpsConfig {
  double brightness = 0.2;          // max additive shift as a fraction of 255
  double contrast = 0.2;            // factor drawn from [1 - c, 1 + c]
  double saturation = 0.2;          // factor drawn from [1 - s, 1 + s]
  double equalize_probability = 0.1;
  double blur_probability = 0.2;    // 3x3 box blur
  double gaussian_noise_std = 4.0;  // in intensity levels
  double salt_probability = 0.002;
  double pepper_probability = 0.002;
  double speckle_std = 0.05;        // multiplicative noise
  double erase_probability = 0.2;   // one random rectangle set to zero
  double erase_max_fraction = 0.2;  // max rectangle side relative to the frame

  void validate() const;
};

Image apply_pixel_ops(const Image& img, const PixelOpsConfig& cfg, std::uint64_t seed);

}  // namespace toolpose
