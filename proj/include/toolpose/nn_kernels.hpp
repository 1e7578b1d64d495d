#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "toolpose/heatmap.hpp"

namespace toolpose {

// N x H x W x C tensor, row-major (channel fastest).
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(std::size_t n, std::size_t h, std::size_t w, std::size_t c, double fill = 0.0);
  Tensor4(std::size_t n, std::size_t h, std::size_t w, std::size_t c, std::vector<double> data);
  // One-sample tensor with the heatmap's layout.
  static Tensor4 from_heatmap(const Heatmap& map);

  std::size_t n() const noexcept { return n_; }
  std::size_t h() const noexcept { return h_; }
  std::size_t w() const noexcept { return w_; }
  std::size_t c() const noexcept { return c_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t n, std::size_t y, std::size_t x, std::size_t ch) {
    return data_[((n * h_ + y) * w_ + x) * c_ + ch];
  }
  double operator()(std::size_t n, std::size_t y, std::size_t x, std::size_t ch) const {
    return data_[((n * h_ + y) * w_ + x) * c_ + ch];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const Tensor4& o) const {
    return n_ == o.n_ && h_ == o.h_ && w_ == o.w_ && c_ == o.c_;
  }

 private:
  std::size_t n_ = 0, h_ = 0, w_ = 0, c_ = 0;
  std::vector<double> data_;
};

double sigmoid(double x);

// out[n,h,w,c] = features[n,h,w,c] * sigmoid(pre_attention[n,h,w,0]).
Tensor4 attention_gate_forward(const Tensor4& features, const Tensor4& pre_attention);

struct AttentionGrads {
  Tensor4 features;
  Tensor4 pre_attention;
};

AttentionGrads attention_gate_backward(const Tensor4& features, const Tensor4& pre_attention,
                                       const Tensor4& upstream);

struct GroupNormConfig {
  std::size_t groups = 8;
  double epsilon = 1e-5;

  void validate(std::size_t channels) const;
};

Tensor4 group_norm_forward(const Tensor4& x, std::span<const double> gamma,
                           std::span<const double> beta, const GroupNormConfig& cfg);

struct GroupNormGrads {
  Tensor4 x;
  std::vector<double> gamma;
  std::vector<double> beta;
};

GroupNormGrads group_norm_backward(const Tensor4& x, std::span<const double> gamma,
                                   const GroupNormConfig& cfg, const Tensor4& upstream);

enum class RlreluMode { train, inference };

struct RlreluConfig {
  double lower = 1.0 / 8.0;
  double upper = 1.0 / 3.0;
  RlreluMode mode = RlreluMode::inference;

  void validate() const;
};

// Negative-side slope for every element. Train mode draws one slope per
// element from the seed; inference mode uses the midpoint.
std::vector<double> rlrelu_slopes(std::size_t count, const RlreluConfig& cfg, std::uint64_t seed);

Tensor4 rlrelu(const Tensor4& x, const RlreluConfig& cfg, std::uint64_t seed);
// Gradient for the slopes the forward pass drew with the same seed.
Tensor4 rlrelu_backward(const Tensor4& x, const RlreluConfig& cfg, std::uint64_t seed,
                        const Tensor4& upstream);

struct LayerShape {
  std::string name;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
};

// Shape walk of the attention U-Net topology: `depth` downsample blocks with
// filters doubling from `base_filters` (2x2 max-pool after all but the last),
// then attention-gated upsample blocks mirroring them (deconvolution x2,
// concatenation with the skip, 1-channel attention map, gated features,
// convolution), and a 1x1 output head. H and W must be divisible by 2^(depth-1).
std::vector<LayerShape> attention_unet_shapes(std::size_t height, std::size_t width,
                                              std::size_t in_channels, std::size_t base_filters,
                                              std::size_t depth, std::size_t out_channels);

}  // namespace toolpose
