#include "toolpose/nn_kernels.hpp"

#include <cmath>

#include "toolpose/error.hpp"
#include "toolpose/rng.hpp"

namespace toolpose {

namespace {

void check_attention_shapes(const Tensor4& features, const Tensor4& pre_attention) {
  if (pre_attention.c() != 1) throw InvalidInput("pre-attention map must have 1 channel");
  if (features.n() != pre_attention.n() || features.h() != pre_attention.h() ||
      features.w() != pre_attention.w()) {
    throw InvalidInput("features and pre-attention map differ in N, H or W");
  }
}

void check_affine(std::span<const double> v, std::size_t channels, const char* name) {
  if (v.size() != channels) {
    throw InvalidInput(std::string(name) + " needs one value per channel (" +
                       std::to_string(channels) + ")");
  }
}

struct GroupStats {
  double mean;
  double rstd;
};

// Statistics over (H, W, channels of group g) for sample n.
GroupStats group_stats(const Tensor4& x, std::size_t n, std::size_t g, std::size_t per_group,
                       double eps) {
  const std::size_t c0 = g * per_group;
  double sum = 0.0;
  for (std::size_t y = 0; y < x.h(); ++y)
    for (std::size_t px = 0; px < x.w(); ++px)
      for (std::size_t c = c0; c < c0 + per_group; ++c) sum += x(n, y, px, c);
  const double count = static_cast<double>(x.h() * x.w() * per_group);
  const double mean = sum / count;
  double sq = 0.0;
  for (std::size_t y = 0; y < x.h(); ++y)
    for (std::size_t px = 0; px < x.w(); ++px)
      for (std::size_t c = c0; c < c0 + per_group; ++c) {
        const double d = x(n, y, px, c) - mean;
        sq += d * d;
      }
  return {mean, 1.0 / std::sqrt(sq / count + eps)};
}

}  // namespace

Tensor4::Tensor4(std::size_t n, std::size_t h, std::size_t w, std::size_t c, double fill)
    : Tensor4(n, h, w, c, std::vector<double>(n * h * w * c, fill)) {}

Tensor4::Tensor4(std::size_t n, std::size_t h, std::size_t w, std::size_t c, std::vector<double> data)
    : n_(n), h_(h), w_(w), c_(c), data_(std::move(data)) {
  if (n == 0 || h == 0 || w == 0 || c == 0) throw InvalidInput("tensor dimensions must be >= 1");
  if (data_.size() != n * h * w * c) throw InvalidInput("tensor data length does not match its shape");
}

Tensor4 Tensor4::from_heatmap(const Heatmap& map) {
  return Tensor4(1, map.height(), map.width(), map.channels(),
                 std::vector<double>(map.data().begin(), map.data().end()));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor4 attention_gate_forward(const Tensor4& features, const Tensor4& pre_attention) {
  check_attention_shapes(features, pre_attention);
  Tensor4 out = features;
  const std::size_t c = features.c();
  for (std::size_t i = 0; i < pre_attention.size(); ++i) {
    const double gate = sigmoid(pre_attention.data()[i]);
    for (std::size_t k = 0; k < c; ++k) out.data()[i * c + k] *= gate;
  }
  return out;
}

AttentionGrads attention_gate_backward(const Tensor4& features, const Tensor4& pre_attention,
                                       const Tensor4& upstream) {
  check_attention_shapes(features, pre_attention);
  if (!upstream.same_shape(features)) throw InvalidInput("upstream gradient shape differs from features");
  AttentionGrads g{Tensor4(features.n(), features.h(), features.w(), features.c()),
                   Tensor4(pre_attention.n(), pre_attention.h(), pre_attention.w(), 1)};
  const std::size_t c = features.c();
  for (std::size_t i = 0; i < pre_attention.size(); ++i) {
    const double s = sigmoid(pre_attention.data()[i]);
    double acc = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      const double up = upstream.data()[i * c + k];
      g.features.data()[i * c + k] = up * s;
      acc += up * features.data()[i * c + k];
    }
    g.pre_attention.data()[i] = acc * s * (1.0 - s);
  }
  return g;
}

void GroupNormConfig::validate(std::size_t channels) const {
  if (groups == 0 || channels % groups != 0) {
    throw InvalidInput("group count " + std::to_string(groups) + " does not divide " +
                       std::to_string(channels) + " channels");
  }
  if (!(epsilon > 0.0)) throw InvalidInput("group norm epsilon must be > 0");
}

Tensor4 group_norm_forward(const Tensor4& x, std::span<const double> gamma,
                           std::span<const double> beta, const GroupNormConfig& cfg) {
  cfg.validate(x.c());
  check_affine(gamma, x.c(), "gamma");
  check_affine(beta, x.c(), "beta");
  const std::size_t per_group = x.c() / cfg.groups;
  Tensor4 out(x.n(), x.h(), x.w(), x.c());
  for (std::size_t n = 0; n < x.n(); ++n) {
    for (std::size_t g = 0; g < cfg.groups; ++g) {
      const auto st = group_stats(x, n, g, per_group, cfg.epsilon);
      for (std::size_t y = 0; y < x.h(); ++y)
        for (std::size_t px = 0; px < x.w(); ++px)
          for (std::size_t c = g * per_group; c < (g + 1) * per_group; ++c) {
            out(n, y, px, c) = gamma[c] * (x(n, y, px, c) - st.mean) * st.rstd + beta[c];
          }
    }
  }
  return out;
}

GroupNormGrads group_norm_backward(const Tensor4& x, std::span<const double> gamma,
                                   const GroupNormConfig& cfg, const Tensor4& upstream) {
  cfg.validate(x.c());
  check_affine(gamma, x.c(), "gamma");
  if (!upstream.same_shape(x)) throw InvalidInput("upstream gradient shape differs from input");
  const std::size_t per_group = x.c() / cfg.groups;
  const double count = static_cast<double>(x.h() * x.w() * per_group);
  GroupNormGrads g{Tensor4(x.n(), x.h(), x.w(), x.c()), std::vector<double>(x.c(), 0.0),
                   std::vector<double>(x.c(), 0.0)};
  for (std::size_t n = 0; n < x.n(); ++n) {
    for (std::size_t grp = 0; grp < cfg.groups; ++grp) {
      const auto st = group_stats(x, n, grp, per_group, cfg.epsilon);
      const std::size_t c0 = grp * per_group, c1 = c0 + per_group;
      // d(xhat) = up * gamma; dx = rstd * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat)).
      double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
      for (std::size_t y = 0; y < x.h(); ++y)
        for (std::size_t px = 0; px < x.w(); ++px)
          for (std::size_t c = c0; c < c1; ++c) {
            const double xhat = (x(n, y, px, c) - st.mean) * st.rstd;
            const double up = upstream(n, y, px, c);
            g.beta[c] += up;
            g.gamma[c] += up * xhat;
            sum_dxhat += up * gamma[c];
            sum_dxhat_xhat += up * gamma[c] * xhat;
          }
      const double mean_dxhat = sum_dxhat / count;
      const double mean_dxhat_xhat = sum_dxhat_xhat / count;
      for (std::size_t y = 0; y < x.h(); ++y)
        for (std::size_t px = 0; px < x.w(); ++px)
          for (std::size_t c = c0; c < c1; ++c) {
            const double xhat = (x(n, y, px, c) - st.mean) * st.rstd;
            const double dxhat = upstream(n, y, px, c) * gamma[c];
            g.x(n, y, px, c) = st.rstd * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
          }
    }
  }
  return g;
}

void RlreluConfig::validate() const {
  if (!(lower > 0.0 && lower <= upper && upper < 1.0)) {
    throw InvalidInput("RLReLU bounds need 0 < lower <= upper < 1");
  }
}

std::vector<double> rlrelu_slopes(std::size_t count, const RlreluConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (cfg.mode == RlreluMode::inference) return std::vector<double>(count, 0.5 * (cfg.lower + cfg.upper));
  Rng rng(seed);
  std::vector<double> slopes(count);
  for (double& s : slopes) s = uniform(rng, cfg.lower, cfg.upper);
  return slopes;
}

Tensor4 rlrelu(const Tensor4& x, const RlreluConfig& cfg, std::uint64_t seed) {
  const auto slopes = rlrelu_slopes(x.size(), cfg, seed);
  Tensor4 out = x;
  for (std::size_t i = 0; i < out.size(); ++i) {
    double& v = out.data()[i];
    if (v < 0.0) v *= slopes[i];
  }
  return out;
}

Tensor4 rlrelu_backward(const Tensor4& x, const RlreluConfig& cfg, std::uint64_t seed,
                        const Tensor4& upstream) {
  if (!upstream.same_shape(x)) throw InvalidInput("upstream gradient shape differs from input");
  const auto slopes = rlrelu_slopes(x.size(), cfg, seed);
  Tensor4 g = upstream;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (x.data()[i] < 0.0) g.data()[i] *= slopes[i];
  }
  return g;
}

std::vector<LayerShape> attention_unet_shapes(std::size_t height, std::size_t width,
                                              std::size_t in_channels, std::size_t base_filters,
                                              std::size_t depth, std::size_t out_channels) {
  if (depth == 0 || base_filters == 0 || in_channels == 0 || out_channels == 0) {
    throw InvalidInput("network depth, filters and channel counts must be >= 1");
  }
  const std::size_t factor = std::size_t{1} << (depth - 1);
  if (height % factor != 0 || width % factor != 0) {
    throw InvalidInput("input size must be divisible by " + std::to_string(factor));
  }
  std::vector<LayerShape> shapes{{"input", height, width, in_channels}};
  std::vector<LayerShape> skips;
  std::size_t h = height, w = width;
  for (std::size_t k = 1; k <= depth; ++k) {
    const std::size_t f = base_filters << (k - 1);
    const std::string block = "down" + std::to_string(k);
    shapes.push_back({block + "/conv", h, w, f});
    skips.push_back(shapes.back());
    if (k < depth) {
      h /= 2;
      w /= 2;
      shapes.push_back({block + "/pool", h, w, f});
    }
  }
  for (std::size_t k = depth - 1; k >= 1; --k) {
    const std::size_t f = base_filters << (k - 1);
    const std::string block = "up" + std::to_string(k);
    h *= 2;
    w *= 2;
    shapes.push_back({block + "/deconv", h, w, f});
    const std::size_t concat = f + skips[k - 1].channels;
    shapes.push_back({block + "/concat", h, w, concat});
    shapes.push_back({block + "/attention", h, w, 1});
    shapes.push_back({block + "/gated", h, w, concat});
    shapes.push_back({block + "/conv", h, w, f});
  }
  shapes.push_back({"output", h, w, out_channels});
  return shapes;
}

}  // namespace toolpose
