#include "toolpose/augment.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <optional>

#include "toolpose/error.hpp"
#include "toolpose/rng.hpp"

namespace toolpose {

namespace {

bool in_frame(Point p, std::size_t height, std::size_t width) {
  return p.x >= 0.0 && p.x < static_cast<double>(width) && p.y >= 0.0 &&
         p.y < static_cast<double>(height);
}

template <typename Fn>
std::vector<InstrumentAnnotation> map_annotations(std::span<const InstrumentAnnotation> annotations,
                                                  std::size_t height, std::size_t width, Fn&& fn) {
  std::vector<InstrumentAnnotation> out;
  out.reserve(annotations.size());
  for (const auto& inst : annotations) {
    InstrumentAnnotation moved;
    for (const auto& [name, p] : inst.joints) {
      auto [new_name, q] = fn(name, p);
      if (in_frame(q, height, width)) moved.joints[new_name] = q;
    }
    out.push_back(std::move(moved));
  }
  return out;
}

// Copies whole pixels from `src` to `dst` (interleaved, `ch` values each)
// using the inverse map `source_of(col, row)`; unmapped pixels stay zero.
template <typename T, typename Fn>
void remap_pixels(std::span<const T> src, std::span<T> dst, std::size_t h, std::size_t w,
                  std::size_t ch, Fn&& source_of) {
  for (std::size_t v = 0; v < h; ++v) {
    for (std::size_t u = 0; u < w; ++u) {
      const std::optional<std::pair<std::size_t, std::size_t>> s = source_of(u, v);
      T* out = dst.data() + (v * w + u) * ch;
      if (!s) {
        std::fill(out, out + ch, T{});
        continue;
      }
      const T* in = src.data() + (s->second * w + s->first) * ch;
      std::copy(in, in + ch, out);
    }
  }
}

auto shift_source(int dx, int dy, std::size_t h, std::size_t w) {
  return [=](std::size_t u, std::size_t v) -> std::optional<std::pair<std::size_t, std::size_t>> {
    const auto x = static_cast<std::ptrdiff_t>(u) - dx;
    const auto y = static_cast<std::ptrdiff_t>(v) - dy;
    if (x < 0 || y < 0 || x >= static_cast<std::ptrdiff_t>(w) || y >= static_cast<std::ptrdiff_t>(h)) {
      return std::nullopt;
    }
    return std::pair{static_cast<std::size_t>(x), static_cast<std::size_t>(y)};
  };
}

struct Rotation {
  double cx, cy, c, s;

  Rotation(double degrees, std::size_t h, std::size_t w)
      : cx((static_cast<double>(w) - 1.0) / 2.0),
        cy((static_cast<double>(h) - 1.0) / 2.0),
        c(std::cos(degrees * std::numbers::pi / 180.0)),
        s(std::sin(degrees * std::numbers::pi / 180.0)) {}

  Point forward(Point p) const {
    const double dx = p.x - cx, dy = p.y - cy;
    return {cx + dx * c + dy * s, cy - dx * s + dy * c};
  }
  Point inverse(Point p) const {
    const double dx = p.x - cx, dy = p.y - cy;
    return {cx + dx * c - dy * s, cy + dx * s + dy * c};
  }
};

auto nearest_rotation_source(const Rotation& rot, std::size_t h, std::size_t w) {
  return [=](std::size_t u, std::size_t v) -> std::optional<std::pair<std::size_t, std::size_t>> {
    const Point src = rot.inverse({static_cast<double>(u), static_cast<double>(v)});
    const double x = std::round(src.x), y = std::round(src.y);
    if (x < 0.0 || y < 0.0 || x >= static_cast<double>(w) || y >= static_cast<double>(h)) {
      return std::nullopt;
    }
    return std::pair{static_cast<std::size_t>(x), static_cast<std::size_t>(y)};
  };
}

void check_rotation(double degrees, const AugmentConfig& cfg) {
  if (!(std::abs(degrees) <= cfg.max_rotation_deg)) {
    throw InvalidInput("rotation of " + std::to_string(degrees) + " degrees exceeds the cap of " +
                       std::to_string(cfg.max_rotation_deg));
  }
}

void check_translation(int dx, int dy, const AugmentConfig& cfg) {
  if (std::abs(dx) > cfg.max_translation || std::abs(dy) > cfg.max_translation) {
    throw InvalidInput("translation exceeds the cap of " + std::to_string(cfg.max_translation) + " px");
  }
}

std::vector<double> clasper_xs(const Frame& f) {
  std::vector<double> xs;
  for (const auto& inst : f.annotations)
    for (const auto& [name, p] : inst.joints)
      if (is_clasper_joint(name)) xs.push_back(p.x);
  return xs;
}

std::size_t split_column(double x, std::size_t width) {
  const double r = std::round(x);
  if (r <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(r), width);
}

template <typename T>
void splice_columns(const SwapPlan& plan, std::span<const T> a, std::span<const T> b,
                    std::span<T> out, std::size_t h, std::size_t ch) {
  const std::size_t w = plan.width;
  const std::size_t left = plan.split_a - plan.crop_left;
  for (std::size_t y = 0; y < h; ++y) {
    T* dst = out.data() + y * w * ch;
    const T* ra = a.data() + y * w * ch;
    const T* rb = b.data() + y * w * ch;
    std::copy(ra + plan.crop_left * ch, ra + plan.split_a * ch, dst);
    std::fill(dst + left * ch, dst + (left + plan.pad) * ch, T{});
    std::copy(rb + plan.split_b * ch, rb + (w - plan.crop_right) * ch, dst + (left + plan.pad) * ch);
  }
}

std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

double normal(Rng& rng) {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

void AugmentConfig::validate() const {
  if (!(max_translation >= 0.0)) throw InvalidInput("max_translation must be >= 0");
  if (!(max_rotation_deg >= 0.0)) throw InvalidInput("max_rotation_deg must be >= 0");
}

AugmentConfig AugmentConfig::rmit() {
  AugmentConfig cfg;
  cfg.max_rotation_deg = 10.0;
  return cfg;
}

std::string mirror_joint_name(std::string_view name) {
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 6> swaps{{
      {"left", "right"}, {"Left", "Right"}, {"LEFT", "RIGHT"},
      {"right", "left"}, {"Right", "Left"}, {"RIGHT", "LEFT"}}};
  std::string out;
  std::size_t i = 0;
  while (i < name.size()) {
    bool swapped = false;
    for (const auto& [from, to] : swaps) {
      if (name.substr(i, from.size()) == from) {
        out += to;
        i += from.size();
        swapped = true;
        break;
      }
    }
    if (!swapped) out += name[i++];
  }
  return out;
}

Frame flip_h(const Frame& f) {
  const std::size_t h = f.image.height, w = f.image.width, ch = f.image.channels;
  Frame out{Image(h, w, ch), {}};
  remap_pixels<std::uint8_t>(f.image.pixels, out.image.pixels, h, w, ch,
                             [w](std::size_t u, std::size_t v) {
                               return std::optional{std::pair{w - 1 - u, v}};
                             });
  out.annotations = map_annotations(f.annotations, h, w, [w](const std::string& name, Point p) {
    return std::pair{mirror_joint_name(name), Point{static_cast<double>(w) - 1.0 - p.x, p.y}};
  });
  return out;
}

Heatmap flip_h(const Heatmap& map) {
  const std::size_t h = map.height(), w = map.width(), nc = map.channels();
  Heatmap out(h, w, nc, map.channel_names());
  std::vector<std::size_t> source_channel(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    source_channel[c] = map.find_channel(mirror_joint_name(map.channel_names()[c])).value_or(c);
  }
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < nc; ++c) out.at(y, x, c) = map.at(y, w - 1 - x, source_channel[c]);
  return out;
}

Frame translate(const Frame& f, int dx, int dy, const AugmentConfig& cfg) {
  check_translation(dx, dy, cfg);
  const std::size_t h = f.image.height, w = f.image.width, ch = f.image.channels;
  Frame out{Image(h, w, ch), {}};
  remap_pixels<std::uint8_t>(f.image.pixels, out.image.pixels, h, w, ch, shift_source(dx, dy, h, w));
  out.annotations = map_annotations(f.annotations, h, w, [=](const std::string& name, Point p) {
    return std::pair{name, Point{p.x + dx, p.y + dy}};
  });
  return out;
}

Heatmap translate(const Heatmap& map, int dx, int dy) {
  Heatmap out(map.height(), map.width(), map.channels(), map.channel_names());
  remap_pixels<double>(map.data(), out.data(), map.height(), map.width(), map.channels(),
                       shift_source(dx, dy, map.height(), map.width()));
  return out;
}

Point rotate_point(Point p, double degrees, std::size_t height, std::size_t width) {
  return Rotation(degrees, height, width).forward(p);
}

Frame rotate(const Frame& f, double degrees, const AugmentConfig& cfg, Resampling resampling) {
  check_rotation(degrees, cfg);
  const std::size_t h = f.image.height, w = f.image.width, ch = f.image.channels;
  const Rotation rot(degrees, h, w);
  Frame out{Image(h, w, ch), {}};
  if (resampling == Resampling::nearest) {
    remap_pixels<std::uint8_t>(f.image.pixels, out.image.pixels, h, w, ch,
                               nearest_rotation_source(rot, h, w));
  } else {
    const auto sample = [&](std::ptrdiff_t x, std::ptrdiff_t y, std::size_t c) -> double {
      if (x < 0 || y < 0 || x >= static_cast<std::ptrdiff_t>(w) || y >= static_cast<std::ptrdiff_t>(h)) {
        return 0.0;
      }
      return f.image.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c);
    };
    for (std::size_t v = 0; v < h; ++v) {
      for (std::size_t u = 0; u < w; ++u) {
        const Point s = rot.inverse({static_cast<double>(u), static_cast<double>(v)});
        const double fx0 = std::floor(s.x), fy0 = std::floor(s.y);
        const double fx = s.x - fx0, fy = s.y - fy0;
        const auto x0 = static_cast<std::ptrdiff_t>(fx0), y0 = static_cast<std::ptrdiff_t>(fy0);
        for (std::size_t c = 0; c < ch; ++c) {
          const double top = (1 - fx) * sample(x0, y0, c) + fx * sample(x0 + 1, y0, c);
          const double bottom = (1 - fx) * sample(x0, y0 + 1, c) + fx * sample(x0 + 1, y0 + 1, c);
          out.image.at(v, u, c) = clamp_u8((1 - fy) * top + fy * bottom);
        }
      }
    }
  }
  out.annotations = map_annotations(f.annotations, h, w, [&](const std::string& name, Point p) {
    return std::pair{name, rot.forward(p)};
  });
  return out;
}

Heatmap rotate(const Heatmap& map, double degrees) {
  const Rotation rot(degrees, map.height(), map.width());
  Heatmap out(map.height(), map.width(), map.channels(), map.channel_names());
  remap_pixels<double>(map.data(), out.data(), map.height(), map.width(), map.channels(),
                       nearest_rotation_source(rot, map.height(), map.width()));
  return out;
}

bool is_clasper_joint(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower.find("clasper") != std::string::npos;
}

SwapPlan plan_swap(std::size_t width, double clasper_x_a, double clasper_x_b) {
  SwapPlan plan;
  plan.width = width;
  plan.split_a = split_column(clasper_x_a, width);
  plan.split_b = split_column(clasper_x_b, width);
  const std::size_t combined = plan.split_a + (width - plan.split_b);
  if (combined <= width) {
    plan.pad = width - combined;
  } else {
    const std::size_t excess = combined - width;
    plan.crop_left = excess / 2;
    plan.crop_right = excess - plan.crop_left;
  }
  return plan;
}

SwapPlan plan_swap(const Frame& a, const Frame& b, std::uint64_t seed) {
  if (a.image.height != b.image.height || a.image.width != b.image.width ||
      a.image.channels != b.image.channels) {
    throw InvalidInput("random swap needs frames of equal size");
  }
  const auto xa = clasper_xs(a);
  const auto xb = clasper_xs(b);
  if (xa.empty() || xb.empty()) throw InvalidInput("random swap needs a clasper joint in both frames");
  Rng rng(seed);
  const double split_a = xa[uniform_index(rng, xa.size())];
  const double split_b = xb[uniform_index(rng, xb.size())];
  return plan_swap(a.image.width, split_a, split_b);
}

Image apply_swap(const SwapPlan& plan, const Image& a, const Image& b) {
  if (a.width != plan.width || b.width != plan.width || a.height != b.height || a.channels != b.channels) {
    throw InvalidInput("swap images do not match the plan");
  }
  Image out(a.height, a.width, a.channels);
  splice_columns<std::uint8_t>(plan, a.pixels, b.pixels, out.pixels, a.height, a.channels);
  return out;
}

Heatmap apply_swap(const SwapPlan& plan, const Heatmap& a, const Heatmap& b) {
  if (a.width() != plan.width || b.width() != plan.width || a.height() != b.height() ||
      a.channels() != b.channels()) {
    throw InvalidInput("swap heatmaps do not match the plan");
  }
  Heatmap out(a.height(), a.width(), a.channels(), a.channel_names());
  splice_columns<double>(plan, a.data(), b.data(), out.data(), a.height(), a.channels());
  return out;
}

std::vector<InstrumentAnnotation> apply_swap(const SwapPlan& plan,
                                             std::span<const InstrumentAnnotation> a,
                                             std::span<const InstrumentAnnotation> b,
                                             std::size_t height) {
  std::vector<InstrumentAnnotation> out;
  const auto carry = [&](std::span<const InstrumentAnnotation> src, bool left_part, double offset) {
    for (const auto& inst : src) {
      InstrumentAnnotation part;
      for (const auto& [name, p] : inst.joints) {
        const bool belongs = left_part ? p.x <= static_cast<double>(plan.split_a)
                                       : p.x >= static_cast<double>(plan.split_b);
        if (!belongs) continue;
        const Point q{p.x + offset, p.y};
        if (in_frame(q, height, plan.width)) part.joints[name] = q;
      }
      if (!part.joints.empty()) out.push_back(std::move(part));
    }
  };
  carry(a, true, plan.offset_a());
  carry(b, false, plan.offset_b());
  return out;
}

Frame random_swap(const Frame& a, const Frame& b, std::uint64_t seed) {
  const SwapPlan plan = plan_swap(a, b, seed);
  return Frame{apply_swap(plan, a.image, b.image),
               apply_swap(plan, a.annotations, b.annotations, a.image.height)};
}

BBox bbox_from_joints(std::span<const Point> joints, double alpha) {
  if (joints.size() < 2) throw InvalidInput("bounding box needs at least 2 joints");
  if (!(alpha > 0.0)) throw InvalidInput("bounding box alpha must be > 0");
  double x_min = joints[0].x, x_max = joints[0].x, y_min = joints[0].y, y_max = joints[0].y;
  for (const auto& p : joints) {
    x_min = std::min(x_min, p.x);
    x_max = std::max(x_max, p.x);
    y_min = std::min(y_min, p.y);
    y_max = std::max(y_max, p.y);
  }
  const double delta = alpha * std::max(x_max - x_min, y_max - y_min);
  return BBox{x_min - delta, y_min - delta, x_max + delta, y_max + delta, alpha};
}

void PixelOpsConfig::validate() const {
  const auto probability = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput(std::string(name) + " must lie in [0, 1]");
  };
  probability(equalize_probability, "equalize_probability");
  probability(blur_probability, "blur_probability");
  probability(salt_probability, "salt_probability");
  probability(pepper_probability, "pepper_probability");
  probability(erase_probability, "erase_probability");
  probability(erase_max_fraction, "erase_max_fraction");
  if (!(brightness >= 0.0) || !(contrast >= 0.0 && contrast <= 1.0) ||
      !(saturation >= 0.0 && saturation <= 1.0) || !(gaussian_noise_std >= 0.0) ||
      !(speckle_std >= 0.0)) {
    throw InvalidInput("pixel op magnitudes out of range");
  }
}

Image apply_pixel_ops(const Image& img, const PixelOpsConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const std::size_t h = img.height, w = img.width, ch = img.channels;
  std::vector<double> px(img.pixels.begin(), img.pixels.end());

  // Parameters are drawn unconditionally so that disabling one op does not
  // shift the random stream of the others.
  const double shift = uniform(rng, -cfg.brightness, cfg.brightness) * 255.0;
  const double gain = uniform(rng, 1.0 - cfg.contrast, 1.0 + cfg.contrast);
  const double sat = uniform(rng, 1.0 - cfg.saturation, 1.0 + cfg.saturation);
  const bool equalize = uniform01(rng) < cfg.equalize_probability;
  const bool blur = uniform01(rng) < cfg.blur_probability;
  const bool erase = uniform01(rng) < cfg.erase_probability;

  double mean = 0.0;
  for (double v : px) mean += v;
  mean /= static_cast<double>(std::max<std::size_t>(px.size(), 1));
  for (double& v : px) v = (v - mean) * gain + mean + shift;

  if (ch == 3 && cfg.saturation > 0.0) {
    for (std::size_t i = 0; i < h * w; ++i) {
      double* p = px.data() + i * 3;
      const double gray = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
      for (int c = 0; c < 3; ++c) p[c] = gray + (p[c] - gray) * sat;
    }
  }

  if (equalize) {
    for (std::size_t c = 0; c < ch; ++c) {
      std::array<std::size_t, 256> hist{};
      for (std::size_t i = 0; i < h * w; ++i) ++hist[clamp_u8(px[i * ch + c])];
      std::array<double, 256> lut{};
      std::size_t cdf = 0, cdf_min = 0;
      for (std::size_t v = 0; v < 256; ++v) {
        if (cdf_min == 0 && hist[v] != 0) cdf_min = hist[v];
        cdf += hist[v];
        const double denom = static_cast<double>(h * w - cdf_min);
        lut[v] = denom > 0 ? 255.0 * static_cast<double>(cdf - cdf_min) / denom : static_cast<double>(v);
      }
      for (std::size_t i = 0; i < h * w; ++i) px[i * ch + c] = lut[clamp_u8(px[i * ch + c])];
    }
  }

  if (blur) {
    std::vector<double> src = px;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t c = 0; c < ch; ++c) {
          double acc = 0.0;
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const auto yy = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
                  static_cast<std::ptrdiff_t>(y) + dy, 0, static_cast<std::ptrdiff_t>(h) - 1));
              const auto xx = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
                  static_cast<std::ptrdiff_t>(x) + dx, 0, static_cast<std::ptrdiff_t>(w) - 1));
              acc += src[(yy * w + xx) * ch + c];
            }
          px[(y * w + x) * ch + c] = acc / 9.0;
        }
  }

  for (std::size_t i = 0; i < h * w; ++i) {
    const double r = uniform01(rng);
    double* p = px.data() + i * ch;
    for (std::size_t c = 0; c < ch; ++c) {
      if (cfg.gaussian_noise_std > 0.0) p[c] += cfg.gaussian_noise_std * normal(rng);
      if (cfg.speckle_std > 0.0) p[c] *= 1.0 + cfg.speckle_std * normal(rng);
    }
    if (r < cfg.salt_probability) {
      std::fill(p, p + ch, 255.0);
    } else if (r < cfg.salt_probability + cfg.pepper_probability) {
      std::fill(p, p + ch, 0.0);
    }
  }

  if (erase && cfg.erase_max_fraction > 0.0) {
    const auto ew = static_cast<std::size_t>(uniform(rng, 1.0, cfg.erase_max_fraction * static_cast<double>(w) + 1.0));
    const auto eh = static_cast<std::size_t>(uniform(rng, 1.0, cfg.erase_max_fraction * static_cast<double>(h) + 1.0));
    const std::size_t x0 = uniform_index(rng, w - std::min(ew, w) + 1);
    const std::size_t y0 = uniform_index(rng, h - std::min(eh, h) + 1);
    for (std::size_t y = y0; y < std::min(h, y0 + eh); ++y)
      for (std::size_t x = x0; x < std::min(w, x0 + ew); ++x)
        for (std::size_t c = 0; c < ch; ++c) px[(y * w + x) * ch + c] = 0.0;
  }

  Image out(h, w, ch);
  for (std::size_t i = 0; i < px.size(); ++i) out.pixels[i] = clamp_u8(px[i]);
  return out;
}

}  // namespace toolpose
