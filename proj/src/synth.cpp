#include "toolpose/synth.hpp"

#include <array>
#include <optional>
#include <cmath>
#include <numbers>
#include <queue>

#include "toolpose/error.hpp"
#include "toolpose/rng.hpp"

namespace toolpose {

namespace {

constexpr int kJointAttempts = 64;
constexpr int kInstrumentAttempts = 200;
constexpr int kSceneAttempts = 50;

// Breadth-first joint order with the parent used to place each joint.
std::vector<std::pair<std::size_t, std::optional<std::size_t>>> placement_order(const SkeletonSpec& s) {
  const std::size_t n = s.joint_names.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& [a, b] : s.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> seen(n, 0);
  std::vector<std::pair<std::size_t, std::optional<std::size_t>>> order;
  for (std::size_t root = 0; root < n; ++root) {
    if (seen[root]) continue;
    seen[root] = 1;
    std::queue<std::size_t> q;
    q.push(root);
    order.emplace_back(root, std::nullopt);
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v : adj[u]) {
        if (seen[v]) continue;
        seen[v] = 1;
        order.emplace_back(v, u);
        q.push(v);
      }
    }
  }
  return order;
}

}  // namespace

void SceneSpec::validate() const {
  if (frame.height < 2 || frame.width < 2) throw InvalidInput("scene frame must be at least 2x2");
  skeleton.validate();
  if (!(min_separation > 0.0)) throw InvalidInput("joint separation must be > 0");
  if (!(margin >= 0.0) || 2.0 * margin >= static_cast<double>(std::min(frame.height, frame.width))) {
    throw InvalidInput("scene margin leaves no room for joints");
  }
}

std::vector<InstrumentAnnotation> generate_scene(const SceneSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const auto order = placement_order(spec.skeleton);
  const double x_lo = spec.margin, x_hi = static_cast<double>(spec.frame.width) - 1.0 - spec.margin;
  const double y_lo = spec.margin, y_hi = static_cast<double>(spec.frame.height) - 1.0 - spec.margin;
  const double sep = spec.min_separation;

  for (int scene_try = 0; scene_try < kSceneAttempts; ++scene_try) {
    std::vector<InstrumentAnnotation> scene;
    std::vector<Point> placed;
    bool scene_ok = true;
    for (std::size_t inst = 0; inst < spec.instruments && scene_ok; ++inst) {
      bool inst_ok = false;
      for (int inst_try = 0; inst_try < kInstrumentAttempts && !inst_ok; ++inst_try) {
        std::vector<Point> pos(spec.skeleton.joint_names.size());
        std::vector<Point> local = placed;
        bool ok = true;
        for (const auto& [joint, parent] : order) {
          bool found = false;
          for (int t = 0; t < kJointAttempts && !found; ++t) {
            Point p;
            if (parent) {
              const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
              const double len = uniform(rng, sep, 1.5 * sep);
              p = {pos[*parent].x + len * std::cos(angle), pos[*parent].y + len * std::sin(angle)};
            } else {
              p = {uniform(rng, x_lo, x_hi), uniform(rng, y_lo, y_hi)};
            }
            p = {std::round(p.x), std::round(p.y)};
            if (p.x < x_lo || p.x > x_hi || p.y < y_lo || p.y > y_hi) continue;
            bool clear = true;
            for (const auto& q : local) {
              if (distance(p, q) < sep) {
                clear = false;
                break;
              }
            }
            if (!clear) continue;
            pos[joint] = p;
            local.push_back(p);
            found = true;
          }
          if (!found) {
            ok = false;
            break;
          }
        }
        if (!ok) continue;
        InstrumentAnnotation ann;
        for (std::size_t j = 0; j < pos.size(); ++j) ann.joints[spec.skeleton.joint_names[j]] = pos[j];
        scene.push_back(std::move(ann));
        placed = std::move(local);
        inst_ok = true;
      }
      scene_ok = inst_ok;
    }
    if (scene_ok) return scene;
  }
  throw InvalidInput("cannot place " + std::to_string(spec.instruments) +
                     " instruments with the requested joint separation");
}

Image draw_scene(std::span<const InstrumentAnnotation> instruments, const SkeletonSpec& skeleton,
                 FrameSize frame) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 6> palette{
      {{220, 60, 60}, {60, 90, 220}, {60, 200, 80}, {230, 210, 60}, {60, 210, 220}, {200, 80, 200}}};
  Image img(frame.height, frame.width, 3);
  for (std::size_t y = 0; y < frame.height; ++y)
    for (std::size_t x = 0; x < frame.width; ++x) {
      img.at(y, x, 0) = 25;
      img.at(y, x, 1) = 20;
      img.at(y, x, 2) = static_cast<std::uint8_t>(30 + (y * 40) / frame.height);
    }
  const auto paint = [&](auto&& inside, std::array<std::uint8_t, 3> color) {
    for (std::size_t y = 0; y < frame.height; ++y)
      for (std::size_t x = 0; x < frame.width; ++x)
        if (inside(Point{static_cast<double>(x), static_cast<double>(y)}))
          for (int c = 0; c < 3; ++c) img.at(y, x, static_cast<std::size_t>(c)) = color[static_cast<std::size_t>(c)];
  };
  for (const auto& inst : instruments) {
    for (const auto& [a, b] : skeleton.edges) {
      const auto ia = inst.joints.find(skeleton.joint_names[a]);
      const auto ib = inst.joints.find(skeleton.joint_names[b]);
      if (ia == inst.joints.end() || ib == inst.joints.end()) continue;
      paint([&](Point p) { return squared_distance_to_segment(p, ia->second, ib->second) <= 16.0; },
            {190, 190, 200});
    }
  }
  for (const auto& inst : instruments) {
    for (std::size_t j = 0; j < skeleton.joint_names.size(); ++j) {
      const auto it = inst.joints.find(skeleton.joint_names[j]);
      if (it == inst.joints.end()) continue;
      paint([&](Point p) { return distance(p, it->second) <= 5.0; }, palette[j % palette.size()]);
    }
  }
  return img;
}

}  // namespace toolpose
