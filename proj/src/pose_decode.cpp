#include "toolpose/pose_decode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "toolpose/error.hpp"

namespace toolpose {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // The smaller root survives so component ids follow candidate order.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

struct EdgeMatch {
  std::size_t edge;
  std::size_t cand_a;
  std::size_t cand_b;
  double score;
};

}  // namespace

void DecodeConfig::validate() const {
  if (!(smooth_sigma > 0.0)) throw InvalidInput("smooth_sigma must be > 0");
  if (nms_window < 3 || nms_window % 2 == 0) throw InvalidInput("nms_window must be odd and >= 3");
  if (line_samples < 2) throw InvalidInput("line_samples must be >= 2");
  if (!(nms_threshold >= 0.0) || !(tv_boost_threshold >= 0.0) || !(pair_score_threshold >= 0.0)) {
    throw InvalidInput("decode thresholds must be >= 0");
  }
  if (!(high_boost_k >= 0.0)) throw InvalidInput("high_boost_k must be >= 0");
  if (!(high_boost_sigma > 0.0)) throw InvalidInput("high_boost_sigma must be > 0");
}

double InstrumentPose::score_sum() const {
  double s = 0.0;
  for (const auto& [name, j] : joints) s += j.score;
  return s;
}

std::vector<JointCandidate> nms_candidates(const Heatmap& map, const DecodeConfig& cfg) {
  return nms_candidates(map, cfg, map.channels());
}

std::vector<JointCandidate> nms_candidates(const Heatmap& map, const DecodeConfig& cfg,
                                           std::size_t channel_count) {
  cfg.validate();
  if (channel_count > map.channels()) throw InvalidInput("channel_count exceeds map channels");
  const auto h = static_cast<std::ptrdiff_t>(map.height());
  const auto w = static_cast<std::ptrdiff_t>(map.width());
  const auto half = static_cast<std::ptrdiff_t>(cfg.nms_window / 2);

  struct Ranked {
    JointCandidate cand;
    std::ptrdiff_t index;
  };
  std::vector<Ranked> found;
  for (std::size_t ch = 0; ch < channel_count; ++ch) {
    for (std::ptrdiff_t y = 0; y < h; ++y) {
      for (std::ptrdiff_t x = 0; x < w; ++x) {
        const double v = map.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), ch);
        if (!(v >= cfg.nms_threshold)) continue;
        const std::ptrdiff_t self = y * w + x;
        bool keep = true;
        for (std::ptrdiff_t yy = std::max<std::ptrdiff_t>(0, y - half);
             keep && yy <= std::min(h - 1, y + half); ++yy) {
          for (std::ptrdiff_t xx = std::max<std::ptrdiff_t>(0, x - half);
               xx <= std::min(w - 1, x + half); ++xx) {
            const std::ptrdiff_t other = yy * w + xx;
            if (other == self) continue;
            const double q = map.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx), ch);
            if (q > v || (q == v && other < self)) {
              keep = false;
              break;
            }
          }
        }
        if (keep) {
          found.push_back(
              {JointCandidate{ch, Point{static_cast<double>(x), static_cast<double>(y)}, v}, self});
        }
      }
    }
  }
  std::sort(found.begin(), found.end(), [](const Ranked& a, const Ranked& b) {
    return std::tie(b.cand.score, a.cand.channel, a.index) <
           std::tie(a.cand.score, b.cand.channel, b.index);
  });
  std::vector<JointCandidate> out;
  out.reserve(found.size());
  for (const auto& r : found) out.push_back(r.cand);
  return out;
}

double sample_bilinear(const Heatmap& map, std::size_t channel, Point p) {
  const double x = std::clamp(p.x, 0.0, static_cast<double>(map.width() - 1));
  const double y = std::clamp(p.y, 0.0, static_cast<double>(map.height() - 1));
  const auto x0 = static_cast<std::size_t>(std::floor(x));
  const auto y0 = static_cast<std::size_t>(std::floor(y));
  const std::size_t x1 = std::min(x0 + 1, map.width() - 1);
  const std::size_t y1 = std::min(y0 + 1, map.height() - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  const double top = (1.0 - fx) * map.at(y0, x0, channel) + fx * map.at(y0, x1, channel);
  const double bottom = (1.0 - fx) * map.at(y1, x0, channel) + fx * map.at(y1, x1, channel);
  return (1.0 - fy) * top + fy * bottom;
}

double line_integral_score(Point p, Point q, const Heatmap& map, std::size_t channel,
                           std::size_t samples) {
  if (samples < 2) throw InvalidInput("line integral needs at least 2 samples");
  if (channel >= map.channels()) throw InvalidInput("edge channel out of range");
  if (p == q) return sample_bilinear(map, channel, p);
  double acc = 0.0;
  const double denom = static_cast<double>(samples - 1);
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) / denom;
    acc += sample_bilinear(map, channel, Point{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
  }
  return acc / static_cast<double>(samples);
}

std::vector<PairMatch> max_score_matching(const Matrix& scores, double threshold) {
  if (!(threshold >= 0.0)) throw InvalidInput("pair score threshold must be >= 0");
  std::vector<PairMatch> out;
  if (scores.rows == 0 || scores.cols == 0) return out;
  // Disallowed pairs cost nothing, so an optimal full assignment restricted to
  // allowed pairs is an optimal partial matching.
  Matrix cost(scores.rows, scores.cols);
  for (std::size_t i = 0; i < scores.values.size(); ++i) {
    cost.values[i] = scores.values[i] >= threshold ? -scores.values[i] : 0.0;
  }
  const auto assigned = min_cost_assignment(cost);
  for (std::size_t r = 0; r < assigned.size(); ++r) {
    if (!assigned[r]) continue;
    const double s = scores(r, *assigned[r]);
    if (s >= threshold) out.push_back({r, *assigned[r], s});
  }
  return out;
}

std::vector<PairMatch> match_pairs(std::span<const JointCandidate> cands_a,
                                   std::span<const JointCandidate> cands_b, const Heatmap& maps,
                                   std::size_t edge_channel, const DecodeConfig& cfg) {
  Matrix scores(cands_a.size(), cands_b.size());
  for (std::size_t i = 0; i < cands_a.size(); ++i) {
    for (std::size_t j = 0; j < cands_b.size(); ++j) {
      scores(i, j) = line_integral_score(cands_a[i].position, cands_b[j].position, maps,
                                         edge_channel, cfg.line_samples);
    }
  }
  return max_score_matching(scores, cfg.pair_score_threshold);
}

DecodeResult parse_instruments(const Heatmap& maps, const SkeletonSpec& skeleton,
                               const DecodeConfig& cfg) {
  cfg.validate();
  skeleton.validate();
  if (maps.channels() != skeleton.channel_count()) {
    throw InvalidInput("map has " + std::to_string(maps.channels()) + " channels, skeleton expects " +
                       std::to_string(skeleton.channel_count()));
  }
  const auto expected = skeleton.channel_names();
  for (std::size_t c = 0; c < expected.size(); ++c) {
    if (maps.channel_names()[c] != expected[c]) {
      throw InvalidInput("channel " + std::to_string(c) + " is '" + maps.channel_names()[c] +
                         "', skeleton expects '" + expected[c] + "'");
    }
  }

  const std::size_t nj = skeleton.joint_names.size();
  std::vector<std::size_t> joint_channels(nj);
  std::iota(joint_channels.begin(), joint_channels.end(), 0);
  std::vector<std::size_t> edge_channels(skeleton.edges.size());
  std::iota(edge_channels.begin(), edge_channels.end(), nj);

  const Heatmap smoothed = gaussian_smooth(maps, cfg.smooth_sigma, joint_channels);
  const auto cands = nms_candidates(smoothed, cfg, nj);

  DecodeResult result;
  result.confidence = total_variation(maps);
  Heatmap boosted;
  const Heatmap* edge_maps = &maps;
  if (result.confidence.total < cfg.tv_boost_threshold && !edge_channels.empty()) {
    boosted = high_boost(maps, cfg.high_boost_k, cfg.high_boost_sigma, edge_channels);
    edge_maps = &boosted;
    result.confidence.boosted = true;
  }

  std::vector<std::vector<std::size_t>> by_channel(nj);
  for (std::size_t i = 0; i < cands.size(); ++i) by_channel[cands[i].channel].push_back(i);

  DisjointSets sets(cands.size());
  std::vector<EdgeMatch> matches;
  for (std::size_t e = 0; e < skeleton.edges.size(); ++e) {
    const auto& ids_a = by_channel[skeleton.edges[e].first];
    const auto& ids_b = by_channel[skeleton.edges[e].second];
    std::vector<JointCandidate> ca, cb;
    for (auto i : ids_a) ca.push_back(cands[i]);
    for (auto i : ids_b) cb.push_back(cands[i]);
    for (const auto& m : match_pairs(ca, cb, *edge_maps, nj + e, cfg)) {
      matches.push_back({e, ids_a[m.a], ids_b[m.b], m.score});
      sets.unite(ids_a[m.a], ids_b[m.b]);
    }
  }

  // Group candidates by component; each component is visited in candidate
  // order, so a repeated channel keeps its highest-scoring candidate.
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::ptrdiff_t> group_of_root(cands.size(), -1);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const std::size_t root = sets.find(i);
    if (group_of_root[root] < 0) {
      group_of_root[root] = static_cast<std::ptrdiff_t>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(group_of_root[root])].push_back(i);
  }

  std::vector<char> used(cands.size(), 0);
  for (const auto& members : groups) {
    InstrumentPose pose;
    std::vector<char> channel_taken(nj, 0);
    for (auto i : members) {
      const auto& c = cands[i];
      if (channel_taken[c.channel]) continue;
      channel_taken[c.channel] = 1;
      used[i] = 1;
      pose.joints[skeleton.joint_names[c.channel]] = PoseJoint{c.position, c.score};
    }
    if (!skeleton.edges.empty() && pose.joints.size() < cfg.min_pose_joints) {
      for (auto i : members) used[i] = 0;
      continue;
    }
    const std::size_t root = sets.find(members.front());
    for (const auto& m : matches) {
      if (sets.find(m.cand_a) == root && used[m.cand_a] && used[m.cand_b]) {
        pose.edges.push_back({m.edge, m.score});
      }
    }
    result.poses.push_back(std::move(pose));
  }
  std::stable_sort(result.poses.begin(), result.poses.end(),
                   [](const InstrumentPose& a, const InstrumentPose& b) {
                     return a.score_sum() > b.score_sum();
                   });
  return result;
}

InstrumentPose decode_single(const Heatmap& maps, double smooth_sigma) {
  const Heatmap smoothed = gaussian_smooth(maps, smooth_sigma);
  InstrumentPose pose;
  for (std::size_t ch = 0; ch < maps.channels(); ++ch) {
    std::size_t best = 0;
    double best_v = smoothed.data()[ch];
    for (std::size_t i = 1; i < maps.pixels(); ++i) {
      const double v = smoothed.data()[i * maps.channels() + ch];
      if (v > best_v) {
        best_v = v;
        best = i;
      }
    }
    const Point p{static_cast<double>(best % maps.width()), static_cast<double>(best / maps.width())};
    pose.joints[maps.channel_names()[ch]] = PoseJoint{p, best_v};
  }
  return pose;
}

}  // namespace toolpose
