#include "toolpose/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <tuple>
#include <unordered_map>

#include "toolpose/assignment.hpp"
#include "toolpose/error.hpp"

namespace toolpose {

namespace {

DetectionMatch finish_match(std::vector<MatchedPair> pairs, std::size_t n_pred, std::size_t n_gt) {
  DetectionMatch m;
  std::sort(pairs.begin(), pairs.end(),
            [](const MatchedPair& a, const MatchedPair& b) { return a.pred < b.pred; });
  std::vector<char> pred_used(n_pred, 0), gt_used(n_gt, 0);
  for (const auto& p : pairs) {
    pred_used[p.pred] = 1;
    gt_used[p.gt] = 1;
  }
  for (std::size_t i = 0; i < n_pred; ++i)
    if (!pred_used[i]) m.unmatched_preds.push_back(i);
  for (std::size_t j = 0; j < n_gt; ++j)
    if (!gt_used[j]) m.unmatched_gts.push_back(j);
  m.pairs = std::move(pairs);
  return m;
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string format_rmse(const std::optional<double>& v) {
  return v ? format_fixed(*v, 4) : std::string("na");
}

}  // namespace

std::string_view to_string(MatchingRule rule) {
  return rule == MatchingRule::optimal ? "optimal" : "greedy";
}

MatchingRule parse_matching_rule(std::string_view s) {
  if (s == "optimal") return MatchingRule::optimal;
  if (s == "greedy") return MatchingRule::greedy;
  throw InvalidInput("unknown matching rule '" + std::string(s) + "' (expected optimal or greedy)");
}

void EvalConfig::validate() const {
  if (!(pixel_threshold > 0.0)) throw InvalidInput("pixel_threshold must be > 0");
  if (!(frame_scale > 0.0)) throw InvalidInput("frame_scale must be > 0");
  if (!(min_score >= 0.0)) throw InvalidInput("min_score must be >= 0");
}

EvalConfig EvalConfig::rmit() {
  EvalConfig cfg;
  cfg.pixel_threshold = 15.0;
  return cfg;
}

double DetectionMatch::total_distance() const {
  double s = 0.0;
  for (const auto& p : pairs) s += p.distance;
  return s;
}

DetectionMatch match_detections(std::span<const Point> preds, std::span<const Point> gts,
                                const EvalConfig& cfg) {
  cfg.validate();
  const std::size_t n = preds.size(), m = gts.size();
  Matrix dist(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) dist(i, j) = distance(preds[i], gts[j]);
  const auto allowed = [&](std::size_t i, std::size_t j) { return dist(i, j) <= cfg.pixel_threshold; };

  std::vector<MatchedPair> pairs;
  if (cfg.matching == MatchingRule::greedy) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> order;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (allowed(i, j)) order.emplace_back(dist(i, j), i, j);
    std::sort(order.begin(), order.end());
    std::vector<char> pu(n, 0), gu(m, 0);
    for (const auto& [d, i, j] : order) {
      if (pu[i] || gu[j]) continue;
      pu[i] = gu[j] = 1;
      pairs.push_back({i, j, d});
    }
  } else if (n > 0 && m > 0) {
    // Each allowed match is worth more than any total distance a matching can
    // accumulate, so cardinality dominates and distance breaks ties.
    const double bonus = cfg.pixel_threshold * static_cast<double>(std::min(n, m) + 1) + 1.0;
    Matrix cost(n, m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) cost(i, j) = allowed(i, j) ? dist(i, j) - bonus : 0.0;
    const auto assigned = min_cost_assignment(cost);
    for (std::size_t i = 0; i < n; ++i) {
      if (assigned[i] && allowed(i, *assigned[i])) pairs.push_back({i, *assigned[i], dist(i, *assigned[i])});
    }
  }
  return finish_match(std::move(pairs), n, m);
}

MetricsAccumulator::MetricsAccumulator(std::vector<std::string> joint_order)
    : order_(std::move(joint_order)) {
  for (const auto& j : order_) counts_[j];
}

void MetricsAccumulator::add(const std::string& joint, const DetectionMatch& match) {
  if (!counts_.contains(joint)) order_.push_back(joint);
  auto& c = counts_[joint];
  c.tp += match.pairs.size();
  c.fp += match.unmatched_preds.size();
  c.fn += match.unmatched_gts.size();
  for (const auto& p : match.pairs) c.squared_error += p.distance * p.distance;
}

void MetricsAccumulator::merge(const MetricsAccumulator& other) {
  for (const auto& j : other.order_) {
    if (!counts_.contains(j)) order_.push_back(j);
    auto& c = counts_[j];
    const auto& o = other.counts_.at(j);
    c.tp += o.tp;
    c.fp += o.fp;
    c.fn += o.fn;
    c.squared_error += o.squared_error;
  }
}

MetricsTable MetricsAccumulator::finish() const {
  MetricsTable table;
  double rmse_sum = 0.0;
  std::size_t rmse_count = 0;
  for (const auto& name : order_) {
    const auto& c = counts_.at(name);
    JointMetrics jm;
    jm.joint = name;
    jm.true_positives = c.tp;
    jm.false_positives = c.fp;
    jm.false_negatives = c.fn;
    const auto tp = static_cast<double>(c.tp);
    jm.precision = c.tp + c.fp > 0 ? tp / static_cast<double>(c.tp + c.fp) : 0.0;
    jm.recall = c.tp + c.fn > 0 ? tp / static_cast<double>(c.tp + c.fn) : 0.0;
    jm.f1 = jm.precision + jm.recall > 0.0
                ? 2.0 * jm.precision * jm.recall / (jm.precision + jm.recall)
                : 0.0;
    if (c.tp > 0) {
      jm.rmse = std::sqrt(c.squared_error / tp);
      rmse_sum += *jm.rmse;
      ++rmse_count;
    }
    table.precision += jm.precision;
    table.recall += jm.recall;
    table.f1 += jm.f1;
    table.joints.push_back(std::move(jm));
  }
  if (!table.joints.empty()) {
    const auto k = static_cast<double>(table.joints.size());
    table.precision /= k;
    table.recall /= k;
    table.f1 /= k;
  }
  if (rmse_count > 0) table.rmse = rmse_sum / static_cast<double>(rmse_count);
  return table;
}

MetricsTable compute_metrics(std::span<const JointMatch> matches, std::vector<std::string> joint_order) {
  MetricsAccumulator acc(std::move(joint_order));
  for (const auto& m : matches) acc.add(m.joint, m.match);
  return acc.finish();
}

MetricsTable evaluate_frames(std::span<const FramePoses> predictions,
                             std::span<const FrameAnnotations> truth,
                             std::vector<std::string> joint_order, const EvalConfig& cfg) {
  cfg.validate();
  std::unordered_map<std::string, const FramePoses*> pred_by_id;
  for (const auto& p : predictions) {
    if (!pred_by_id.emplace(p.frame_id, &p).second) {
      throw InvalidInput("duplicate prediction frame id '" + p.frame_id + "'");
    }
  }
  std::unordered_map<std::string, const FrameAnnotations*> truth_by_id;
  for (const auto& t : truth) {
    if (!truth_by_id.emplace(t.frame_id, &t).second) {
      throw InvalidInput("duplicate ground-truth frame id '" + t.frame_id + "'");
    }
  }

  MetricsAccumulator acc(std::move(joint_order));
  const auto scaled = [&](Point p) { return Point{p.x * cfg.frame_scale, p.y * cfg.frame_scale}; };
  const auto eval_frame = [&](const FramePoses* pred, const FrameAnnotations* gt) {
    std::map<std::string, std::pair<std::vector<Point>, std::vector<Point>>> per_joint;
    std::vector<std::string> seen;
    const auto slot = [&](const std::string& name) -> auto& {
      auto [it, fresh] = per_joint.try_emplace(name);
      if (fresh) seen.push_back(name);
      return it->second;
    };
    if (gt) {
      for (const auto& inst : gt->instruments)
        for (const auto& [name, p] : inst.joints) slot(name).second.push_back(scaled(p));
    }
    if (pred) {
      for (const auto& pose : pred->poses)
        for (const auto& [name, j] : pose.joints)
          if (j.score >= cfg.min_score) slot(name).first.push_back(scaled(j.position));
    }
    for (const auto& name : seen) {
      const auto& [preds, gts] = per_joint[name];
      acc.add(name, match_detections(preds, gts, cfg));
    }
  };
  for (const auto& t : truth) {
    const auto it = pred_by_id.find(t.frame_id);
    eval_frame(it == pred_by_id.end() ? nullptr : it->second, &t);
  }
  for (const auto& p : predictions) {
    if (!truth_by_id.contains(p.frame_id)) eval_frame(&p, nullptr);
  }
  return acc.finish();
}

void write_metrics_table(std::ostream& out, const MetricsTable& table) {
  std::size_t name_w = 7;
  for (const auto& j : table.joints) name_w = std::max(name_w, j.joint.size());
  char line[256];
  std::snprintf(line, sizeof line, "%-*s %9s %9s %9s %9s %7s %7s %7s\n", static_cast<int>(name_w),
                "joint", "precision", "recall", "f1", "rmse", "tp", "fp", "fn");
  out << line;
  for (const auto& j : table.joints) {
    std::snprintf(line, sizeof line, "%-*s %9.4f %9.4f %9.4f %9s %7zu %7zu %7zu\n",
                  static_cast<int>(name_w), j.joint.c_str(), j.precision, j.recall, j.f1,
                  format_rmse(j.rmse).c_str(), j.true_positives, j.false_positives,
                  j.false_negatives);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-*s %9.4f %9.4f %9.4f %9s\n", static_cast<int>(name_w),
                "average", table.precision, table.recall, table.f1, format_rmse(table.rmse).c_str());
  out << line;
}

void write_metrics_records(std::ostream& out, const MetricsTable& table) {
  for (const auto& j : table.joints) {
    out << "joint=" << j.joint << " tp=" << j.true_positives << " fp=" << j.false_positives
        << " fn=" << j.false_negatives << " precision=" << format_fixed(j.precision, 6)
        << " recall=" << format_fixed(j.recall, 6) << " f1=" << format_fixed(j.f1, 6)
        << " rmse=" << (j.rmse ? format_fixed(*j.rmse, 6) : "na") << '\n';
  }
  out << "joint=average precision=" << format_fixed(table.precision, 6)
      << " recall=" << format_fixed(table.recall, 6) << " f1=" << format_fixed(table.f1, 6)
      << " rmse=" << (table.rmse ? format_fixed(*table.rmse, 6) : "na") << '\n';
}

}  // namespace toolpose
