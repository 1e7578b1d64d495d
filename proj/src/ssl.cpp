#include "toolpose/ssl.hpp"

#include <unordered_set>

#include "toolpose/error.hpp"

namespace toolpose {

std::string_view to_string(InstrumentMode mode) {
  return mode == InstrumentMode::multi ? "multi" : "single";
}

InstrumentMode parse_instrument_mode(std::string_view s) {
  if (s == "multi") return InstrumentMode::multi;
  if (s == "single") return InstrumentMode::single;
  throw InvalidInput("unknown mode '" + std::string(s) + "' (expected single or multi)");
}

void PseudoLabelConfig::validate() const {
  if (!(tv_threshold_multi > 0.0) || !(tv_threshold_single > 0.0)) {
    throw InvalidInput("pseudo-label TV thresholds must be > 0");
  }
}

void EmaConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("EMA alpha must lie in [0, 1]");
}

GateDecision gate_tv_total(double tv_total, const PseudoLabelConfig& cfg) {
  cfg.validate();
  const double t = cfg.threshold();
  return GateDecision{tv_total >= t, tv_total, t};
}

GateDecision gate_pseudo_label(const Heatmap& maps, const PseudoLabelConfig& cfg) {
  return gate_tv_total(total_variation(maps).total, cfg);
}

SelectionReport select_pool_totals(std::span<const ScoredFrame> pool, const PseudoLabelConfig& cfg) {
  cfg.validate();
  SelectionReport report;
  report.threshold = cfg.threshold();
  report.mode = cfg.mode;
  std::unordered_set<std::string> seen;
  for (const auto& f : pool) {
    if (!seen.insert(f.frame_id).second) throw InvalidInput("duplicate frame id '" + f.frame_id + "'");
  }
  for (const auto& f : pool) {
    (gate_tv_total(f.tv_total, cfg).accept ? report.accepted : report.rejected).push_back(f);
  }
  return report;
}

SelectionReport select_pool(std::span<const PoolEntry> pool, const PseudoLabelConfig& cfg) {
  std::vector<ScoredFrame> totals;
  totals.reserve(pool.size());
  for (const auto& e : pool) totals.push_back({e.frame_id, total_variation(e.maps).total});
  return select_pool_totals(totals, cfg);
}

std::vector<double> ema_update(std::span<const double> teacher, std::span<const double> student,
                               const EmaConfig& cfg) {
  cfg.validate();
  if (teacher.size() != student.size()) {
    throw InvalidInput("teacher and student parameter vectors differ in length");
  }
  std::vector<double> out(teacher.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = cfg.alpha * teacher[i] + (1.0 - cfg.alpha) * student[i];
  }
  return out;
}

}  // namespace toolpose
