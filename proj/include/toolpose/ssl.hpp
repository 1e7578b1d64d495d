#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toolpose/heatmap.hpp"

namespace toolpose {

enum class InstrumentMode { single, multi };

std::string_view to_string(InstrumentMode mode);
InstrumentMode parse_instrument_mode(std::string_view s);

struct PseudoLabelConfig {
  double tv_threshold_multi = 1000.0;
  double tv_threshold_single = 400.0;
  InstrumentMode mode = InstrumentMode::multi;

  void validate() const;
  double threshold() const {
    return mode == InstrumentMode::multi ? tv_threshold_multi : tv_threshold_single;
  }
};

struct EmaConfig {
  double alpha = 0.95;

  void validate() const;
};

struct GateDecision {
  bool accept = false;
  double tv_total = 0.0;
  double threshold = 0.0;
};

// Accepts when the TV total reaches the mode's threshold (inclusive).
GateDecision gate_tv_total(double tv_total, const PseudoLabelConfig& cfg);
GateDecision gate_pseudo_label(const Heatmap& maps, const PseudoLabelConfig& cfg);

struct ScoredFrame {
  std::string frame_id;
  double tv_total = 0.0;
};

struct SelectionReport {
  std::vector<ScoredFrame> accepted;
  std::vector<ScoredFrame> rejected;
  double threshold = 0.0;
  InstrumentMode mode = InstrumentMode::multi;
};

struct PoolEntry {
  std::string frame_id;
  Heatmap maps;
};

// Input order is preserved inside each partition. Duplicate ids are rejected.
SelectionReport select_pool(std::span<const PoolEntry> pool, const PseudoLabelConfig& cfg);
SelectionReport select_pool_totals(std::span<const ScoredFrame> pool, const PseudoLabelConfig& cfg);

// Mean-teacher update: alpha * teacher + (1 - alpha) * student.
std::vector<double> ema_update(std::span<const double> teacher, std::span<const double> student,
                               const EmaConfig& cfg = {});

}  // namespace toolpose
