#pragma once

#include <limits>
#include <string>
#include <vector>

#include "fogwatch/common.hpp"

namespace fogwatch {

/// One inference window: ground truth, model output, gate outcome and cost.
struct TraceEntry {
  std::size_t start_index = 0;
  Label truth = Label::NonFoG;
  double fog_fraction = 0.0;
  double magnitude = std::numeric_limits<double>::quiet_NaN();
  double probability = 0.0;
  Label decision = Label::NonFoG;
  bool active = true;  ///< false when the gate skipped the model
  double gate_ms = 0.0;
  double model_ms = 0.0;
};

/// Time-ordered predictions for one stream (or a concatenation of streams
/// whose episodes are treated independently via `segment_breaks`).
struct PredictionTrace {
  std::vector<TraceEntry> entries;
  double window_s = 3.0;
  double hop_s = 1.5;
  std::string subject_id;
  /// Indices where a new stream starts; runs never span a break.
  std::vector<std::size_t> segment_breaks;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  std::vector<Label> truths() const {
    std::vector<Label> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.truth);
    return out;
  }
  std::vector<Label> decisions() const {
    std::vector<Label> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.decision);
    return out;
  }
  std::vector<double> probabilities() const {
    std::vector<double> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.probability);
    return out;
  }
  bool is_break(std::size_t i) const {
    for (auto b : segment_breaks)
      if (b == i) return true;
    return false;
  }

  void append(const PredictionTrace& other) {
    if (other.empty()) return;
    if (!entries.empty()) segment_breaks.push_back(entries.size());
    for (auto b : other.segment_breaks) segment_breaks.push_back(entries.size() + b);
    entries.insert(entries.end(), other.entries.begin(), other.entries.end());
  }
};

/// index,start_index,truth,fog_fraction,magnitude,probability,decision,active,
/// stream_start,gate_ms,model_ms. Timing columns are left out when
/// `include_timing` is false.
std::string format_trace_csv(const PredictionTrace& trace, bool include_timing = true);
/// Reads either layout; window_s and hop_s are not stored and keep defaults.
PredictionTrace parse_trace_csv(const std::string& text);

}  // namespace fogwatch
