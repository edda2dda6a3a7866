#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fogwatch/common.hpp"
#include "fogwatch/trace.hpp"
#include "fogwatch/windowing.hpp"

namespace fogwatch::gate {

/// Mean Euclidean norm of the samples of a raw (not mean-removed) window.
template <typename Derived>
double magnitude(const Eigen::MatrixBase<Derived>& frame) {
  if (frame.cols() != 3)
    throw DataError(DataError::Kind::Structural, "magnitude needs 3 channels, got " + std::to_string(frame.cols()));
  if (frame.rows() == 0) return 0.0;
  return frame.template cast<double>().rowwise().norm().mean();
}

/// Magnitudes of every window of a set, from the raw frames.
std::vector<double> magnitudes(const WindowSet& ws);

struct GateConfig {
  double alpha = 0.0;  ///< in the stream's unit (g for canonical data)

  void validate() const {
    if (!(alpha >= 0.0)) throw ConfigError("gate alpha must be non-negative");
  }
};

struct GateResult {
  std::vector<std::size_t> active;
  std::vector<std::size_t> rejected;
  double rejection_ratio = 0.0;
};

/// Window i is active iff magnitude_i >= alpha.
GateResult gate(std::span<const double> magnitudes, const GateConfig& cfg);
GateResult gate(const WindowSet& ws, const GateConfig& cfg);

/// Applies a gate to an ungated trace without re-running the model: rejected
/// windows become inactive, NonFoG with probability 0 and no model cost.
PredictionTrace apply_gate(const PredictionTrace& ungated, const GateConfig& cfg);

/// Probability of FoG for one mean-removed frame.
using FrameClassifier = std::function<double(const Frame&)>;

/// Runs the gate (when given) and the classifier on each window, skipping the
/// classifier for rejected windows, and times both.
PredictionTrace run_inference(const WindowSet& ws, const FrameClassifier& model,
                              const std::optional<GateConfig>& cfg = std::nullopt);

enum class Metric { F1, Sensitivity, Accuracy };
const char* metric_name(Metric m);
Metric parse_metric(const std::string& s);

/// Performance of decisions against truth; an undefined rate counts as 0.
double performance(Metric m, std::span<const Label> truth, std::span<const Label> decisions);

struct AtoConfig {
  double alpha_start = 0.0;
  double alpha_final = 1.2;
  double delta_alpha = 0.05;
  double tolerance = 0.02;
  Metric baseline_metric = Metric::F1;

  void validate() const;
  /// ceil((final - start) / delta) + 1
  std::size_t max_evaluations() const;
};

struct AtoStep {
  double alpha = 0.0;
  std::size_t n_active = 0;
  double performance = 0.0;
  bool within_tolerance = true;
};

struct AtoResult {
  double alpha_opt = 0.0;
  std::vector<std::size_t> active;
  std::vector<AtoStep> sweep_log;
  double baseline = 0.0;  ///< P0, measured at alpha_start
  bool no_degradation_found = false;
  std::optional<double> break_alpha;  ///< first alpha outside tolerance
  std::size_t evaluations = 0;        ///< number of gate evaluations
};

/// Decisions for the listed active windows, in the same order.
using ActiveModel = std::function<std::vector<Label>(const std::vector<std::size_t>& active)>;

/// Activity threshold optimisation: raises alpha in steps of delta_alpha and
/// keeps the largest alpha whose performance stays within tolerance of P0.
/// Rejected windows count as NonFoG.
AtoResult ato(std::span<const double> magnitudes, std::span<const Label> truth, const ActiveModel& model,
              const AtoConfig& cfg);

struct DutyCycle {
  std::size_t n_active = 0;
  std::size_t n_rejected = 0;
  double mean_active_ms = 0.0;    ///< gate + model cost of active windows
  double mean_rejected_ms = 0.0;  ///< gate cost of rejected windows
  double gated_total_ms = 0.0;
  double ungated_total_ms = 0.0;
  double saved_fraction = 0.0;  ///< 1 - gated / ungated
};

/// Ungated cost estimated as every window paying the mean model cost of the
/// active windows.
DutyCycle duty_cycle_report(const PredictionTrace& gated);
/// Ungated cost measured on a reference run without the gate.
DutyCycle duty_cycle_report(const PredictionTrace& gated, const PredictionTrace& ungated);

struct SweepRow {
  double alpha = 0.0;
  std::size_t n_active = 0;
  double rejection_ratio = 0.0;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> f1;
  double mean_inference_ms = 0.0;  ///< mean gate + model cost per window
};

std::vector<SweepRow> gate_sweep(const PredictionTrace& ungated, std::span<const double> alphas);
/// `count` evenly spaced thresholds from lo to hi inclusive.
std::vector<double> alpha_grid(double lo, double hi, std::size_t count);

/// alpha,n_active,rejection_ratio,sensitivity,specificity,f1,mean_inference_ms
std::string sweep_csv(const std::vector<SweepRow>& rows, bool include_timing = true);
std::string ato_log_csv(const AtoResult& r);

}  // namespace fogwatch::gate
