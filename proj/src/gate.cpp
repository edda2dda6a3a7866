#include "fogwatch/gate.hpp"

#include <chrono>
#include <cmath>

#include "fogwatch/metrics.hpp"
#include "text_util.hpp"

namespace fogwatch::gate {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0, Clock::time_point t1) {
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

std::string opt_csv(const std::optional<double>& v) { return v ? detail::format_double(*v) : ""; }

}  // namespace

std::vector<double> magnitudes(const WindowSet& ws) {
  std::vector<double> out(ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) out[i] = magnitude(ws.raw_frame(i));
  return out;
}

GateResult gate(std::span<const double> mags, const GateConfig& cfg) {
  cfg.validate();
  GateResult r;
  for (std::size_t i = 0; i < mags.size(); ++i) (mags[i] >= cfg.alpha ? r.active : r.rejected).push_back(i);
  r.rejection_ratio = mags.empty() ? 0.0 : static_cast<double>(r.rejected.size()) / static_cast<double>(mags.size());
  return r;
}

GateResult gate(const WindowSet& ws, const GateConfig& cfg) { return gate(magnitudes(ws), cfg); }

PredictionTrace apply_gate(const PredictionTrace& ungated, const GateConfig& cfg) {
  cfg.validate();
  PredictionTrace out = ungated;
  for (auto& e : out.entries) {
    if (std::isnan(e.magnitude)) throw DataError(DataError::Kind::Structural, "trace has no window magnitudes");
    if (e.magnitude >= cfg.alpha) continue;
    e.active = false;
    e.probability = 0.0;
    e.decision = Label::NonFoG;
    e.model_ms = 0.0;
  }
  return out;
}

PredictionTrace run_inference(const WindowSet& ws, const FrameClassifier& model, const std::optional<GateConfig>& cfg) {
  if (cfg) cfg->validate();
  PredictionTrace trace;
  trace.subject_id = ws.subject_id;
  if (ws.rate_hz > 0) {
    trace.window_s = static_cast<double>(ws.spec.window_samples(ws.rate_hz)) / ws.rate_hz;
    trace.hop_s = static_cast<double>(ws.spec.hop_nonfog_samples(ws.rate_hz)) / ws.rate_hz;
  }
  trace.entries.resize(ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) {
    auto& e = trace.entries[i];
    e.start_index = i < ws.start_index.size() ? ws.start_index[i] : i;
    e.truth = ws.labels[i];
    e.fog_fraction = i < ws.fog_fraction.size() ? ws.fog_fraction[i] : 0.0;
    if (cfg) {
      const auto t0 = Clock::now();
      e.magnitude = magnitude(ws.raw_frame(i));
      e.active = e.magnitude >= cfg->alpha;
      e.gate_ms = ms_since(t0, Clock::now());
    } else {
      e.magnitude = magnitude(ws.raw_frame(i));
    }
    if (!e.active) continue;
    const auto t0 = Clock::now();
    e.probability = model(ws.frames[i]);
    e.model_ms = ms_since(t0, Clock::now());
    e.decision = e.probability >= 0.5 ? Label::FoG : Label::NonFoG;
  }
  return trace;
}

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::F1: return "f1";
    case Metric::Sensitivity: return "sensitivity";
    case Metric::Accuracy: return "accuracy";
  }
  return "?";
}

Metric parse_metric(const std::string& s) {
  if (s == "f1") return Metric::F1;
  if (s == "sensitivity" || s == "sens" || s == "recall") return Metric::Sensitivity;
  if (s == "accuracy" || s == "acc") return Metric::Accuracy;
  throw ConfigError("unknown metric '" + s + "' (expected f1, sensitivity or accuracy)");
}

double performance(Metric m, std::span<const Label> truth, std::span<const Label> decisions) {
  const auto wm = metrics::window_metrics(metrics::confusion(truth, decisions));
  switch (m) {
    case Metric::F1: return wm.f1.value_or(0.0);
    case Metric::Sensitivity: return wm.sensitivity.value_or(0.0);
    case Metric::Accuracy: return wm.accuracy;
  }
  return 0.0;
}

void AtoConfig::validate() const {
  if (!(delta_alpha > 0.0)) throw ConfigError("delta_alpha must be positive");
  if (!(alpha_start >= 0.0)) throw ConfigError("alpha_start must be non-negative");
  if (!(alpha_start <= alpha_final)) throw ConfigError("alpha_start must not exceed alpha_final");
  if (!(tolerance >= 0.0)) throw ConfigError("tolerance must be non-negative");
}

std::size_t AtoConfig::max_evaluations() const {
  const double steps = std::ceil((alpha_final - alpha_start) / delta_alpha - 1e-9);
  return static_cast<std::size_t>(std::max(0.0, steps)) + 1;
}

AtoResult ato(std::span<const double> mags, std::span<const Label> truth, const ActiveModel& model,
              const AtoConfig& cfg) {
  cfg.validate();
  if (mags.empty()) throw DataError(DataError::Kind::EmptyInput, "no windows to optimise the gate on");
  if (mags.size() != truth.size()) throw DataError(DataError::Kind::Structural, "magnitude/label length mismatch");

  AtoResult r;
  auto evaluate = [&](double alpha) {
    const auto g = gate(mags, GateConfig{alpha});
    std::vector<Label> dec(mags.size(), Label::NonFoG);
    if (!g.active.empty()) {
      const auto d = model(g.active);
      if (d.size() != g.active.size())
        throw DataError(DataError::Kind::Structural, "model returned the wrong number of decisions");
      for (std::size_t k = 0; k < d.size(); ++k) dec[g.active[k]] = d[k];
    }
    ++r.evaluations;
    return std::make_pair(g, performance(cfg.baseline_metric, truth, dec));
  };

  auto [g0, p0] = evaluate(cfg.alpha_start);
  r.baseline = p0;
  r.sweep_log.push_back({cfg.alpha_start, g0.active.size(), p0, true});
  r.alpha_opt = cfg.alpha_start;
  r.active = g0.active;

  const std::size_t last = cfg.max_evaluations() - 1;
  for (std::size_t k = 1; k <= last; ++k) {
    const double alpha = std::min(cfg.alpha_start + static_cast<double>(k) * cfg.delta_alpha, cfg.alpha_final);
    auto [g, p] = evaluate(alpha);
    const bool ok = std::abs(p - p0) <= cfg.tolerance;
    r.sweep_log.push_back({alpha, g.active.size(), p, ok});
    if (!ok) {
      r.break_alpha = alpha;
      return r;
    }
    r.alpha_opt = alpha;
    r.active = std::move(g.active);
  }
  r.no_degradation_found = true;
  return r;
}

namespace {

DutyCycle gated_costs(const PredictionTrace& gated) {
  DutyCycle d;
  double active_ms = 0.0;
  double rejected_ms = 0.0;
  for (const auto& e : gated.entries) {
    if (e.active) {
      ++d.n_active;
      active_ms += e.gate_ms + e.model_ms;
    } else {
      ++d.n_rejected;
      rejected_ms += e.gate_ms;
    }
  }
  d.gated_total_ms = active_ms + rejected_ms;
  d.mean_active_ms = d.n_active ? active_ms / static_cast<double>(d.n_active) : 0.0;
  d.mean_rejected_ms = d.n_rejected ? rejected_ms / static_cast<double>(d.n_rejected) : 0.0;
  return d;
}

void finish(DutyCycle& d) {
  if (!(d.ungated_total_ms > 0.0)) throw DataError(DataError::Kind::Undefined, "ungated inference cost is zero");
  d.saved_fraction = 1.0 - d.gated_total_ms / d.ungated_total_ms;
}

}  // namespace

DutyCycle duty_cycle_report(const PredictionTrace& gated) {
  if (gated.empty()) throw DataError(DataError::Kind::EmptyInput, "empty trace");
  DutyCycle d = gated_costs(gated);
  if (d.n_active == 0)
    throw DataError(DataError::Kind::Undefined, "no active windows: the ungated model cost cannot be estimated");
  double model_ms = 0.0;
  for (const auto& e : gated.entries)
    if (e.active) model_ms += e.model_ms;
  d.ungated_total_ms = model_ms / static_cast<double>(d.n_active) * static_cast<double>(gated.size());
  finish(d);
  return d;
}

DutyCycle duty_cycle_report(const PredictionTrace& gated, const PredictionTrace& ungated) {
  if (gated.empty()) throw DataError(DataError::Kind::EmptyInput, "empty trace");
  if (gated.size() != ungated.size()) throw DataError(DataError::Kind::Structural, "trace length mismatch");
  DutyCycle d = gated_costs(gated);
  for (const auto& e : ungated.entries) d.ungated_total_ms += e.model_ms;
  finish(d);
  return d;
}

std::vector<double> alpha_grid(double lo, double hi, std::size_t count) {
  if (count == 0) return {};
  if (count == 1) return {lo};
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return out;
}

std::vector<SweepRow> gate_sweep(const PredictionTrace& ungated, std::span<const double> alphas) {
  if (ungated.empty()) throw DataError(DataError::Kind::EmptyInput, "empty trace");
  std::vector<SweepRow> rows;
  for (double alpha : alphas) {
    const auto g = apply_gate(ungated, GateConfig{alpha});
    const auto wm = metrics::window_metrics(g);
    SweepRow row;
    row.alpha = alpha;
    double cost = 0.0;
    for (const auto& e : g.entries) {
      row.n_active += e.active ? 1 : 0;
      cost += e.gate_ms + e.model_ms;
    }
    row.rejection_ratio = static_cast<double>(g.size() - row.n_active) / static_cast<double>(g.size());
    row.sensitivity = wm.sensitivity;
    row.specificity = wm.specificity;
    row.f1 = wm.f1;
    row.mean_inference_ms = cost / static_cast<double>(g.size());
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, bool include_timing) {
  std::string out = "alpha,n_active,rejection_ratio,sensitivity,specificity,f1";
  out += include_timing ? ",mean_inference_ms\n" : "\n";
  for (const auto& r : rows) {
    out += detail::format_double(r.alpha) + "," + std::to_string(r.n_active) + "," +
           detail::format_double(r.rejection_ratio) + "," + opt_csv(r.sensitivity) + "," + opt_csv(r.specificity) +
           "," + opt_csv(r.f1);
    if (include_timing) out += "," + detail::format_double(r.mean_inference_ms);
    out += "\n";
  }
  return out;
}

std::string ato_log_csv(const AtoResult& r) {
  std::string out = "alpha,n_active,performance,within_tolerance\n";
  for (const auto& s : r.sweep_log)
    out += detail::format_double(s.alpha) + "," + std::to_string(s.n_active) + "," +
           detail::format_double(s.performance) + "," + (s.within_tolerance ? "1" : "0") + "\n";
  return out;
}

}  // namespace fogwatch::gate
