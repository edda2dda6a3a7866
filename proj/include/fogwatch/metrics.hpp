#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fogwatch/common.hpp"
#include "fogwatch/trace.hpp"

namespace fogwatch::metrics {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
};

ConfusionCounts confusion(std::span<const Label> truth, std::span<const Label> decision);

/// Rates are empty when their denominator is zero.
struct WindowMetrics {
  ConfusionCounts counts;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> precision;
  std::optional<double> f1;
  double accuracy = 0.0;
};

WindowMetrics window_metrics(const ConfusionCounts& c);
WindowMetrics window_metrics(const PredictionTrace& trace);

/// Mann-Whitney AUC with midranks for ties. Throws Undefined when either
/// class is absent.
double roc_auc(std::span<const double> scores, std::span<const Label> truth);
double roc_auc(const PredictionTrace& trace);

enum class Bucket { Short, Medium, Long };
const char* bucket_name(Bucket b);
/// < 6 s Short, 6..12 s inclusive Medium, > 12 s Long.
Bucket bucket_for(double duration_s);

struct Episode {
  std::size_t start_window = 0;
  std::size_t end_window = 0;  ///< inclusive
  double duration_s = 0.0;
  Bucket bucket = Bucket::Short;

  std::size_t length() const { return end_window - start_window + 1; }
};

/// Maximal runs of FoG windows; a run never crosses an index in `breaks`.
std::vector<Episode> extract_episodes(std::span<const Label> labels, double window_s = 3.0, double hop_s = 1.5,
                                      std::span<const std::size_t> breaks = {});

struct EpisodeDetail {
  Episode episode;
  bool detected = false;
  std::size_t n_detected = 0;
  double dfog_pct = 0.0;
  std::optional<double> latency_s;
};

struct FalsePositiveRun {
  Episode run;
  /// Edge-to-edge gap (s) to the closest true FoG window; empty when the
  /// stream has no FoG at all.
  std::optional<double> min_distance_s;
  std::optional<double> after_prev_s;  ///< gap since the preceding true episode ended
  std::optional<double> before_next_s; ///< gap until the following true episode starts
};

struct BucketStats {
  std::size_t n_episodes = 0;
  std::size_t n_detected = 0;
  std::optional<double> dfe_pct;
  std::optional<double> dfog_mean_pct;
  std::optional<double> latency_mean_s;
  std::optional<double> latency_sd_s;
  std::optional<double> latency_max_s;
};

struct EpisodeReport {
  std::vector<EpisodeDetail> episodes;
  std::vector<FalsePositiveRun> fp_runs;
  BucketStats overall;
  BucketStats short_bucket;
  BucketStats medium_bucket;
  BucketStats long_bucket;
  std::optional<double> dfw_trace_pct;          ///< detected FoG windows / FoG windows, whole trace
  std::optional<double> dfog_per_episode_mean;  ///< mean of per-episode D_FoG
  std::optional<double> fp_min_distance_mean_s;

  const BucketStats& bucket(Bucket b) const;
};

EpisodeReport episode_report(const PredictionTrace& trace);

/// Flips interior decisions whose two neighbours agree with each other and
/// disagree with it, reading the previous pass's decisions. Boundaries (and
/// windows next to a stream break) are never altered.
PredictionTrace majority_vote(const PredictionTrace& trace, std::size_t passes = 1);

// Emitters.
std::string report_json(const WindowMetrics& wm, std::optional<double> auc, const EpisodeReport& er);
std::string report_text(const WindowMetrics& wm, std::optional<double> auc, const EpisodeReport& er);
/// episode_id,bucket,duration_s,detected,dfog_pct,latency_s
std::string episodes_csv(const EpisodeReport& er);

}  // namespace fogwatch::metrics
