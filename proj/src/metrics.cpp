#include "fogwatch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "text_util.hpp"

namespace fogwatch::metrics {

using nlohmann::json;

ConfusionCounts confusion(std::span<const Label> truth, std::span<const Label> decision) {
  if (truth.size() != decision.size()) throw DataError(DataError::Kind::Structural, "truth/decision length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == Label::FoG;
    const bool d = decision[i] == Label::FoG;
    if (t && d) ++c.tp;
    else if (!t && d) ++c.fp;
    else if (t && !d) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {
std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

WindowMetrics window_metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw DataError(DataError::Kind::EmptyInput, "no windows to score");
  WindowMetrics m;
  m.counts = c;
  m.sensitivity = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  return m;
}

WindowMetrics window_metrics(const PredictionTrace& trace) {
  if (trace.empty()) throw DataError(DataError::Kind::EmptyInput, "empty prediction trace");
  return window_metrics(confusion(trace.truths(), trace.decisions()));
}

double roc_auc(std::span<const double> scores, std::span<const Label> truth) {
  if (scores.size() != truth.size()) throw DataError(DataError::Kind::Structural, "score/label length mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (auto l : truth) n_pos += l == Label::FoG ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError(DataError::Kind::Undefined, "AUC needs both classes present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;  // ranks are 1-based
    for (std::size_t k = i; k <= j; ++k)
      if (truth[order[k]] == Label::FoG) pos_rank_sum += midrank;
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double roc_auc(const PredictionTrace& trace) { return roc_auc(trace.probabilities(), trace.truths()); }

const char* bucket_name(Bucket b) {
  switch (b) {
    case Bucket::Short: return "short";
    case Bucket::Medium: return "medium";
    case Bucket::Long: return "long";
  }
  return "?";
}

Bucket bucket_for(double d) {
  if (d < 6.0) return Bucket::Short;
  if (d <= 12.0) return Bucket::Medium;
  return Bucket::Long;
}

namespace {

bool in_breaks(std::span<const std::size_t> breaks, std::size_t i) {
  return std::find(breaks.begin(), breaks.end(), i) != breaks.end();
}

template <typename Pred>
std::vector<Episode> runs(std::size_t n, Pred is_on, double window_s, double hop_s,
                          std::span<const std::size_t> breaks) {
  std::vector<Episode> out;
  for (std::size_t i = 0; i < n;) {
    if (!is_on(i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && is_on(j + 1) && !in_breaks(breaks, j + 1)) ++j;
    Episode e;
    e.start_window = i;
    e.end_window = j;
    e.duration_s = window_s + static_cast<double>(j - i) * hop_s;
    e.bucket = bucket_for(e.duration_s);
    out.push_back(e);
    i = j + 1;
  }
  return out;
}

// [begin, end) of the stream segment holding window i.
std::pair<std::size_t, std::size_t> segment_of(std::size_t i, std::size_t n, std::span<const std::size_t> breaks) {
  std::size_t lo = 0;
  std::size_t hi = n;
  for (auto b : breaks) {
    if (b <= i) lo = std::max(lo, b);
    else hi = std::min(hi, b);
  }
  return {lo, hi};
}

BucketStats bucket_stats(const std::vector<const EpisodeDetail*>& eps) {
  BucketStats s;
  s.n_episodes = eps.size();
  if (eps.empty()) return s;
  double dfog = 0.0;
  std::vector<double> lat;
  for (const auto* e : eps) {
    if (e->detected) ++s.n_detected;
    dfog += e->dfog_pct;
    if (e->latency_s) lat.push_back(*e->latency_s);
  }
  s.dfe_pct = 100.0 * static_cast<double>(s.n_detected) / static_cast<double>(eps.size());
  s.dfog_mean_pct = dfog / static_cast<double>(eps.size());
  if (!lat.empty()) {
    const double mean = std::accumulate(lat.begin(), lat.end(), 0.0) / static_cast<double>(lat.size());
    double ss = 0.0;
    for (double v : lat) ss += (v - mean) * (v - mean);
    s.latency_mean_s = mean;
    s.latency_sd_s = lat.size() < 2 ? 0.0 : std::sqrt(ss / static_cast<double>(lat.size() - 1));
    s.latency_max_s = *std::max_element(lat.begin(), lat.end());
  }
  return s;
}

}  // namespace

std::vector<Episode> extract_episodes(std::span<const Label> labels, double window_s, double hop_s,
                                      std::span<const std::size_t> breaks) {
  return runs(
      labels.size(), [&](std::size_t i) { return labels[i] == Label::FoG; }, window_s, hop_s, breaks);
}

const BucketStats& EpisodeReport::bucket(Bucket b) const {
  switch (b) {
    case Bucket::Short: return short_bucket;
    case Bucket::Medium: return medium_bucket;
    case Bucket::Long: return long_bucket;
  }
  return overall;
}

EpisodeReport episode_report(const PredictionTrace& trace) {
  const auto truth = trace.truths();
  const auto dec = trace.decisions();
  const std::size_t n = truth.size();
  EpisodeReport r;

  const auto eps = extract_episodes(truth, trace.window_s, trace.hop_s, trace.segment_breaks);
  std::size_t fog_windows = 0;
  std::size_t fog_detected = 0;
  for (const auto& ep : eps) {
    EpisodeDetail d;
    d.episode = ep;
    for (std::size_t i = ep.start_window; i <= ep.end_window; ++i) {
      if (dec[i] != Label::FoG) continue;
      if (!d.detected) d.latency_s = static_cast<double>(i - ep.start_window) * trace.hop_s;
      d.detected = true;
      ++d.n_detected;
    }
    d.dfog_pct = 100.0 * static_cast<double>(d.n_detected) / static_cast<double>(ep.length());
    fog_windows += ep.length();
    fog_detected += d.n_detected;
    r.episodes.push_back(d);
  }

  std::vector<const EpisodeDetail*> all, sh, me, lo;
  for (const auto& d : r.episodes) {
    all.push_back(&d);
    (d.episode.bucket == Bucket::Short ? sh : d.episode.bucket == Bucket::Medium ? me : lo).push_back(&d);
  }
  r.overall = bucket_stats(all);
  r.short_bucket = bucket_stats(sh);
  r.medium_bucket = bucket_stats(me);
  r.long_bucket = bucket_stats(lo);
  if (fog_windows > 0) r.dfw_trace_pct = 100.0 * static_cast<double>(fog_detected) / static_cast<double>(fog_windows);
  if (!r.episodes.empty()) r.dfog_per_episode_mean = r.overall.dfog_mean_pct;

  const auto pred_runs = runs(
      n, [&](std::size_t i) { return dec[i] == Label::FoG; }, trace.window_s, trace.hop_s, trace.segment_breaks);
  double fp_dist_sum = 0.0;
  std::size_t fp_dist_n = 0;
  for (const auto& run : pred_runs) {
    bool overlaps = false;
    for (std::size_t i = run.start_window; i <= run.end_window && !overlaps; ++i) overlaps = truth[i] == Label::FoG;
    if (overlaps) continue;
    FalsePositiveRun fp;
    fp.run = run;
    const auto [lo_i, hi_i] = segment_of(run.start_window, n, trace.segment_breaks);
    for (const auto& ep : eps) {
      if (ep.start_window < lo_i || ep.start_window >= hi_i) continue;
      if (ep.end_window < run.start_window) {
        const double gap = static_cast<double>(run.start_window - ep.end_window) * trace.hop_s;
        fp.after_prev_s = gap;  // episodes are in order, so the last one wins
      } else if (ep.start_window > run.end_window && !fp.before_next_s) {
        fp.before_next_s = static_cast<double>(ep.start_window - run.end_window) * trace.hop_s;
      }
    }
    if (fp.after_prev_s && fp.before_next_s) fp.min_distance_s = std::min(*fp.after_prev_s, *fp.before_next_s);
    else if (fp.after_prev_s) fp.min_distance_s = fp.after_prev_s;
    else if (fp.before_next_s) fp.min_distance_s = fp.before_next_s;
    if (fp.min_distance_s) {
      fp_dist_sum += *fp.min_distance_s;
      ++fp_dist_n;
    }
    r.fp_runs.push_back(fp);
  }
  if (fp_dist_n > 0) r.fp_min_distance_mean_s = fp_dist_sum / static_cast<double>(fp_dist_n);
  return r;
}

PredictionTrace majority_vote(const PredictionTrace& trace, std::size_t passes) {
  PredictionTrace out = trace;
  const std::size_t n = trace.size();
  if (n < 3) return out;
  for (std::size_t p = 0; p < passes; ++p) {
    const auto prev = out.decisions();
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (trace.is_break(i) || trace.is_break(i + 1)) continue;
      if (prev[i - 1] == prev[i + 1] && prev[i] != prev[i - 1]) out.entries[i].decision = prev[i - 1];
    }
  }
  return out;
}

namespace {

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json bucket_json(const BucketStats& s) {
  return json{{"n_episodes", s.n_episodes},
              {"n_detected", s.n_detected},
              {"dfe_pct", opt_json(s.dfe_pct)},
              {"dfog_mean_pct", opt_json(s.dfog_mean_pct)},
              {"latency_mean_s", opt_json(s.latency_mean_s)},
              {"latency_sd_s", opt_json(s.latency_sd_s)},
              {"latency_max_s", opt_json(s.latency_max_s)}};
}

std::string opt_str(const std::optional<double>& v, int decimals = 4) {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, *v);
  return buf;
}

}  // namespace

std::string report_json(const WindowMetrics& wm, std::optional<double> auc, const EpisodeReport& er) {
  json fps = json::array();
  for (const auto& fp : er.fp_runs)
    fps.push_back(json{{"start_window", fp.run.start_window},
                       {"end_window", fp.run.end_window},
                       {"min_distance_s", opt_json(fp.min_distance_s)},
                       {"after_prev_s", opt_json(fp.after_prev_s)},
                       {"before_next_s", opt_json(fp.before_next_s)}});
  json j{{"window",
          {{"tp", wm.counts.tp},
           {"fp", wm.counts.fp},
           {"fn", wm.counts.fn},
           {"tn", wm.counts.tn},
           {"sensitivity", opt_json(wm.sensitivity)},
           {"specificity", opt_json(wm.specificity)},
           {"precision", opt_json(wm.precision)},
           {"f1", opt_json(wm.f1)},
           {"accuracy", wm.accuracy},
           {"auc", opt_json(auc)}}},
         {"episodes",
          {{"overall", bucket_json(er.overall)},
           {"short", bucket_json(er.short_bucket)},
           {"medium", bucket_json(er.medium_bucket)},
           {"long", bucket_json(er.long_bucket)},
           {"dfw_trace_pct", opt_json(er.dfw_trace_pct)},
           {"dfog_per_episode_mean", opt_json(er.dfog_per_episode_mean)}}},
         {"false_positive_runs", fps},
         {"fp_min_distance_mean_s", opt_json(er.fp_min_distance_mean_s)}};
  return j.dump(2) + "\n";
}

std::string report_text(const WindowMetrics& wm, std::optional<double> auc, const EpisodeReport& er) {
  std::ostringstream os;
  char line[256];
  os << "window metrics\n";
  std::snprintf(line, sizeof line, "  tp %zu  fp %zu  fn %zu  tn %zu\n", wm.counts.tp, wm.counts.fp, wm.counts.fn,
                wm.counts.tn);
  os << line;
  const std::pair<const char*, std::optional<double>> rows[] = {
      {"sensitivity", wm.sensitivity}, {"specificity", wm.specificity}, {"precision", wm.precision},
      {"f1", wm.f1},                   {"accuracy", wm.accuracy},       {"auc", auc}};
  for (const auto& [name, v] : rows) {
    std::snprintf(line, sizeof line, "  %-12s %10s\n", name, opt_str(v).c_str());
    os << line;
  }
  os << "\nepisodes\n";
  std::snprintf(line, sizeof line, "  %-8s %6s %6s %9s %10s %11s %10s %10s\n", "bucket", "n", "det", "DFE%",
                "D_FoG%", "lat_mean_s", "lat_sd_s", "lat_max_s");
  os << line;
  const std::pair<const char*, const BucketStats*> buckets[] = {{"short", &er.short_bucket},
                                                                {"medium", &er.medium_bucket},
                                                                {"long", &er.long_bucket},
                                                                {"overall", &er.overall}};
  for (const auto& [name, s] : buckets) {
    std::snprintf(line, sizeof line, "  %-8s %6zu %6zu %9s %10s %11s %10s %10s\n", name, s->n_episodes,
                  s->n_detected, opt_str(s->dfe_pct, 2).c_str(), opt_str(s->dfog_mean_pct, 2).c_str(),
                  opt_str(s->latency_mean_s, 2).c_str(), opt_str(s->latency_sd_s, 2).c_str(),
                  opt_str(s->latency_max_s, 2).c_str());
    os << line;
  }
  std::snprintf(line, sizeof line, "  DFW (trace) %s%%   D_FoG (episode mean) %s%%\n",
                opt_str(er.dfw_trace_pct, 2).c_str(), opt_str(er.dfog_per_episode_mean, 2).c_str());
  os << line;
  std::snprintf(line, sizeof line, "  false-positive runs %zu, mean distance to FoG %s s\n", er.fp_runs.size(),
                opt_str(er.fp_min_distance_mean_s, 2).c_str());
  os << line;
  return os.str();
}

std::string episodes_csv(const EpisodeReport& er) {
  std::string out = "episode_id,bucket,duration_s,detected,dfog_pct,latency_s\n";
  for (std::size_t i = 0; i < er.episodes.size(); ++i) {
    const auto& d = er.episodes[i];
    out += std::to_string(i) + "," + bucket_name(d.episode.bucket) + "," +
           detail::format_double(d.episode.duration_s) + "," + (d.detected ? "1" : "0") + "," +
           detail::format_double(d.dfog_pct) + "," + (d.latency_s ? detail::format_double(*d.latency_s) : "") + "\n";
  }
  return out;
}

}  // namespace fogwatch::metrics
