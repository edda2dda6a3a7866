// Reference implementations and hand-made fixtures shared by the unit tests
// and the acceptance runner.
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fogwatch/common.hpp"
#include "fogwatch/ingest.hpp"
#include "fogwatch/trace.hpp"

namespace fixture {

using fogwatch::Label;

inline std::vector<Label> labels_of(const std::vector<int>& bits) {
  std::vector<Label> out;
  for (int b : bits) out.push_back(b ? Label::FoG : Label::NonFoG);
  return out;
}

inline fogwatch::PredictionTrace make_trace(const std::vector<int>& truth, const std::vector<int>& decision) {
  fogwatch::PredictionTrace t;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    fogwatch::TraceEntry e;
    e.start_index = i * 60;
    e.truth = truth[i] ? Label::FoG : Label::NonFoG;
    e.decision = decision[i] ? Label::FoG : Label::NonFoG;
    e.probability = decision[i] ? 0.9 : 0.1;
    t.entries.push_back(e);
  }
  return t;
}

// Random stream with a few FoG episodes of random length.
inline fogwatch::SignalStream random_stream(fogwatch::Rng& rng, std::size_t n, double rate_hz = 40.0) {
  Eigen::Matrix<double, Eigen::Dynamic, 3> a(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = fogwatch::uniform(rng, -1.0, 1.0);
  std::vector<Label> labels(n, Label::NonFoG);
  const auto episodes = static_cast<std::size_t>(fogwatch::uniform(rng, 0.0, 5.0));
  for (std::size_t e = 0; e < episodes; ++e) {
    const auto start = static_cast<std::size_t>(fogwatch::uniform01(rng) * static_cast<double>(n));
    const auto len = static_cast<std::size_t>(fogwatch::uniform(rng, 10.0, 600.0));
    for (std::size_t i = start; i < std::min(n, start + len); ++i) labels[i] = Label::FoG;
  }
  return fogwatch::make_uniform_stream(a, labels, rate_hz);
}

// Walks every candidate start one sample at a time and emits a window
// whenever the walk reaches the next scheduled start.
struct DhwtWindow {
  std::size_t start;
  Label label;
};
inline std::vector<DhwtWindow> dhwt_oracle(const std::vector<Label>& labels, std::size_t win, std::size_t hop_non,
                                           std::size_t hop_fog, double threshold, bool train) {
  std::vector<DhwtWindow> out;
  std::size_t next = 0;
  for (std::size_t s = 0; s + win <= labels.size(); ++s) {
    if (s != next) continue;
    std::size_t fog = 0;
    for (std::size_t i = s; i < s + win; ++i) fog += labels[i] == Label::FoG;
    const bool is_fog = static_cast<double>(fog) / static_cast<double>(win) >= threshold;
    const bool mixed = fog > 0 && !is_fog;
    if (!(train && mixed)) out.push_back({s, is_fog ? Label::FoG : Label::NonFoG});
    next = s + ((train && is_fog) ? hop_fog : hop_non);
  }
  return out;
}

// AUC by comparing every positive with every negative; ties count half.
inline double auc_pairs(const std::vector<double>& scores, const std::vector<Label>& truth) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (truth[i] != Label::FoG) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (truth[j] != Label::NonFoG) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

// Hand-counted episode expectations (window 3 s, hop 1.5 s).
struct ExpectedEpisode {
  std::size_t start;
  std::size_t end;
  double duration_s;
  const char* bucket;
  bool detected;
  double dfog_pct;
  std::optional<double> latency_s;
};
struct ExpectedFp {
  std::size_t start;
  std::size_t end;
  std::optional<double> min_distance_s;
};
struct EpisodeFixture {
  std::string name;
  std::vector<int> truth;
  std::vector<int> decision;
  std::vector<std::size_t> breaks;
  std::vector<ExpectedEpisode> episodes;
  std::vector<ExpectedFp> fps;
  std::optional<double> dfe_pct;
  std::optional<double> dfw_pct;
  std::optional<double> latency_mean_s;
  std::optional<double> latency_sd_s;
};

inline std::vector<EpisodeFixture> episode_fixtures() {
  return {
      {"short episode caught on its first window",
       {0, 0, 1, 1, 0, 0},
       {0, 0, 1, 0, 0, 0},
       {},
       {{2, 3, 4.5, "short", true, 50.0, 0.0}},
       {},
       100.0,
       50.0,
       0.0,
       0.0},
      {"medium episode caught two windows late",
       {0, 1, 1, 1, 1, 0},
       {0, 0, 0, 1, 1, 0},
       {},
       {{1, 4, 7.5, "medium", true, 50.0, 3.0}},
       {},
       100.0,
       50.0,
       3.0,
       0.0},
      {"long episode missed",
       {0, 1, 1, 1, 1, 1, 1, 1, 1, 0},
       {0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
       {},
       {{1, 8, 13.5, "long", false, 0.0, std::nullopt}},
       {},
       0.0,
       0.0,
       std::nullopt,
       std::nullopt},
      {"false positive between two episodes",
       {1, 1, 0, 0, 0, 0, 0, 1, 1, 1},
       {1, 1, 0, 1, 0, 0, 0, 1, 1, 1},
       {},
       {{0, 1, 4.5, "short", true, 100.0, 0.0}, {7, 9, 6.0, "medium", true, 100.0, 0.0}},
       {{3, 3, 3.0}},
       100.0,
       100.0,
       0.0,
       0.0},
      {"all three buckets",
       {1, 0, 1, 1, 1, 1, 1, 1, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1},
       {0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1},
       {},
       {{0, 0, 3.0, "short", false, 0.0, std::nullopt},
        {2, 8, 12.0, "medium", true, 300.0 / 7.0, 3.0},
        {10, 17, 13.5, "long", true, 100.0, 0.0}},
       {},
       200.0 / 3.0,
       68.75,
       1.5,
       std::sqrt(4.5)},
      {"stream break splits a run",
       {1, 1, 1, 1, 0, 0, 0},
       {1, 1, 0, 0, 0, 1, 0},
       {2},
       {{0, 1, 4.5, "short", true, 100.0, 0.0}, {2, 3, 4.5, "short", false, 0.0, std::nullopt}},
       {{5, 5, 3.0}},
       50.0,
       50.0,
       0.0,
       0.0},
  };
}

}  // namespace fixture
