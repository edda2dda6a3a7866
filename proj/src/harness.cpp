#include "fogwatch/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "text_util.hpp"

#ifndef FOGWATCH_VERSION
#define FOGWATCH_VERSION "unknown"
#endif

namespace fogwatch::harness {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

double normal(Rng& rng) {
  // Box-Muller on uniform01 keeps the stream independent of the library's
  // distribution implementations.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

const char* medication_name(MedicationState m) {
  switch (m) {
    case MedicationState::On: return "on";
    case MedicationState::Off: return "off";
    case MedicationState::Unknown: return "unknown";
  }
  return "unknown";
}

MedicationState parse_medication(std::string_view s) {
  const auto v = lower(std::string(detail::trim(s)));
  if (v == "on") return MedicationState::On;
  if (v == "off") return MedicationState::Off;
  if (v.empty() || v == "unknown" || v == "-") return MedicationState::Unknown;
  throw DataError(DataError::Kind::Parse, "medication must be on, off or unknown, got '" + v + "'");
}

std::optional<double> opt_cell(std::string_view s, std::size_t line) {
  s = detail::trim(s);
  if (s.empty() || s == "-" || s == "NA" || s == "nan") return std::nullopt;
  auto v = detail::parse_double(s);
  if (!v) throw DataError(DataError::Kind::Parse, "line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  return v;
}

std::string opt_csv(const std::optional<double>& v) { return v ? detail::format_double(*v) : ""; }

}  // namespace

// ---------------------------------------------------------------- subjects

std::vector<SubjectInfo> parse_subjects_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::size_t n = 0;
  std::vector<SubjectInfo> out;
  bool header = false;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split(line, ',');
    if (!header) {
      if (cells.size() != 5 || detail::trim(cells[0]) != "subject_id")
        throw DataError(DataError::Kind::Format,
                        "subjects header must be subject_id,age,years_since_dx,updrs,medication");
      header = true;
      continue;
    }
    if (cells.size() != 5)
      throw DataError(DataError::Kind::Parse, "line " + std::to_string(n) + ": expected 5 columns");
    SubjectInfo s;
    s.id = std::string(detail::trim(cells[0]));
    if (s.id.empty()) throw DataError(DataError::Kind::Parse, "line " + std::to_string(n) + ": empty subject id");
    s.age = opt_cell(cells[1], n);
    s.years_since_dx = opt_cell(cells[2], n);
    s.updrs = opt_cell(cells[3], n);
    s.medication = parse_medication(cells[4]);
    out.push_back(s);
  }
  if (!header) throw DataError(DataError::Kind::EmptyInput, "subjects file is empty");
  return out;
}

std::string format_subjects_csv(const std::vector<SubjectInfo>& subjects) {
  std::string out = "subject_id,age,years_since_dx,updrs,medication\n";
  for (const auto& s : subjects)
    out += s.id + "," + opt_csv(s.age) + "," + opt_csv(s.years_since_dx) + "," + opt_csv(s.updrs) + "," +
           medication_name(s.medication) + "\n";
  return out;
}

// ---------------------------------------------------------------- synthetic data

void CohortSpec::validate() const {
  if (subjects == 0) throw ConfigError("cohort needs at least one subject");
  if (!(duration_s > 0)) throw ConfigError("cohort duration must be positive");
  if (!(rate_hz > 0)) throw ConfigError("cohort rate must be positive");
  if (!(fog_rate >= 0.0 && fog_rate <= 1.0)) throw ConfigError("fog_rate must be in [0, 1]");
  if (!(min_episode_s > 0 && min_episode_s <= max_episode_s)) throw ConfigError("bad episode length range");
}

namespace {

enum class Activity : std::uint8_t { Rest, Walk, Freeze };

std::vector<Activity> synth_timeline(std::size_t n, const CohortSpec& spec, Rng& rng) {
  const auto budget = static_cast<std::size_t>(std::llround(spec.fog_rate * static_cast<double>(n)));
  std::vector<std::size_t> episodes;
  for (std::size_t left = budget; left > 0;) {
    auto len = static_cast<std::size_t>(std::llround(uniform(rng, spec.min_episode_s, spec.max_episode_s) * spec.rate_hz));
    len = std::clamp<std::size_t>(len, 1, left);
    episodes.push_back(len);
    left -= len;
  }
  const std::size_t other = n - budget;
  std::vector<double> w(episodes.size() + 1);
  for (auto& x : w) x = uniform(rng, 0.2, 1.0);
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<std::size_t> gaps(w.size());
  std::size_t used = 0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    gaps[i] = static_cast<std::size_t>(std::floor(static_cast<double>(other) * w[i] / wsum));
    used += gaps[i];
  }
  gaps.back() = other - used;

  std::vector<Activity> t;
  t.reserve(n);
  for (std::size_t g = 0; g < gaps.size(); ++g) {
    // Rest first, then walking, so every freeze starts from walking.
    const auto rest = static_cast<std::size_t>(std::floor(static_cast<double>(gaps[g]) * uniform(rng, 0.0, 0.4)));
    t.insert(t.end(), rest, Activity::Rest);
    t.insert(t.end(), gaps[g] - rest, Activity::Walk);
    if (g < episodes.size()) t.insert(t.end(), episodes[g], Activity::Freeze);
  }
  return t;
}

}  // namespace

Cohort synth_cohort(const CohortSpec& spec) {
  spec.validate();
  Cohort c;
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.rate_hz));
  for (std::size_t s = 0; s < spec.subjects; ++s) {
    Rng rng(derive_seed(spec.seed, "synth.subject", s));
    SubjectInfo info;
    char id[16];
    std::snprintf(id, sizeof id, "S%02zu", s + 1);
    info.id = id;
    info.age = std::round(uniform(rng, 55.0, 82.0));
    info.years_since_dx = std::round(uniform(rng, 1.0, 20.0) * 10.0) / 10.0;
    info.updrs = std::round(uniform(rng, 15.0, 55.0));
    info.medication = uniform01(rng) < 0.5 ? MedicationState::On : MedicationState::Off;

    const double f_gait = uniform(rng, 1.6, 2.2);
    const double f_trem = uniform(rng, 4.0, 7.0);
    const double amp_v = uniform(rng, 0.35, 0.5);
    const double amp_ml = uniform(rng, 0.12, 0.2);
    const double amp_ap = uniform(rng, 0.25, 0.4);
    const double amp_trem = uniform(rng, 0.15, 0.3);
    const double freeze_gait = 0.15;  // residual forward motion during a freeze
    const double noise = 0.015;
    const double tilt = uniform(rng, 0.0, 0.15);
    const double azimuth = uniform(rng, 0.0, 2.0 * kPi);
    const Eigen::RowVector3d gravity(std::cos(tilt), std::sin(tilt) * std::cos(azimuth),
                                     std::sin(tilt) * std::sin(azimuth));

    const auto timeline = synth_timeline(n, spec, rng);
    Eigen::Matrix<double, Eigen::Dynamic, 3> accel(static_cast<Index>(n), 3);
    std::vector<Label> labels(n);
    double ph_gait = uniform(rng, 0.0, 2.0 * kPi);
    double ph_trem = uniform(rng, 0.0, 2.0 * kPi);
    const double d_gait = 2.0 * kPi * f_gait / spec.rate_hz;
    const double d_trem = 2.0 * kPi * f_trem / spec.rate_hz;
    for (std::size_t k = 0; k < n; ++k) {
      Eigen::RowVector3d a = gravity;
      const Activity act = timeline[k];
      if (act != Activity::Rest) {
        const double g = act == Activity::Walk ? 1.0 : freeze_gait;
        a += g * Eigen::RowVector3d(amp_v * std::sin(ph_gait), amp_ml * std::sin(0.5 * ph_gait),
                                    amp_ap * std::sin(ph_gait + kPi / 3.0));
        ph_gait += d_gait;
      }
      if (act == Activity::Freeze)
        a += amp_trem * Eigen::RowVector3d(std::sin(ph_trem), 0.3 * std::sin(ph_trem + 1.0),
                                           0.6 * std::sin(ph_trem + 0.5));
      ph_trem += d_trem;
      for (Index ch = 0; ch < 3; ++ch) a(ch) += noise * normal(rng);
      accel.row(static_cast<Index>(k)) = a;
      labels[k] = act == Activity::Freeze ? Label::FoG : Label::NonFoG;
    }
    SignalStream st = make_uniform_stream(accel, std::move(labels), spec.rate_hz);
    st.subject_id = info.id;
    st.medication = info.medication;
    c.streams.push_back(std::move(st));
    c.subjects.push_back(info);
  }
  return c;
}

// ---------------------------------------------------------------- LOGO split

namespace {

std::array<std::optional<double>, 3> features_of(const SubjectInfo& s) { return {s.age, s.years_since_dx, s.updrs}; }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Feature matrix with medians filled in; `imputed` flags rows that needed it.
std::vector<std::array<double, 3>> imputed_features(const std::vector<SubjectInfo>& subjects,
                                                    std::vector<bool>* imputed) {
  std::array<double, 3> med{};
  for (std::size_t f = 0; f < 3; ++f) {
    std::vector<double> present;
    for (const auto& s : subjects)
      if (auto v = features_of(s)[f]) present.push_back(*v);
    med[f] = present.empty() ? 0.0 : median(present);
  }
  std::vector<std::array<double, 3>> out(subjects.size());
  if (imputed) imputed->assign(subjects.size(), false);
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const auto fs = features_of(subjects[i]);
    for (std::size_t f = 0; f < 3; ++f) {
      out[i][f] = fs[f].value_or(med[f]);
      if (!fs[f] && imputed) (*imputed)[i] = true;
    }
  }
  return out;
}

SplitBalance balance_of(const std::vector<std::array<double, 3>>& feats, const std::vector<bool>& in_a) {
  SplitBalance b;
  for (std::size_t f = 0; f < 3; ++f) {
    std::vector<double> a, bv;
    for (std::size_t i = 0; i < feats.size(); ++i) (in_a[i] ? a : bv).push_back(feats[i][f]);
    auto mean = [](const std::vector<double>& v) {
      return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    auto ss = [](const std::vector<double>& v, double m) {
      double s = 0.0;
      for (double x : v) s += (x - m) * (x - m);
      return s;
    };
    b.mean_a[f] = mean(a);
    b.mean_b[f] = mean(bv);
    const double dof = static_cast<double>(a.size() + bv.size()) - 2.0;
    b.pooled_sd[f] = dof > 0 ? std::sqrt((ss(a, b.mean_a[f]) + ss(bv, b.mean_b[f])) / dof) : 0.0;
  }
  return b;
}

// Largest group-mean gap in pooled-SD units; features with no spread are skipped.
double worst_gap(const SplitBalance& b) {
  double g = 0.0;
  for (std::size_t f = 0; f < 3; ++f)
    if (b.pooled_sd[f] > 0) g = std::max(g, std::abs(b.mean_a[f] - b.mean_b[f]) / b.pooled_sd[f]);
  return g;
}

}  // namespace

LogoPlan make_logo_split(const std::vector<SubjectInfo>& subjects, std::uint64_t seed, std::size_t repeats) {
  if (subjects.size() < 2) throw ConfigError("leave-one-group-out needs at least 2 subjects");
  if (repeats == 0) throw ConfigError("repeats must be positive");
  {
    std::unordered_set<std::string> ids;
    for (const auto& s : subjects)
      if (!ids.insert(s.id).second) throw ConfigError("duplicate subject id " + s.id);
  }
  std::vector<bool> flagged;
  const auto feats = imputed_features(subjects, &flagged);
  const std::size_t n = subjects.size();

  std::vector<double> composite(n, 0.0);
  for (std::size_t f = 0; f < 3; ++f) {
    double mean = 0.0;
    for (const auto& x : feats) mean += x[f];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const auto& x : feats) ss += (x[f] - mean) * (x[f] - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) composite[i] += sd > 0 ? (feats[i][f] - mean) / sd : 0.0;
  }

  Rng rng(derive_seed(seed, "logo.split"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i)
    std::swap(order[i - 1], order[std::min(i - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)))]);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return composite[a] < composite[b]; });

  std::vector<std::size_t> ga, gb;
  for (std::size_t k = 0; k < n; ++k) ((k % 4 == 0) || (k % 4 == 3) ? ga : gb).push_back(order[k]);

  // Dealing balances the composite only; swap pairs until every feature is
  // within one pooled SD, or no swap helps.
  auto membership = [&] {
    std::vector<bool> in_a(n, false);
    for (auto i : ga) in_a[i] = true;
    return in_a;
  };
  double current = worst_gap(balance_of(feats, membership()));
  while (current > 1.0) {
    double best = current;
    std::pair<std::size_t, std::size_t> best_swap{n, n};
    for (std::size_t i = 0; i < ga.size(); ++i)
      for (std::size_t j = 0; j < gb.size(); ++j) {
        std::swap(ga[i], gb[j]);
        const double g = worst_gap(balance_of(feats, membership()));
        std::swap(ga[i], gb[j]);
        if (g < best) {
          best = g;
          best_swap = {i, j};
        }
      }
    if (best_swap.first == n) break;
    std::swap(ga[best_swap.first], gb[best_swap.second]);
    current = best;
  }

  LogoPlan plan;
  plan.split_seed = seed;
  for (auto i : ga) plan.group_a.push_back(subjects[i].id);
  for (auto i : gb) plan.group_b.push_back(subjects[i].id);
  for (std::size_t i = 0; i < n; ++i)
    if (flagged[i]) plan.imputed.push_back(subjects[i].id);
  for (std::size_t r = 0; r < repeats; ++r) plan.seeds.push_back(derive_seed(seed, "logo.repeat", r));
  return plan;
}

SplitBalance split_balance(const std::vector<SubjectInfo>& subjects, const LogoPlan& plan) {
  std::unordered_set<std::string> ids(plan.group_a.begin(), plan.group_a.end());
  std::vector<bool> in_a(subjects.size());
  for (std::size_t i = 0; i < subjects.size(); ++i) in_a[i] = ids.count(subjects[i].id) > 0;
  return balance_of(imputed_features(subjects, nullptr), in_a);
}

// ---------------------------------------------------------------- configuration

void RunConfig::validate() const {
  window.validate();
  arch.validate();
  plan.validate();
  mask.validate(arch.input_len);
  gate.validate();
  ato.validate();
  if (!(target_hz > 0)) throw ConfigError("target_hz must be positive");
  const auto t_prime = window.window_samples(target_hz);
  if (t_prime != arch.input_len)
    throw ConfigError("window of " + std::to_string(t_prime) + " samples does not match input_len " +
                      std::to_string(arch.input_len));
  if (repeats == 0) throw ConfigError("repeats must be positive");
  if (data_format != "synth" && data_format != "canonical" && data_format != "daphnet" && data_format != "mapped")
    throw ConfigError("data_format must be synth, canonical, daphnet or mapped");
  for (double f : label_fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("label fractions must be in (0, 1]");
  if (data_format == "synth") synth.validate();
}

void RunConfig::check_paths() const {
  if (data_format == "synth") return;
  if (data_dir.empty() || !std::filesystem::is_directory(data_dir))
    throw ConfigError("data_dir '" + data_dir.string() + "' is not a directory");
  if (!subjects_file.empty() && !std::filesystem::exists(subjects_file))
    throw ConfigError("subjects_file '" + subjects_file.string() + "' does not exist");
  if (data_format == "mapped" && !mapping_file.empty() && !std::filesystem::exists(mapping_file))
    throw ConfigError("mapping_file '" + mapping_file.string() + "' does not exist");
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  auto d = detail::parse_double(detail::trim(v));
  if (!d) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return *d;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  auto i = detail::parse_int(detail::trim(v));
  if (!i || *i < 0) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(*i);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  const auto t = std::string(detail::trim(v));
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto t = lower(std::string(detail::trim(v)));
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::size_t> to_size_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (auto part : detail::split(v, ',')) out.push_back(to_size(key, std::string(part)));
  return out;
}

std::vector<double> to_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (auto part : detail::split(v, ',')) out.push_back(to_double(key, std::string(part)));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>) s += detail::format_double(v[i]);
    else s += std::to_string(v[i]);
  }
  return s;
}

std::string fmt(double v) { return detail::format_double(v); }

}  // namespace

void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  const std::string v(detail::trim(value));
  // window
  if (key == "window_s") c.window.window_s = to_double(key, v);
  else if (key == "hop_nonfog_frac") c.window.hop_nonfog_frac = to_double(key, v);
  else if (key == "hop_fog_frac") c.window.hop_fog_frac = to_double(key, v);
  else if (key == "label_threshold") c.window.label_threshold = to_double(key, v);
  else if (key == "target_hz") c.target_hz = to_double(key, v);
  // architecture
  else if (key == "input_len") c.arch.input_len = to_size(key, v);
  else if (key == "conv_filters") c.arch.conv_filters = to_size_list(key, v);
  else if (key == "kernel") c.arch.kernel = to_size(key, v);
  else if (key == "maxpool_after") c.arch.maxpool_after = to_size(key, v);
  else if (key == "pool") c.arch.pool = to_size(key, v);
  else if (key == "final_pool") c.arch.final_pool = to_size(key, v);
  else if (key == "dense_units") c.arch.dense_units = to_size_list(key, v);
  else if (key == "dropout") c.arch.dropout = to_double(key, v);
  // training
  else if (key == "pretrain_epochs") c.plan.pretrain_epochs = to_size(key, v);
  else if (key == "pretrain_lr") c.plan.pretrain_lr = to_double(key, v);
  else if (key == "pretrain_decay") c.plan.pretrain_decay = to_double(key, v);
  else if (key == "finetune_epochs") c.plan.finetune_epochs = to_size(key, v);
  else if (key == "finetune_lr") c.plan.finetune_lr = to_double(key, v);
  else if (key == "finetune_decay") c.plan.finetune_decay = to_double(key, v);
  else if (key == "supervised_epochs") c.plan.supervised_epochs = to_size(key, v);
  else if (key == "supervised_lr") c.plan.supervised_lr = to_double(key, v);
  else if (key == "supervised_decay") c.plan.supervised_decay = to_double(key, v);
  else if (key == "batch_size") c.plan.batch_size = to_size(key, v);
  else if (key == "label_fraction") c.plan.label_fraction = to_double(key, v);
  else if (key == "freeze_encoder") c.plan.freeze_encoder = to_bool(key, v);
  else if (key == "decay_mode") {
    if (v == "time") c.plan.decay_mode = nn::DecayMode::TimeBased;
    else if (v == "weight") c.plan.decay_mode = nn::DecayMode::Weight;
    else throw ConfigError("decay_mode must be time or weight");
  } else if (key == "precision") {
    if (v == "float32") c.plan.precision = ssl::Precision::Float32;
    else if (v == "float64") c.plan.precision = ssl::Precision::Float64;
    else throw ConfigError("precision must be float32 or float64");
  }
  // masking
  else if (key == "mask_segment_len") c.mask.segment_len = to_size(key, v);
  else if (key == "mask_num_segments") c.mask.num_segments = to_size(key, v);
  else if (key == "mask_fill") c.mask.fill_value = to_double(key, v);
  else if (key == "mask_seed") c.mask.seed = to_u64(key, v);
  // gate
  else if (key == "gate_alpha") c.gate.alpha = to_double(key, v);
  else if (key == "ato_alpha_start") c.ato.alpha_start = to_double(key, v);
  else if (key == "ato_alpha_final") c.ato.alpha_final = to_double(key, v);
  else if (key == "ato_delta_alpha") c.ato.delta_alpha = to_double(key, v);
  else if (key == "ato_tolerance") c.ato.tolerance = to_double(key, v);
  else if (key == "ato_metric") c.ato.baseline_metric = gate::parse_metric(v);
  else if (key == "sweep_points") c.sweep_points = to_size(key, v);
  else if (key == "sweep_alpha_max") c.sweep_alpha_max = to_double(key, v);
  // experiments
  else if (key == "label_fractions") c.label_fractions = to_double_list(key, v);
  else if (key == "majority_vote_passes") c.majority_vote_passes = to_size(key, v);
  else if (key == "data_format") c.data_format = v;
  else if (key == "data_dir") c.data_dir = v;
  else if (key == "subjects_file") c.subjects_file = v;
  else if (key == "mapping_file") c.mapping_file = v;
  else if (key == "daphnet_sensor") {
    if (v == "ankle") c.daphnet_sensor = DaphnetSensor::Ankle;
    else if (v == "thigh") c.daphnet_sensor = DaphnetSensor::Thigh;
    else if (v == "trunk") c.daphnet_sensor = DaphnetSensor::Trunk;
    else throw ConfigError("daphnet_sensor must be ankle, thigh or trunk");
  } else if (key == "synth_subjects") c.synth.subjects = to_size(key, v);
  else if (key == "synth_duration_s") c.synth.duration_s = to_double(key, v);
  else if (key == "synth_rate_hz") c.synth.rate_hz = to_double(key, v);
  else if (key == "synth_fog_rate") c.synth.fog_rate = to_double(key, v);
  else if (key == "synth_min_episode_s") c.synth.min_episode_s = to_double(key, v);
  else if (key == "synth_max_episode_s") c.synth.max_episode_s = to_double(key, v);
  else if (key == "synth_seed") c.synth.seed = to_u64(key, v);
  else if (key == "out_dir") c.out_dir = v;
  else if (key == "seed") c.seed = to_u64(key, v);
  else if (key == "repeats") c.repeats = to_size(key, v);
  else if (key == "reshuffle_groups") c.reshuffle_groups = to_bool(key, v);
  else if (key == "supervised_baseline") c.supervised_baseline = to_bool(key, v);
  else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig parse_run_config(const std::string& text, RunConfig base) {
  std::istringstream is(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(n) + ": expected key=value");
    const std::string key(detail::trim(t.substr(0, eq)));
    try {
      set_config_value(base, key, std::string(t.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(n) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
  return parse_run_config(detail::read_file(path.string()), std::move(base));
}

std::string format_run_config(const RunConfig& c) {
  std::ostringstream os;
  auto kv = [&](const char* k, const std::string& v) { os << k << "=" << v << "\n"; };
  kv("window_s", fmt(c.window.window_s));
  kv("hop_nonfog_frac", fmt(c.window.hop_nonfog_frac));
  kv("hop_fog_frac", fmt(c.window.hop_fog_frac));
  kv("label_threshold", fmt(c.window.label_threshold));
  kv("target_hz", fmt(c.target_hz));
  kv("input_len", std::to_string(c.arch.input_len));
  kv("conv_filters", join(c.arch.conv_filters));
  kv("kernel", std::to_string(c.arch.kernel));
  kv("maxpool_after", std::to_string(c.arch.maxpool_after));
  kv("pool", std::to_string(c.arch.pool));
  kv("final_pool", std::to_string(c.arch.final_pool));
  kv("dense_units", join(c.arch.dense_units));
  kv("dropout", fmt(c.arch.dropout));
  kv("pretrain_epochs", std::to_string(c.plan.pretrain_epochs));
  kv("pretrain_lr", fmt(c.plan.pretrain_lr));
  kv("pretrain_decay", fmt(c.plan.pretrain_decay));
  kv("finetune_epochs", std::to_string(c.plan.finetune_epochs));
  kv("finetune_lr", fmt(c.plan.finetune_lr));
  kv("finetune_decay", fmt(c.plan.finetune_decay));
  kv("supervised_epochs", std::to_string(c.plan.supervised_epochs));
  kv("supervised_lr", fmt(c.plan.supervised_lr));
  kv("supervised_decay", fmt(c.plan.supervised_decay));
  kv("batch_size", std::to_string(c.plan.batch_size));
  kv("label_fraction", fmt(c.plan.label_fraction));
  kv("freeze_encoder", c.plan.freeze_encoder ? "true" : "false");
  kv("decay_mode", c.plan.decay_mode == nn::DecayMode::TimeBased ? "time" : "weight");
  kv("precision", c.plan.precision == ssl::Precision::Float32 ? "float32" : "float64");
  kv("mask_segment_len", std::to_string(c.mask.segment_len));
  kv("mask_num_segments", std::to_string(c.mask.num_segments));
  kv("mask_fill", fmt(c.mask.fill_value));
  kv("mask_seed", std::to_string(c.mask.seed));
  kv("gate_alpha", fmt(c.gate.alpha));
  kv("ato_alpha_start", fmt(c.ato.alpha_start));
  kv("ato_alpha_final", fmt(c.ato.alpha_final));
  kv("ato_delta_alpha", fmt(c.ato.delta_alpha));
  kv("ato_tolerance", fmt(c.ato.tolerance));
  kv("ato_metric", gate::metric_name(c.ato.baseline_metric));
  kv("sweep_points", std::to_string(c.sweep_points));
  kv("sweep_alpha_max", fmt(c.sweep_alpha_max));
  kv("label_fractions", join(c.label_fractions));
  kv("majority_vote_passes", std::to_string(c.majority_vote_passes));
  kv("data_format", c.data_format);
  kv("data_dir", c.data_dir.string());
  kv("subjects_file", c.subjects_file.string());
  kv("mapping_file", c.mapping_file.string());
  kv("daphnet_sensor", c.daphnet_sensor == DaphnetSensor::Ankle   ? "ankle"
                       : c.daphnet_sensor == DaphnetSensor::Thigh ? "thigh"
                                                                  : "trunk");
  kv("synth_subjects", std::to_string(c.synth.subjects));
  kv("synth_duration_s", fmt(c.synth.duration_s));
  kv("synth_rate_hz", fmt(c.synth.rate_hz));
  kv("synth_fog_rate", fmt(c.synth.fog_rate));
  kv("synth_min_episode_s", fmt(c.synth.min_episode_s));
  kv("synth_max_episode_s", fmt(c.synth.max_episode_s));
  kv("synth_seed", std::to_string(c.synth.seed));
  kv("out_dir", c.out_dir.string());
  kv("seed", std::to_string(c.seed));
  kv("repeats", std::to_string(c.repeats));
  kv("reshuffle_groups", c.reshuffle_groups ? "true" : "false");
  kv("supervised_baseline", c.supervised_baseline ? "true" : "false");
  return os.str();
}

std::uint64_t config_hash(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.out_dir.clear();  // where results go does not change them
  const auto text = format_run_config(c);
  return fnv1a(text.data(), text.size());
}

// ---------------------------------------------------------------- data sources

CohortSource::CohortSource(Cohort cohort) : cohort_(std::move(cohort)) {}

SignalStream CohortSource::load(const std::string& id) const {
  for (std::size_t i = 0; i < cohort_.subjects.size(); ++i)
    if (cohort_.subjects[i].id == id) return cohort_.streams[i];
  throw DataError(DataError::Kind::Structural, "no synthetic subject " + id);
}

DirectorySource::DirectorySource(const RunConfig& cfg) : cfg_(cfg) {
  cfg.check_paths();
  if (cfg.data_format == "mapped" && !cfg.mapping_file.empty())
    mapping_ = parse_column_mapping(detail::read_file(cfg.mapping_file.string()));
  if (!cfg.subjects_file.empty()) {
    subjects_ = parse_subjects_csv(detail::read_file(cfg.subjects_file.string()));
  } else {
    const std::string ext = cfg.data_format == "daphnet" ? ".txt" : ".csv";
    std::vector<std::string> ids;
    for (const auto& e : std::filesystem::directory_iterator(cfg.data_dir))
      if (e.is_regular_file() && e.path().extension() == ext) ids.push_back(e.path().stem().string());
    std::sort(ids.begin(), ids.end());
    for (auto& id : ids) subjects_.push_back(SubjectInfo{id, {}, {}, {}, MedicationState::Unknown});
  }
  if (subjects_.empty()) throw DataError(DataError::Kind::EmptyInput, "no subjects found in " + cfg.data_dir.string());
}

std::filesystem::path DirectorySource::path_for(const std::string& id) const {
  return cfg_.data_dir / (id + (cfg_.data_format == "daphnet" ? ".txt" : ".csv"));
}

SignalStream DirectorySource::load(const std::string& id) const {
  const auto p = path_for(id);
  if (!std::filesystem::exists(p)) throw DataError(DataError::Kind::EmptyInput, "missing data file " + p.string());
  SignalStream s;
  if (cfg_.data_format == "canonical") s = load_canonical_csv(p);
  else if (cfg_.data_format == "daphnet") s = load_daphnet(p, cfg_.daphnet_sensor);
  else s = load_mapped_csv(p, mapping_);
  s.subject_id = id;
  for (const auto& info : subjects_)
    if (info.id == id) s.medication = info.medication;
  return s;
}

std::unique_ptr<StreamSource> make_source(const RunConfig& cfg) {
  if (cfg.data_format == "synth") return std::make_unique<CohortSource>(synth_cohort(cfg.synth));
  return std::make_unique<DirectorySource>(cfg);
}

SignalStream prepare_stream(const SignalStream& raw, double target_hz) {
  SignalStream s = to_g(raw);
  if (std::abs(s.rate_hz - target_hz) > 1e-9) s = resample(s, target_hz);
  return s;
}

// ---------------------------------------------------------------- LOGO

const char* model_name(ModelKind k) { return k == ModelKind::SelfSupervised ? "ssl" : "supervised"; }

std::vector<std::uint64_t> frame_fingerprints(const WindowSet& ws) {
  std::vector<std::uint64_t> out(ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const Frame raw = ws.raw_frame(i);
    out[i] = fnv1a(raw.data(), static_cast<std::size_t>(raw.size()) * sizeof(double));
  }
  return out;
}

namespace {

std::uint64_t combine(const std::vector<std::uint64_t>& fps, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(fps.data(), fps.size() * sizeof(std::uint64_t), h);
}

WindowSpec with_mode(WindowSpec s, SegmentMode m) {
  s.mode = m;
  return s;
}

}  // namespace

GroupData load_training_group(const StreamSource& src, const std::vector<std::string>& ids, const RunConfig& cfg) {
  GroupData g;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& id : ids) {
    const auto s = prepare_stream(src.load(id), cfg.target_hz);
    auto fixed = segment(s, with_mode(cfg.window, SegmentMode::InferenceFixed));
    auto dhwt = segment(s, with_mode(cfg.window, SegmentMode::TrainDHWT));
    h = combine(frame_fingerprints(fixed), h);
    h = combine(frame_fingerprints(dhwt), h);
    g.pretrain.append(fixed);
    g.labeled.append(dhwt);
  }
  g.pretrain.subject_id = "train";
  g.labeled.subject_id = "train";
  g.fingerprint = h;
  return g;
}

TestData load_test_group(const StreamSource& src, const std::vector<std::string>& ids, const RunConfig& cfg) {
  TestData t;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& id : ids) {
    const auto s = prepare_stream(src.load(id), cfg.target_hz);
    auto ws = segment(s, with_mode(cfg.window, SegmentMode::InferenceFixed));
    ws.subject_id = id;
    h = combine(frame_fingerprints(ws), h);
    t.streams.push_back(std::move(ws));
  }
  t.fingerprint = h;
  return t;
}

FoldResult evaluate_fold(const ssl::ModelBundle& bundle, const TestData& test, const RunConfig& cfg) {
  FoldResult f;
  PredictionTrace joined;
  for (const auto& ws : test.streams) {
    auto tr = ssl::predict(bundle, ws);
    if (cfg.majority_vote_passes > 0) tr = metrics::majority_vote(tr, cfg.majority_vote_passes);
    if (joined.empty()) {
      joined.window_s = tr.window_s;
      joined.hop_s = tr.hop_s;
    }
    joined.append(tr);
    f.n_test_windows += ws.size();
  }
  joined.subject_id = "test";
  f.window = metrics::window_metrics(joined);
  try {
    f.auc = metrics::roc_auc(joined);
  } catch (const DataError&) {
    f.auc.reset();
  }
  double loss = 0.0;
  for (const auto& e : joined.entries) {
    const double p = std::clamp(e.probability, 1e-12, 1.0 - 1e-12);
    loss -= e.truth == Label::FoG ? std::log(p) : std::log(1.0 - p);
  }
  f.test_loss = loss / static_cast<double>(joined.size());
  f.episodes = metrics::episode_report(joined);
  f.trace = std::move(joined);
  f.test_fingerprint = test.fingerprint;
  return f;
}

namespace {

void check_disjoint(const GroupData& g, const TestData& t) {
  std::unordered_set<std::uint64_t> train;
  for (auto fp : frame_fingerprints(g.pretrain)) train.insert(fp);
  for (auto fp : frame_fingerprints(g.labeled)) train.insert(fp);
  for (const auto& ws : t.streams)
    for (auto fp : frame_fingerprints(ws))
      if (train.count(fp))
        throw DataError(DataError::Kind::Structural,
                        "held-out subject " + ws.subject_id + " shares a window with the training group");
}

struct Fold {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  char train_group;
};

std::array<Fold, 2> folds_of(const LogoPlan& p) {
  return {Fold{p.group_a, p.group_b, 'A'}, Fold{p.group_b, p.group_a, 'B'}};
}

std::uint64_t fold_seed(const LogoPlan& p, std::size_t repeat, char train_group) {
  return derive_seed(p.seeds.at(repeat), "logo.fold", static_cast<std::uint64_t>(train_group));
}

ssl::MaskSpec fold_mask(const RunConfig& cfg, std::uint64_t seed) {
  ssl::MaskSpec m = cfg.mask;
  m.seed = derive_seed(seed, "mask", cfg.mask.seed);
  return m;
}

ssl::ModelBundle pretrain_group(const RunConfig& cfg, const GroupData& g, std::uint64_t seed) {
  return ssl::pretrain(ssl::UnlabeledView(g.pretrain), cfg.arch, cfg.plan, fold_mask(cfg, seed),
                       derive_seed(seed, "pretrain"));
}

void log_to(const Logger& log, const std::string& m) {
  if (log) log(m);
}

std::string pct(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4f", v);
  return b;
}

}  // namespace

LogoReport run_logo(const RunConfig& cfg, const StreamSource& src, const LogoPlan& base_plan, ModelKind kind,
                    const Logger& log) {
  cfg.validate();
  LogoReport report;
  const auto subjects = src.subjects();
  for (std::size_t r = 0; r < base_plan.repeats(); ++r) {
    LogoPlan plan = base_plan;
    if (cfg.reshuffle_groups && r > 0) {
      plan = make_logo_split(subjects, derive_seed(base_plan.split_seed, "logo.reshuffle", r), base_plan.repeats());
      plan.seeds = base_plan.seeds;
    }
    std::vector<MetricRow> rows;
    for (const auto& fold : folds_of(plan)) {
      const auto seed = fold_seed(plan, r, fold.train_group);
      log_to(log, std::string(model_name(kind)) + " repeat " + std::to_string(r + 1) + ": train group " +
                      fold.train_group + " (" + std::to_string(fold.train_ids.size()) + " subjects)");
      // The training corpus is complete before any held-out subject is read.
      const auto g = load_training_group(src, fold.train_ids, cfg);
      ssl::ModelBundle model;
      FoldResult f;
      if (kind == ModelKind::SelfSupervised) {
        const auto pre = pretrain_group(cfg, g, seed);
        log_to(log, "  pretext loss " + pct(pre.pretext_initial_loss) + " -> " + pct(pre.pretext_loss.back()));
        model = ssl::finetune(pre, g.labeled, cfg.plan, derive_seed(seed, "finetune"));
        f.encoder_checksum_pretrained = pre.encoder_checksum();
        f.pretext_initial_loss = pre.pretext_initial_loss;
        f.pretext_loss = pre.pretext_loss;
      } else {
        model = ssl::train_supervised(g.labeled, cfg.arch, cfg.plan, derive_seed(seed, "supervised"));
      }
      const auto test = load_test_group(src, fold.test_ids, cfg);
      check_disjoint(g, test);
      FoldResult ev = evaluate_fold(model, test, cfg);
      ev.model = kind;
      ev.repeat = r;
      ev.seed = seed;
      ev.train_group = fold.train_group;
      ev.train_fingerprint = g.fingerprint;
      ev.encoder_checksum_pretrained = f.encoder_checksum_pretrained;
      ev.encoder_checksum_finetuned = model.encoder_checksum();
      ev.pretext_initial_loss = f.pretext_initial_loss;
      ev.pretext_loss = f.pretext_loss;
      ev.n_train_windows = g.labeled.size();
      log_to(log, "  held-out accuracy " + pct(ev.window.accuracy) +
                      (ev.auc ? ", AUC " + pct(*ev.auc) : std::string()));
      rows.push_back(fold_row(ev, std::string("test=") + (fold.train_group == 'A' ? "B" : "A")));
      report.folds.push_back(std::move(ev));
    }
    report.per_repeat.push_back(std::move(rows));
  }
  report.summary = summarize(report.folds);
  return report;
}

MetricRow fold_row(const FoldResult& f, const std::string& label) {
  MetricRow r;
  r.label = label;
  r.values = {f.window.precision,
              f.window.sensitivity,
              f.window.f1,
              f.window.accuracy,
              f.window.specificity,
              f.test_loss,
              f.episodes.overall.dfe_pct,
              f.episodes.dfw_trace_pct,
              f.auc};
  return r;
}

std::vector<MetricRow> summarize(const std::vector<FoldResult>& folds) {
  std::vector<MetricRow> out;
  auto aggregate = [](const std::vector<MetricRow>& rows, const std::string& label, int kind) {
    MetricRow r;
    r.label = label;
    for (std::size_t c = 0; c < r.values.size(); ++c) {
      std::vector<double> v;
      for (const auto& row : rows)
        if (row.values[c]) v.push_back(*row.values[c]);
      if (v.empty()) continue;
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      switch (kind) {
        case 0: r.values[c] = mean; break;
        case 1: r.values[c] = *std::min_element(v.begin(), v.end()); break;
        case 2: r.values[c] = *std::max_element(v.begin(), v.end()); break;
        default: {
          double ss = 0.0;
          for (double x : v) ss += (x - mean) * (x - mean);
          r.values[c] = v.size() < 2 ? 0.0 : std::sqrt(ss / static_cast<double>(v.size() - 1));
        }
      }
    }
    return r;
  };
  std::vector<MetricRow> all, test_a, test_b;
  for (const auto& f : folds) {
    auto row = fold_row(f, "");
    all.push_back(row);
    (f.train_group == 'B' ? test_a : test_b).push_back(row);
  }
  if (!test_a.empty()) out.push_back(aggregate(test_a, "test=A", 0));
  if (!test_b.empty()) out.push_back(aggregate(test_b, "test=B", 0));
  if (!all.empty()) {
    out.push_back(aggregate(all, "Avg", 0));
    out.push_back(aggregate(all, "Min", 1));
    out.push_back(aggregate(all, "Max", 2));
    out.push_back(aggregate(all, "STD", 3));
  }
  return out;
}

std::string metric_table_csv(const std::vector<MetricRow>& rows) {
  std::string out = "row";
  for (auto c : kMetricColumns) out += std::string(",") + c;
  out += "\n";
  for (const auto& r : rows) {
    out += r.label;
    for (const auto& v : r.values) out += "," + opt_csv(v);
    out += "\n";
  }
  return out;
}

std::string metric_table_text(const std::vector<MetricRow>& rows) {
  std::ostringstream os;
  char cell[32];
  std::snprintf(cell, sizeof cell, "%-8s", "");
  os << cell;
  for (auto c : kMetricColumns) {
    std::snprintf(cell, sizeof cell, " %8s", c);
    os << cell;
  }
  os << "\n";
  for (const auto& r : rows) {
    std::snprintf(cell, sizeof cell, "%-8s", r.label.c_str());
    os << cell;
    for (const auto& v : r.values) {
      if (v) std::snprintf(cell, sizeof cell, " %8.3f", *v);
      else std::snprintf(cell, sizeof cell, " %8s", "n/a");
      os << cell;
    }
    os << "\n";
  }
  return os.str();
}

std::string folds_csv(const std::vector<FoldResult>& folds) {
  std::string out = "model,repeat,seed,train_group,n_train_windows,n_test_windows";
  for (auto c : kMetricColumns) out += std::string(",") + c;
  out += ",tp,fp,fn,tn,train_fingerprint,test_fingerprint\n";
  for (const auto& f : folds) {
    const auto row = fold_row(f, "");
    out += std::string(model_name(f.model)) + "," + std::to_string(f.repeat) + "," + std::to_string(f.seed) + "," +
           f.train_group + "," + std::to_string(f.n_train_windows) + "," + std::to_string(f.n_test_windows);
    for (const auto& v : row.values) out += "," + opt_csv(v);
    out += "," + std::to_string(f.window.counts.tp) + "," + std::to_string(f.window.counts.fp) + "," +
           std::to_string(f.window.counts.fn) + "," + std::to_string(f.window.counts.tn) + "," +
           hex64(f.train_fingerprint) + "," + hex64(f.test_fingerprint) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------- label-ratio sweep

std::vector<SweepPoint> label_ratio_sweep(const RunConfig& cfg, const StreamSource& src, const LogoPlan& plan,
                                          const std::vector<double>& fractions, const Logger& log) {
  cfg.validate();
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("label fractions must be in (0, 1]");

  struct Direction {
    Fold fold;
    std::uint64_t seed;
    GroupData train;
    TestData test;
    std::optional<ssl::ModelBundle> pretrained;
  };
  std::vector<Direction> dirs;
  for (const auto& fold : folds_of(plan)) {
    Direction d{fold, fold_seed(plan, 0, fold.train_group), {}, {}, std::nullopt};
    d.train = load_training_group(src, fold.train_ids, cfg);
    d.test = load_test_group(src, fold.test_ids, cfg);
    check_disjoint(d.train, d.test);
    dirs.push_back(std::move(d));
  }

  std::vector<SweepPoint> out;
  for (double fraction : fractions) {
    RunConfig c = cfg;
    c.plan.label_fraction = fraction;
    for (ModelKind kind : {ModelKind::SelfSupervised, ModelKind::Supervised}) {
      std::vector<FoldResult> results;
      try {
        for (auto& d : dirs) {
          ssl::ModelBundle model;
          if (kind == ModelKind::SelfSupervised) {
            if (!d.pretrained) {
              log_to(log, std::string("pretraining on group ") + d.fold.train_group);
              d.pretrained = pretrain_group(c, d.train, d.seed);
            }
            model = ssl::finetune(*d.pretrained, d.train.labeled, c.plan, derive_seed(d.seed, "finetune"));
          } else {
            model = ssl::train_supervised(d.train.labeled, c.arch, c.plan, derive_seed(d.seed, "supervised"));
          }
          results.push_back(evaluate_fold(model, d.test, c));
        }
      } catch (const ConfigError& e) {
        log_to(log, "skipping fraction " + detail::format_double(fraction) + " (" + model_name(kind) +
                        "): " + e.what());
        continue;
      }
      SweepPoint p;
      p.fraction = fraction;
      p.model = kind;
      auto mean_of = [&](auto get) -> std::optional<double> {
        double s = 0.0;
        std::size_t n = 0;
        for (const auto& r : results)
          if (auto v = get(r)) {
            s += *v;
            ++n;
          }
        if (n == 0) return std::nullopt;
        return s / static_cast<double>(n);
      };
      p.precision = mean_of([](const FoldResult& r) { return r.window.precision; });
      p.recall = mean_of([](const FoldResult& r) { return r.window.sensitivity; });
      p.f1 = mean_of([](const FoldResult& r) { return r.window.f1; });
      p.accuracy = *mean_of([](const FoldResult& r) { return std::optional<double>(r.window.accuracy); });
      log_to(log, "fraction " + detail::format_double(fraction) + " " + model_name(kind) + ": accuracy " +
                      pct(p.accuracy));
      out.push_back(p);
    }
  }
  return out;
}

std::string sweep_points_csv(const std::vector<SweepPoint>& points) {
  std::string out = "fraction,model,precision,recall,f1,accuracy\n";
  for (const auto& p : points)
    out += detail::format_double(p.fraction) + "," + model_name(p.model) + "," + opt_csv(p.precision) + "," +
           opt_csv(p.recall) + "," + opt_csv(p.f1) + "," + detail::format_double(p.accuracy) + "\n";
  return out;
}

// ---------------------------------------------------------------- manifest

std::string version_string() { return FOGWATCH_VERSION; }

std::string manifest_json(const Manifest& m) {
  json seeds = json::object();
  for (const auto& [k, v] : m.seeds) seeds[k] = v;
  json fps = json::object();
  for (const auto& [k, v] : m.fingerprints) fps[k] = v;
  json j{{"tool", "fogwatch"},
         {"version", version_string()},
         {"command", m.command},
         {"master_seed", m.config.seed},
         {"config_hash", hex64(config_hash(m.config))},
         {"config", format_run_config(m.config)},
         {"seeds", seeds},
         {"fingerprints", fps},
         {"outputs", m.outputs}};
  if (m.plan) {
    j["logo_plan"] = json{{"group_a", m.plan->group_a},
                          {"group_b", m.plan->group_b},
                          {"imputed", m.plan->imputed},
                          {"split_seed", m.plan->split_seed},
                          {"repeat_seeds", m.plan->seeds}};
  }
  return j.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(DataError::Kind::Parse, "cannot write " + path.string());
  os << text;
}

}  // namespace fogwatch::harness
