#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fogwatch/gate.hpp"
#include "fogwatch/ingest.hpp"
#include "fogwatch/metrics.hpp"
#include "fogwatch/nn/arch.hpp"
#include "fogwatch/ssl.hpp"
#include "fogwatch/windowing.hpp"

namespace fogwatch::harness {

// ---------------------------------------------------------------- subjects

struct SubjectInfo {
  std::string id;
  std::optional<double> age;
  std::optional<double> years_since_dx;
  std::optional<double> updrs;
  MedicationState medication = MedicationState::Unknown;
};

/// CSV with header `subject_id,age,years_since_dx,updrs,medication`; empty
/// cells are missing values, medication is on/off/unknown.
std::vector<SubjectInfo> parse_subjects_csv(const std::string& text);
std::string format_subjects_csv(const std::vector<SubjectInfo>& subjects);

// ---------------------------------------------------------------- synthetic data

struct CohortSpec {
  std::size_t subjects = 10;
  double duration_s = 900.0;
  double rate_hz = 40.0;
  double fog_rate = 0.35;  ///< fraction of samples inside FoG episodes
  double min_episode_s = 2.0;
  double max_episode_s = 25.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Cohort {
  std::vector<SignalStream> streams;
  std::vector<SubjectInfo> subjects;
};

/// Rest near 1 g, walking with a 1.6-2.2 Hz gait oscillation, and FoG
/// episodes (always entered from walking) where the gait collapses and a
/// 4-7 Hz tremor appears. Labels are exact by construction and each stream
/// holds round(fog_rate * N) FoG samples.
Cohort synth_cohort(const CohortSpec& spec);

// ---------------------------------------------------------------- LOGO split

struct LogoPlan {
  std::vector<std::string> group_a;
  std::vector<std::string> group_b;
  std::vector<std::string> imputed;  ///< subjects with at least one median-imputed feature
  std::vector<std::uint64_t> seeds;  ///< one training seed per repeat
  std::uint64_t split_seed = 0;

  std::size_t repeats() const { return seeds.size(); }
};

/// Sorts subjects by the mean z-score of (age, years_since_dx, updrs) after
/// a seeded shuffle (so ties are broken at random) and deals them out in an
/// A B B A pattern. Missing features take the cohort median.
LogoPlan make_logo_split(const std::vector<SubjectInfo>& subjects, std::uint64_t seed, std::size_t repeats = 3);

/// Per-feature group means and pooled SD, for balance checks.
struct SplitBalance {
  std::array<double, 3> mean_a{};
  std::array<double, 3> mean_b{};
  std::array<double, 3> pooled_sd{};
};
SplitBalance split_balance(const std::vector<SubjectInfo>& subjects, const LogoPlan& plan);

// ---------------------------------------------------------------- configuration

struct RunConfig {
  WindowSpec window;
  double target_hz = 40.0;
  nn::ArchSpec arch;
  ssl::TrainPlan plan;
  ssl::MaskSpec mask;
  gate::GateConfig gate;
  gate::AtoConfig ato;
  std::size_t sweep_points = 20;
  double sweep_alpha_max = 1.2;
  std::vector<double> label_fractions{0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  std::size_t majority_vote_passes = 0;

  std::string data_format = "synth";  ///< synth, canonical, daphnet or mapped
  std::filesystem::path data_dir;
  std::filesystem::path subjects_file;
  std::filesystem::path mapping_file;
  DaphnetSensor daphnet_sensor = DaphnetSensor::Trunk;
  CohortSpec synth;

  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  std::size_t repeats = 3;
  bool reshuffle_groups = false;
  bool supervised_baseline = true;

  void validate() const;
  /// Referenced input paths must exist; called before a run starts.
  void check_paths() const;
};

/// Applies `key=value` lines on top of `base`. Blank lines and `#` comments
/// are ignored; later keys override earlier ones; unknown keys are errors.
RunConfig parse_run_config(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
/// Every key in a fixed order; parsing the result reproduces the config.
std::string format_run_config(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);

// ---------------------------------------------------------------- data sources

/// Subject streams loaded on demand, so a run can build its training corpus
/// before any held-out subject is read.
class StreamSource {
 public:
  virtual ~StreamSource() = default;
  virtual std::vector<SubjectInfo> subjects() const = 0;
  virtual SignalStream load(const std::string& subject_id) const = 0;
};

class CohortSource final : public StreamSource {
 public:
  explicit CohortSource(Cohort cohort);
  std::vector<SubjectInfo> subjects() const override { return cohort_.subjects; }
  SignalStream load(const std::string& subject_id) const override;

 private:
  Cohort cohort_;
};

/// Files in `data_dir` named `<subject_id>.csv` (canonical or mapped) or
/// `<subject_id>.txt` (Daphnet). Subjects come from `subjects_file` when set,
/// otherwise from the file names (with no features).
class DirectorySource final : public StreamSource {
 public:
  explicit DirectorySource(const RunConfig& cfg);
  std::vector<SubjectInfo> subjects() const override { return subjects_; }
  SignalStream load(const std::string& subject_id) const override;

 private:
  std::filesystem::path path_for(const std::string& id) const;
  RunConfig cfg_;
  ColumnMapping mapping_;
  std::vector<SubjectInfo> subjects_;
};

std::unique_ptr<StreamSource> make_source(const RunConfig& cfg);

/// Converts to g and resamples to the working rate when needed.
SignalStream prepare_stream(const SignalStream& raw, double target_hz);

// ---------------------------------------------------------------- LOGO

enum class ModelKind { SelfSupervised, Supervised };
const char* model_name(ModelKind k);

struct FoldResult {
  ModelKind model = ModelKind::SelfSupervised;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  char train_group = 'A';  ///< the other group is held out
  metrics::WindowMetrics window;
  std::optional<double> auc;
  double test_loss = 0.0;  ///< mean binary cross-entropy on the held-out group
  metrics::EpisodeReport episodes;
  PredictionTrace trace;
  std::uint64_t train_fingerprint = 0;
  std::uint64_t test_fingerprint = 0;
  std::uint64_t encoder_checksum_pretrained = 0;
  std::uint64_t encoder_checksum_finetuned = 0;
  double pretext_initial_loss = 0.0;
  std::vector<double> pretext_loss;
  std::size_t n_train_windows = 0;
  std::size_t n_test_windows = 0;
};

/// Table columns: Prec, Rec, F1, Acc, Spec, Loss, DFE, DFW, AUC.
struct MetricRow {
  std::string label;
  std::array<std::optional<double>, 9> values{};
};
inline constexpr std::array<const char*, 9> kMetricColumns{"Prec", "Rec", "F1",  "Acc", "Spec",
                                                           "Loss", "DFE", "DFW", "AUC"};

struct LogoReport {
  std::vector<FoldResult> folds;
  /// One table per repeat (rows: test group A, test group B).
  std::vector<std::vector<MetricRow>> per_repeat;
  /// Rows: test group A and B averaged over repeats, then Avg, Min, Max, STD
  /// over every fold.
  std::vector<MetricRow> summary;
};

MetricRow fold_row(const FoldResult& f, const std::string& label);
std::vector<MetricRow> summarize(const std::vector<FoldResult>& folds);

/// Training inputs for one group, built from streams loaded in order.
struct GroupData {
  WindowSet pretrain;  ///< fixed-hop windows, used without labels
  WindowSet labeled;   ///< DHWT windows
  std::uint64_t fingerprint = 0;
};
GroupData load_training_group(const StreamSource& src, const std::vector<std::string>& ids, const RunConfig& cfg);

struct TestData {
  std::vector<WindowSet> streams;  ///< fixed-hop windows per subject
  std::uint64_t fingerprint = 0;
};
TestData load_test_group(const StreamSource& src, const std::vector<std::string>& ids, const RunConfig& cfg);

/// Per-window fingerprints; used to prove train and test never share a frame.
std::vector<std::uint64_t> frame_fingerprints(const WindowSet& ws);

/// Evaluates a bundle on every held-out stream and scores the joined trace.
FoldResult evaluate_fold(const ssl::ModelBundle& bundle, const TestData& test, const RunConfig& cfg);

/// Progress messages; empty function for silence.
using Logger = std::function<void(const std::string&)>;

LogoReport run_logo(const RunConfig& cfg, const StreamSource& src, const LogoPlan& plan, ModelKind kind,
                    const Logger& log = {});

std::string metric_table_csv(const std::vector<MetricRow>& rows);
std::string metric_table_text(const std::vector<MetricRow>& rows);
/// Per-fold metrics, one row per (model, repeat, direction); no timing data.
std::string folds_csv(const std::vector<FoldResult>& folds);

// ---------------------------------------------------------------- label-ratio sweep

struct SweepPoint {
  double fraction = 0.0;
  ModelKind model = ModelKind::SelfSupervised;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  double accuracy = 0.0;
};

/// For every fraction, fine-tunes the (cached) pretrained encoder and trains
/// the supervised baseline on that share of labels, using the first repeat
/// seed. Metrics are averaged over both directions. Fractions that leave a
/// single class are skipped with a log message.
std::vector<SweepPoint> label_ratio_sweep(const RunConfig& cfg, const StreamSource& src, const LogoPlan& plan,
                                          const std::vector<double>& fractions, const Logger& log = {});
/// fraction,model,precision,recall,f1,accuracy
std::string sweep_points_csv(const std::vector<SweepPoint>& points);

// ---------------------------------------------------------------- manifest

struct Manifest {
  std::string command;
  RunConfig config;
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, std::string> fingerprints;
  std::vector<std::string> outputs;
  std::optional<LogoPlan> plan;
};

std::string version_string();
std::string manifest_json(const Manifest& m);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fogwatch::harness
