#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fogwatch/nn/adam.hpp"
#include "fogwatch/nn/arch.hpp"
#include "fogwatch/nn/losses.hpp"
#include "fogwatch/nn/params.hpp"
#include "fogwatch/trace.hpp"
#include "fogwatch/windowing.hpp"

namespace fogwatch::ssl {

/// Arithmetic used inside training loops. Stored weights are always double.
enum class Precision { Float32, Float64 };

/// Masked-reconstruction corruption: `num_segments` non-overlapping runs of
/// `segment_len` time steps, every channel replaced by `fill_value`.
struct MaskSpec {
  std::size_t segment_len = 10;
  std::size_t num_segments = 2;
  double fill_value = 0.0;
  std::uint64_t seed = 0;

  void validate(std::size_t window_len) const;
};

struct TrainPlan {
  std::size_t pretrain_epochs = 70;
  double pretrain_lr = 0.001;
  double pretrain_decay = 0.001;
  std::size_t finetune_epochs = 40;
  double finetune_lr = 0.0001;
  double finetune_decay = 0.001;
  std::size_t supervised_epochs = 110;
  double supervised_lr = 0.01;
  double supervised_decay = 0.001;
  std::size_t batch_size = 64;
  double label_fraction = 1.0;
  bool freeze_encoder = true;
  nn::DecayMode decay_mode = nn::DecayMode::TimeBased;
  Precision precision = Precision::Float32;

  void validate() const;
  nn::OptimizerSpec pretrain_optimizer() const;
  nn::OptimizerSpec finetune_optimizer() const;
  nn::OptimizerSpec supervised_optimizer() const;
};

/// Frames without labels. Pretraining only accepts this view, so it has no
/// way to read ground truth.
class UnlabeledView {
 public:
  explicit UnlabeledView(const WindowSet& ws) : frames_(ws.frames) {}
  explicit UnlabeledView(std::span<const Frame> frames) : frames_(frames) {}

  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  const Frame& frame(std::size_t i) const { return frames_[i]; }
  std::span<const Frame> frames() const { return frames_; }
  std::uint64_t fingerprint() const;

 private:
  std::span<const Frame> frames_;
};

/// Masked time steps (sorted) for one window of length `window_len`.
std::vector<std::size_t> draw_mask(std::size_t window_len, const MaskSpec& mask, Rng& rng);

/// Seed used for window `index` in `epoch`; apply_mask uses epoch 0.
std::uint64_t mask_seed(const MaskSpec& mask, std::size_t epoch, std::size_t index);

struct MaskedFrames {
  std::vector<Frame> frames;                    ///< corrupted copies
  std::vector<std::vector<std::size_t>> steps;  ///< masked time steps per frame
};

MaskedFrames apply_mask(const UnlabeledView& ws, const MaskSpec& mask);

/// Flattened (t * C + c) mask for a batch of masked step lists.
nn::MaskMatrix mask_matrix(const std::vector<std::vector<std::size_t>>& steps, std::size_t window_len,
                           std::size_t channels);

struct RunMetadata {
  std::string stage;  ///< "pretrain", "finetune" or "supervised"
  std::uint64_t seed = 0;
  std::uint64_t data_fingerprint = 0;
  std::size_t n_windows = 0;
  std::size_t n_fog = 0;
  TrainPlan plan;
  MaskSpec mask;
};

struct ModelBundle {
  nn::ArchSpec arch;
  nn::ParamSet<double> params;
  /// Masked MSE of the untrained network over the corpus (epoch-0 masks).
  double pretext_initial_loss = 0.0;
  /// Mean batch loss of each pretraining epoch.
  std::vector<double> pretext_loss;
  /// Mean batch loss of each fine-tuning (or supervised) epoch.
  std::vector<double> classifier_loss;
  std::vector<RunMetadata> history;

  bool has_encoder() const { return params.has_group(nn::ParamGroup::Encoder); }
  bool has_classifier() const { return params.has_group(nn::ParamGroup::Classifier); }
  std::uint64_t encoder_checksum() const { return nn::group_checksum(params, nn::ParamGroup::Encoder); }
};

/// Writes `path` (weights) and `path` + ".json" (metadata sidecar).
void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& path);
std::string bundle_metadata_json(const ModelBundle& bundle);

ModelBundle pretrain(const UnlabeledView& ws, const nn::ArchSpec& arch, const TrainPlan& plan, const MaskSpec& mask,
                     std::uint64_t seed);

/// Indices of a stratified, seeded subsample holding round(f * N) windows
/// with round(f * N_fog) FoG windows. Fraction 1 returns every index.
std::vector<std::size_t> stratified_subsample(std::span<const Label> labels, double fraction, std::uint64_t seed);

/// Trains a fresh classifier head on `ws` (after label_fraction subsampling).
/// With freeze_encoder the encoder arrays are copied through untouched.
ModelBundle finetune(const ModelBundle& bundle, const WindowSet& ws, const TrainPlan& plan, std::uint64_t seed);

/// Fully supervised baseline: encoder and classifier trained together from
/// random initialisation.
ModelBundle train_supervised(const WindowSet& ws, const nn::ArchSpec& arch, const TrainPlan& plan,
                             std::uint64_t seed);

/// Eval-mode probabilities for a batch of frames.
std::vector<double> predict_proba(const ModelBundle& bundle, std::span<const Frame> frames);

/// One forward pass per window, timed individually. Decision is FoG iff
/// p >= 0.5. Magnitude is filled from the raw frames; every window is active.
PredictionTrace predict(const ModelBundle& bundle, const WindowSet& ws);

/// Trace skeleton (truth, provenance, magnitude) with no model output.
PredictionTrace empty_trace(const WindowSet& ws);

}  // namespace fogwatch::ssl
