#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fogwatch/common.hpp"
#include "fogwatch/ingest.hpp"

namespace fogwatch {

enum class SegmentMode { TrainDHWT, InferenceFixed };

/// Window geometry. Defaults: 3 s windows, 50% overlap outside FoG, 75%
/// overlap inside FoG, a window is FoG when at least half its samples are.
struct WindowSpec {
  double window_s = 3.0;
  double hop_nonfog_frac = 0.5;
  double hop_fog_frac = 0.25;
  double label_threshold = 0.5;
  SegmentMode mode = SegmentMode::TrainDHWT;

  void validate() const;
  std::size_t window_samples(double rate_hz) const;
  std::size_t hop_nonfog_samples(double rate_hz) const;
  std::size_t hop_fog_samples(double rate_hz) const;
};

/// Segmented, mean-removed frames with their labels and provenance.
///
/// `channel_mean` holds what remove_mean subtracted from each frame, so the
/// raw frame is recoverable for the activation gate (raw_frame()).
struct WindowSet {
  std::vector<Frame> frames;
  std::vector<Label> labels;
  std::vector<double> fog_fraction;
  std::vector<std::size_t> start_index;
  std::vector<Eigen::RowVector3d> channel_mean;
  WindowSpec spec;
  double rate_hz = 0.0;
  std::size_t mixed_count = 0;  ///< windows with 0 < fog_fraction < threshold seen during segmentation
  std::string subject_id;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
  std::size_t window_samples() const { return frames.empty() ? 0 : static_cast<std::size_t>(frames.front().rows()); }
  Frame raw_frame(std::size_t i) const;

  /// Subset in the given order.
  WindowSet select(const std::vector<std::size_t>& indices) const;
  /// Concatenation; specs and rates must agree.
  void append(const WindowSet& other);
};

WindowSet segment(const SignalStream& stream, const WindowSpec& spec);

/// (nonfog_frac, fog_frac) over the windows of a set.
std::pair<double, double> class_balance(const WindowSet& ws);

// Binary container: magic "FOGW1", N, T', C as u32 LE, frames as f32 LE
// (row-major per frame), labels as one byte each. An optional trailer
// ("FOGX" + per-window start index u32, fog fraction f32, channel means 3xf32,
// then window_s, hops, threshold, rate as f64) carries provenance.
void write_windows(const WindowSet& ws, const std::filesystem::path& path, bool with_trailer = true);
std::string encode_windows(const WindowSet& ws, bool with_trailer = true);
WindowSet read_windows(const std::filesystem::path& path);
WindowSet decode_windows(const std::string& bytes);

}  // namespace fogwatch
