#pragma once

#include <cstddef>
#include <vector>

namespace fogwatch::nn {

/// Stacked 1D CNN encoder followed by either a dense classifier head or a
/// linear reconstruction head.
///
/// Convolutions use valid padding and ReLU. An optional max-pool follows
/// conv layer `maxpool_after` (1-based, 0 disables). After the last conv
/// layer an average pool of size `final_pool` is flattened into the
/// embedding; `final_pool` 0 means a global average instead. At the defaults
/// the time axis runs 120 -> 118 -> 116 -> pool 58 -> 56 -> 54 -> 52 ->
/// avg 26, giving a 26 * 64 embedding.
struct ArchSpec {
  std::size_t input_len = 120;
  std::size_t channels = 3;
  std::vector<std::size_t> conv_filters{64, 128, 256, 128, 64};
  std::size_t kernel = 3;
  std::size_t maxpool_after = 2;
  std::size_t pool = 2;
  std::size_t final_pool = 2;
  std::vector<std::size_t> dense_units{128, 64};
  double dropout = 0.4;  ///< after the first dense layer

  /// Time length at the output of each conv layer, pooling included.
  std::vector<std::size_t> conv_output_lengths() const;
  /// Time length entering the dense heads (1 for a global average).
  std::size_t embedding_len() const;
  std::size_t embedding_dim() const;
  std::size_t reconstruction_dim() const { return input_len * channels; }

  /// Throws ConfigError if any count is zero or the length chain collapses.
  void validate() const;

  bool operator==(const ArchSpec&) const = default;
};

}  // namespace fogwatch::nn
