#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "fogwatch/nn/adam.hpp"
#include "fogwatch/nn/arch.hpp"
#include "fogwatch/nn/params.hpp"

namespace fogwatch::nn {

// Weight file layout (all integers u32 little-endian, floats f32 LE):
//   "FOGM1", version byte (1)
//   ArchSpec: input_len, channels, kernel, maxpool_after, pool, final_pool,
//             n_conv, conv_filters..., n_dense, dense_units..., dropout (f64)
//   array count, then per array: name length, name bytes, rank, dims..., payload (row-major)
//   optional: "ADAM", step (u64), then m/<name> and v/<name> arrays in the same form

struct WeightFile {
  ArchSpec arch;
  ParamSet<double> params;
  std::optional<AdamState<double>> adam;
};

std::string encode_weights(const ArchSpec& arch, const ParamSet<double>& params,
                           const AdamState<double>* adam = nullptr);
WeightFile decode_weights(const std::string& bytes);

void save_weights(const std::filesystem::path& path, const ArchSpec& arch, const ParamSet<double>& params,
                  const AdamState<double>* adam = nullptr);
WeightFile load_weights(const std::filesystem::path& path);

}  // namespace fogwatch::nn
