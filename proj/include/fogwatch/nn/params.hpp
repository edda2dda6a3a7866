#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "fogwatch/common.hpp"
#include "fogwatch/nn/arch.hpp"

namespace fogwatch::nn {

enum class ParamGroup { Encoder, Classifier, Pretext };

/// conv* -> Encoder, dense* / out.* -> Classifier, pretext.* -> Pretext.
ParamGroup group_of(std::string_view name);

std::string conv_weight(std::size_t layer);  // 1-based
std::string conv_bias(std::size_t layer);
std::string dense_weight(std::size_t layer);
std::string dense_bias(std::size_t layer);
inline const char* kOutWeight = "out.w";
inline const char* kOutBias = "out.b";
inline const char* kPretextWeight = "pretext.w";
inline const char* kPretextBias = "pretext.b";

/// Named parameter arrays. Weights are (fan_in x fan_out); biases are 1 x n.
/// Conv weights are (kernel*in_channels x filters) with tap-major rows.
template <typename Scalar>
struct ParamSet {
  std::map<std::string, Mat<Scalar>> arrays;
  std::uint64_t version = 0;  ///< bumped by every optimizer update

  bool has(const std::string& name) const { return arrays.count(name) != 0; }
  Mat<Scalar>& at(const std::string& name);
  const Mat<Scalar>& at(const std::string& name) const;

  bool has_group(ParamGroup g) const {
    for (const auto& [name, _] : arrays)
      if (group_of(name) == g) return true;
    return false;
  }

  ParamSet zeros_like() const {
    ParamSet z;
    for (const auto& [name, a] : arrays) z.arrays.emplace(name, Mat<Scalar>::Zero(a.rows(), a.cols()));
    return z;
  }

  template <typename To>
  ParamSet<To> cast() const {
    ParamSet<To> out;
    out.version = version;
    for (const auto& [name, a] : arrays) out.arrays.emplace(name, a.template cast<To>());
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, a] : arrays) n += static_cast<std::size_t>(a.size());
    return n;
  }
};

/// FNV-1a over the arrays of one group, in name order; used to prove a group
/// was left untouched.
template <typename Scalar>
std::uint64_t group_checksum(const ParamSet<Scalar>& params, ParamGroup group) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, a] : params.arrays) {
    if (group_of(name) != group) continue;
    h = fnv1a(name.data(), name.size(), h);
    h = fnv1a(a.data(), static_cast<std::size_t>(a.size()) * sizeof(Scalar), h);
  }
  return h;
}

// He-uniform for ReLU layers, Glorot-uniform for the sigmoid output and the
// linear reconstruction head; biases start at zero.
template <typename Scalar>
void init_encoder(ParamSet<Scalar>& params, const ArchSpec& arch, Rng& rng);
template <typename Scalar>
void init_classifier(ParamSet<Scalar>& params, const ArchSpec& arch, Rng& rng);
template <typename Scalar>
void init_pretext(ParamSet<Scalar>& params, const ArchSpec& arch, Rng& rng);

}  // namespace fogwatch::nn
