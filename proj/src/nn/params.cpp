#include <cmath>
#include <string>

#include "fogwatch/nn/arch.hpp"
#include "fogwatch/nn/params.hpp"

namespace fogwatch::nn {

std::vector<std::size_t> ArchSpec::conv_output_lengths() const {
  std::vector<std::size_t> out;
  std::size_t len = input_len;
  for (std::size_t i = 0; i < conv_filters.size(); ++i) {
    if (len < kernel) throw ConfigError("conv layer " + std::to_string(i + 1) + " input shorter than kernel");
    len = len - kernel + 1;
    if (maxpool_after == i + 1) len /= pool;
    if (len == 0) throw ConfigError("length chain collapses at conv layer " + std::to_string(i + 1));
    out.push_back(len);
  }
  return out;
}

std::size_t ArchSpec::embedding_len() const {
  const std::size_t last = conv_output_lengths().back();
  return final_pool == 0 ? 1 : last / final_pool;
}

std::size_t ArchSpec::embedding_dim() const {
  if (conv_filters.empty()) return 0;
  return embedding_len() * conv_filters.back();
}

void ArchSpec::validate() const {
  if (input_len == 0 || channels == 0 || kernel == 0) throw ConfigError("input_len, channels and kernel must be positive");
  if (conv_filters.empty()) throw ConfigError("at least one conv layer required");
  for (auto f : conv_filters)
    if (f == 0) throw ConfigError("conv filter counts must be positive");
  for (auto u : dense_units)
    if (u == 0) throw ConfigError("dense unit counts must be positive");
  if (maxpool_after > conv_filters.size()) throw ConfigError("maxpool_after beyond last conv layer");
  if (maxpool_after != 0 && pool == 0) throw ConfigError("pool size must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (embedding_len() == 0) throw ConfigError("final_pool exceeds the last conv output length");
}

ParamGroup group_of(std::string_view name) {
  if (name.starts_with("conv")) return ParamGroup::Encoder;
  if (name.starts_with("pretext")) return ParamGroup::Pretext;
  return ParamGroup::Classifier;
}

std::string conv_weight(std::size_t layer) { return "conv" + std::to_string(layer) + ".w"; }
std::string conv_bias(std::size_t layer) { return "conv" + std::to_string(layer) + ".b"; }
std::string dense_weight(std::size_t layer) { return "dense" + std::to_string(layer) + ".w"; }
std::string dense_bias(std::size_t layer) { return "dense" + std::to_string(layer) + ".b"; }

template <typename Scalar>
Mat<Scalar>& ParamSet<Scalar>::at(const std::string& name) {
  auto it = arrays.find(name);
  if (it == arrays.end()) throw DataError(DataError::Kind::Structural, "missing parameter array " + name);
  return it->second;
}

template <typename Scalar>
const Mat<Scalar>& ParamSet<Scalar>::at(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end()) throw DataError(DataError::Kind::Structural, "missing parameter array " + name);
  return it->second;
}

namespace {

template <typename Scalar>
Mat<Scalar> uniform_matrix(std::size_t rows, std::size_t cols, double limit, Rng& rng) {
  Mat<Scalar> m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(uniform(rng, -limit, limit));
  return m;
}

template <typename Scalar>
void add_layer(ParamSet<Scalar>& p, const std::string& w, const std::string& b, std::size_t fan_in,
               std::size_t fan_out, double limit, Rng& rng) {
  p.arrays[w] = uniform_matrix<Scalar>(fan_in, fan_out, limit, rng);
  p.arrays[b] = Mat<Scalar>::Zero(1, static_cast<Index>(fan_out));
}

double he_limit(std::size_t fan_in) { return std::sqrt(6.0 / static_cast<double>(fan_in)); }
double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace

template <typename Scalar>
void init_encoder(ParamSet<Scalar>& params, const ArchSpec& arch, Rng& rng) {
  arch.validate();
  std::size_t cin = arch.channels;
  for (std::size_t i = 0; i < arch.conv_filters.size(); ++i) {
    const std::size_t fan_in = arch.kernel * cin;
    add_layer(params, conv_weight(i + 1), conv_bias(i + 1), fan_in, arch.conv_filters[i], he_limit(fan_in), rng);
    cin = arch.conv_filters[i];
  }
}

template <typename Scalar>
void init_classifier(ParamSet<Scalar>& params, const ArchSpec& arch, Rng& rng) {
  arch.validate();
  std::size_t in = arch.embedding_dim();
  for (std::size_t i = 0; i < arch.dense_units.size(); ++i) {
    add_layer(params, dense_weight(i + 1), dense_bias(i + 1), in, arch.dense_units[i], he_limit(in), rng);
    in = arch.dense_units[i];
  }
  add_layer(params, kOutWeight, kOutBias, in, 1, glorot_limit(in, 1), rng);
}

template <typename Scalar>
void init_pretext(ParamSet<Scalar>& params, const ArchSpec& arch, Rng& rng) {
  arch.validate();
  const std::size_t in = arch.embedding_dim();
  const std::size_t out = arch.reconstruction_dim();
  add_layer(params, kPretextWeight, kPretextBias, in, out, glorot_limit(in, out), rng);
}

template struct ParamSet<float>;
template struct ParamSet<double>;
template void init_encoder(ParamSet<float>&, const ArchSpec&, Rng&);
template void init_encoder(ParamSet<double>&, const ArchSpec&, Rng&);
template void init_classifier(ParamSet<float>&, const ArchSpec&, Rng&);
template void init_classifier(ParamSet<double>&, const ArchSpec&, Rng&);
template void init_pretext(ParamSet<float>&, const ArchSpec&, Rng&);
template void init_pretext(ParamSet<double>&, const ArchSpec&, Rng&);

}  // namespace fogwatch::nn
