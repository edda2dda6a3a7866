#include "fogwatch/nn/network.hpp"

#include <string>

namespace fogwatch::nn {

namespace {

DataError structural(const std::string& m) { return DataError(DataError::Kind::Structural, m); }

}  // namespace

template <typename Scalar>
Mat<Scalar> stack_frames(std::span<const Frame> frames, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DataError(DataError::Kind::EmptyInput, "empty batch");
  const Index len = frames[indices.front()].rows();
  const Index c = frames[indices.front()].cols();
  Mat<Scalar> out(static_cast<Index>(indices.size()) * len, c);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Frame& f = frames[indices[i]];
    if (f.rows() != len || f.cols() != c) throw structural("frames in a batch must share one shape");
    out.middleRows(static_cast<Index>(i) * len, len) = f.template cast<Scalar>();
  }
  return out;
}

template <typename Scalar>
Mat<Scalar> stack_frames(std::span<const Frame> frames) {
  std::vector<std::size_t> idx(frames.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return stack_frames<Scalar>(frames, idx);
}

template <typename Scalar>
Mat<Scalar> encode(const ParamSet<Scalar>& params, const ArchSpec& arch, const Mat<Scalar>& batch,
                   EncoderCache<Scalar>* cache) {
  const auto len0 = static_cast<Index>(arch.input_len);
  if (batch.cols() != static_cast<Index>(arch.channels) || batch.rows() == 0 || batch.rows() % len0 != 0)
    throw structural("batch shape (" + std::to_string(batch.rows()) + "x" + std::to_string(batch.cols()) +
                     ") does not match input length " + std::to_string(arch.input_len) + " and " +
                     std::to_string(arch.channels) + " channels");
  const Index b = batch.rows() / len0;
  const auto kernel = static_cast<Index>(arch.kernel);
  if (cache) {
    cache->batch = b;
    cache->patches.clear();
    cache->relu_out.clear();
  }

  Mat<Scalar> h = batch;
  for (std::size_t i = 0; i < arch.conv_filters.size(); ++i) {
    const auto& w = params.at(conv_weight(i + 1));
    const auto& bias = params.at(conv_bias(i + 1));
    if (w.rows() != kernel * h.cols() || w.cols() != static_cast<Index>(arch.conv_filters[i]))
      throw structural("conv" + std::to_string(i + 1) + " weight shape mismatch");
    Mat<Scalar> patches = im2col(h, b, kernel);
    Mat<Scalar> a = affine(patches, w, bias);
    relu_inplace(a);
    if (arch.maxpool_after == i + 1) {
      h = maxpool(a, b, static_cast<Index>(arch.pool), cache ? &cache->pool_index : nullptr);
    } else {
      h = a;
    }
    if (cache) {
      cache->patches.push_back(std::move(patches));
      cache->relu_out.push_back(std::move(a));
    }
  }
  if (cache) cache->last_len = h.rows() / b;
  if (arch.final_pool == 0) return global_average_pool(h, b);
  // Row-major storage makes the flatten a reshape: sample b, step t, channel c -> column t * C + c.
  Mat<Scalar> pooled = average_pool(h, b, static_cast<Index>(arch.final_pool));
  const Index width = pooled.size() / b;
  return Eigen::Map<Mat<Scalar>>(pooled.data(), b, width);
}

template <typename Scalar>
Mat<Scalar> classify(const ParamSet<Scalar>& params, const ArchSpec& arch, const Mat<Scalar>& embeddings, Mode mode,
                     Rng* rng, HeadCache<Scalar>* cache) {
  if (embeddings.cols() != static_cast<Index>(arch.embedding_dim())) throw structural("embedding width mismatch");
  if (!params.has(kOutWeight)) throw structural("parameter set has no classifier head");
  if (cache) {
    cache->head = Head::Classifier;
    cache->embedding = embeddings;
    cache->dense_in.clear();
    cache->relu_out.clear();
    cache->dropout_mask.resize(0, 0);
  }
  Mat<Scalar> h = embeddings;
  for (std::size_t i = 0; i < arch.dense_units.size(); ++i) {
    if (cache) cache->dense_in.push_back(h);
    Mat<Scalar> a = affine(h, params.at(dense_weight(i + 1)), params.at(dense_bias(i + 1)));
    relu_inplace(a);
    if (cache) cache->relu_out.push_back(a);
    if (i == 0 && mode == Mode::Train && arch.dropout > 0.0) {
      if (!rng) throw ConfigError("train-mode forward needs a random generator for dropout");
      Mat<Scalar> mask = dropout_mask<Scalar>(a.rows(), a.cols(), arch.dropout, *rng);
      a = a.cwiseProduct(mask);
      if (cache) cache->dropout_mask = std::move(mask);
    }
    h = std::move(a);
  }
  if (cache) cache->dense_in.push_back(h);
  return affine(h, params.at(kOutWeight), params.at(kOutBias));
}

template <typename Scalar>
Mat<Scalar> reconstruct(const ParamSet<Scalar>& params, const ArchSpec& arch, const Mat<Scalar>& embeddings,
                        HeadCache<Scalar>* cache) {
  if (embeddings.cols() != static_cast<Index>(arch.embedding_dim())) throw structural("embedding width mismatch");
  if (!params.has(kPretextWeight)) throw structural("parameter set has no pretext head");
  if (cache) {
    cache->head = Head::Pretext;
    cache->embedding = embeddings;
    cache->dense_in.assign(1, embeddings);
    cache->relu_out.clear();
    cache->dropout_mask.resize(0, 0);
  }
  return affine(embeddings, params.at(kPretextWeight), params.at(kPretextBias));
}

template <typename Scalar>
Mat<Scalar> forward(const ParamSet<Scalar>& params, const ArchSpec& arch, const Mat<Scalar>& batch, Head head,
                    Mode mode, Rng* rng, ForwardCache<Scalar>* cache) {
  Mat<Scalar> emb = encode(params, arch, batch, cache ? &cache->encoder : nullptr);
  Mat<Scalar> out = head == Head::Classifier ? classify(params, arch, emb, mode, rng, cache ? &cache->head : nullptr)
                                             : reconstruct(params, arch, emb, cache ? &cache->head : nullptr);
  if (cache) {
    cache->params_version = params.version;
    cache->valid = true;
  }
  return out;
}

template <typename Scalar>
Mat<Scalar> backward_head(const ParamSet<Scalar>& params, const HeadCache<Scalar>& cache, const Mat<Scalar>& d_output,
                          ParamSet<Scalar>& grads) {
  if (cache.head == Head::Pretext) {
    const Mat<Scalar>& x = cache.dense_in.front();
    grads.at(kPretextWeight).noalias() += x.transpose() * d_output;
    grads.at(kPretextBias) += d_output.colwise().sum();
    return d_output * params.at(kPretextWeight).transpose();
  }

  const std::size_t hidden = cache.relu_out.size();
  grads.at(kOutWeight).noalias() += cache.dense_in.back().transpose() * d_output;
  grads.at(kOutBias) += d_output.colwise().sum();
  Mat<Scalar> d = d_output * params.at(kOutWeight).transpose();
  for (std::size_t k = hidden; k-- > 0;) {
    if (k == 0 && cache.dropout_mask.size() > 0) d = d.cwiseProduct(cache.dropout_mask);
    Mat<Scalar> dz = relu_backward(d, cache.relu_out[k]);
    grads.at(dense_weight(k + 1)).noalias() += cache.dense_in[k].transpose() * dz;
    grads.at(dense_bias(k + 1)) += dz.colwise().sum();
    d = dz * params.at(dense_weight(k + 1)).transpose();
  }
  return d;
}

template <typename Scalar>
void backward_encoder(const ParamSet<Scalar>& params, const ArchSpec& arch, const EncoderCache<Scalar>& cache,
                      const Mat<Scalar>& d_embedding, ParamSet<Scalar>& grads) {
  const Index b = cache.batch;
  const auto kernel = static_cast<Index>(arch.kernel);
  Mat<Scalar> dh;
  if (arch.final_pool == 0) {
    dh = global_average_pool_backward(d_embedding, cache.last_len);
  } else {
    const Index c = static_cast<Index>(arch.conv_filters.back());
    Mat<Scalar> d_pooled = Eigen::Map<const Mat<Scalar>>(d_embedding.data(), d_embedding.size() / c, c);
    dh = average_pool_backward(d_pooled, b, cache.last_len, static_cast<Index>(arch.final_pool));
  }
  for (std::size_t i = arch.conv_filters.size(); i-- > 0;) {
    const Mat<Scalar>& a = cache.relu_out[i];
    if (arch.maxpool_after == i + 1) dh = maxpool_backward(dh, cache.pool_index, a.rows());
    Mat<Scalar> dz = relu_backward(dh, a);
    grads.at(conv_weight(i + 1)).noalias() += cache.patches[i].transpose() * dz;
    grads.at(conv_bias(i + 1)) += dz.colwise().sum();
    if (i == 0) break;
    const auto& w = params.at(conv_weight(i + 1));
    Mat<Scalar> dpatches(dz.rows(), w.rows());
    dpatches.noalias() = dz * w.transpose();
    dh = col2im(dpatches, b, kernel, dpatches.cols() / kernel);
  }
}

template <typename Scalar>
ParamSet<Scalar> backward(const ParamSet<Scalar>& params, const ArchSpec& arch, const ForwardCache<Scalar>& cache,
                          const Mat<Scalar>& d_output, bool train_encoder) {
  if (!cache.valid) throw structural("backward called without a forward cache");
  if (cache.params_version != params.version)
    throw structural("stale forward cache: parameters changed since the forward pass");
  if (d_output.rows() != cache.encoder.batch) throw structural("output gradient batch size mismatch");
  ParamSet<Scalar> grads = params.zeros_like();
  Mat<Scalar> d_emb = backward_head(params, cache.head, d_output, grads);
  if (train_encoder) backward_encoder(params, arch, cache.encoder, d_emb, grads);
  return grads;
}

#define FOGWATCH_INSTANTIATE(S)                                                                                    \
  template Mat<S> stack_frames<S>(std::span<const Frame>, std::span<const std::size_t>);                          \
  template Mat<S> stack_frames<S>(std::span<const Frame>);                                                         \
  template Mat<S> encode(const ParamSet<S>&, const ArchSpec&, const Mat<S>&, EncoderCache<S>*);                   \
  template Mat<S> classify(const ParamSet<S>&, const ArchSpec&, const Mat<S>&, Mode, Rng*, HeadCache<S>*);        \
  template Mat<S> reconstruct(const ParamSet<S>&, const ArchSpec&, const Mat<S>&, HeadCache<S>*);                 \
  template Mat<S> forward(const ParamSet<S>&, const ArchSpec&, const Mat<S>&, Head, Mode, Rng*, ForwardCache<S>*); \
  template Mat<S> backward_head(const ParamSet<S>&, const HeadCache<S>&, const Mat<S>&, ParamSet<S>&);            \
  template void backward_encoder(const ParamSet<S>&, const ArchSpec&, const EncoderCache<S>&, const Mat<S>&,      \
                                 ParamSet<S>&);                                                                    \
  template ParamSet<S> backward(const ParamSet<S>&, const ArchSpec&, const ForwardCache<S>&, const Mat<S>&, bool);

FOGWATCH_INSTANTIATE(float)
FOGWATCH_INSTANTIATE(double)

#undef FOGWATCH_INSTANTIATE

}  // namespace fogwatch::nn
