#pragma once

#include <span>
#include <vector>

#include "fogwatch/common.hpp"
#include "fogwatch/nn/arch.hpp"
#include "fogwatch/nn/layers.hpp"
#include "fogwatch/nn/params.hpp"

namespace fogwatch::nn {

enum class Mode { Eval, Train };
enum class Head { Classifier, Pretext };

template <typename Scalar>
struct EncoderCache {
  Index batch = 0;
  std::vector<Mat<Scalar>> patches;   ///< im2col input of each conv layer
  std::vector<Mat<Scalar>> relu_out;  ///< post-ReLU output of each conv layer
  PoolIndex pool_index;
  Index last_len = 0;  ///< time length after the last conv layer
};

template <typename Scalar>
struct HeadCache {
  Head head = Head::Classifier;
  Mat<Scalar> embedding;
  std::vector<Mat<Scalar>> dense_in;   ///< input of each dense layer (post-dropout where applied)
  std::vector<Mat<Scalar>> relu_out;   ///< post-ReLU output of each hidden dense layer
  Mat<Scalar> dropout_mask;            ///< empty in Eval mode
};

template <typename Scalar>
struct ForwardCache {
  EncoderCache<Scalar> encoder;
  HeadCache<Scalar> head;
  std::uint64_t params_version = 0;
  bool valid = false;
};

/// Stacks frames (each T' x C) into a (B*T') x C batch.
template <typename Scalar>
Mat<Scalar> stack_frames(std::span<const Frame> frames, std::span<const std::size_t> indices);
template <typename Scalar>
Mat<Scalar> stack_frames(std::span<const Frame> frames);

/// Encoder f: (B*T') x C -> B x D embeddings.
template <typename Scalar>
Mat<Scalar> encode(const ParamSet<Scalar>& params, const ArchSpec& arch, const Mat<Scalar>& batch,
                   EncoderCache<Scalar>* cache = nullptr);

/// Classifier head on embeddings: B x D -> B x 1 logits. Dropout is active
/// only in Train mode and then requires `rng`.
template <typename Scalar>
Mat<Scalar> classify(const ParamSet<Scalar>& params, const ArchSpec& arch, const Mat<Scalar>& embeddings, Mode mode,
                     Rng* rng, HeadCache<Scalar>* cache = nullptr);

/// Reconstruction head: B x D -> B x (T'*C), row-major over (t, c).
template <typename Scalar>
Mat<Scalar> reconstruct(const ParamSet<Scalar>& params, const ArchSpec& arch, const Mat<Scalar>& embeddings,
                        HeadCache<Scalar>* cache = nullptr);

/// Full network. Classifier head returns logits (B x 1); pretext head
/// returns the flattened reconstruction.
template <typename Scalar>
Mat<Scalar> forward(const ParamSet<Scalar>& params, const ArchSpec& arch, const Mat<Scalar>& batch, Head head,
                    Mode mode, Rng* rng, ForwardCache<Scalar>* cache = nullptr);

/// Backpropagates d_output through the head into `grads`; returns dL/d(embedding).
template <typename Scalar>
Mat<Scalar> backward_head(const ParamSet<Scalar>& params, const HeadCache<Scalar>& cache, const Mat<Scalar>& d_output,
                          ParamSet<Scalar>& grads);

/// Backpropagates dL/d(embedding) through the encoder into `grads`.
template <typename Scalar>
void backward_encoder(const ParamSet<Scalar>& params, const ArchSpec& arch, const EncoderCache<Scalar>& cache,
                      const Mat<Scalar>& d_embedding, ParamSet<Scalar>& grads);

/// Gradients for every array in `params` (zeros for the encoder when
/// `train_encoder` is false). Throws DataError(Structural) if the cache is
/// missing or was produced before the last parameter update.
template <typename Scalar>
ParamSet<Scalar> backward(const ParamSet<Scalar>& params, const ArchSpec& arch, const ForwardCache<Scalar>& cache,
                          const Mat<Scalar>& d_output, bool train_encoder = true);

}  // namespace fogwatch::nn
