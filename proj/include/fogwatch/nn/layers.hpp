#pragma once

// Layer kernels over stacked activations: a batch of B sequences of length L
// with C channels is a (B*L) x C row-major matrix, sample b occupying rows
// [b*L, (b+1)*L).

#include <cstring>
#include <vector>

#include "fogwatch/common.hpp"

namespace fogwatch::nn {


/// Valid-padding patch matrix: row (b*Lout + t) holds input rows
/// [b*L + t, b*L + t + kernel) flattened, so conv == patches * W.
template <typename Scalar>
Mat<Scalar> im2col(const Mat<Scalar>& x, Index batch, Index kernel) {
  const Index len = x.rows() / batch;
  const Index cin = x.cols();
  const Index out_len = len - kernel + 1;
  Mat<Scalar> patches(batch * out_len, kernel * cin);
  const std::size_t row_bytes = static_cast<std::size_t>(kernel * cin) * sizeof(Scalar);
  for (Index b = 0; b < batch; ++b)
    for (Index t = 0; t < out_len; ++t)
      std::memcpy(patches.data() + (b * out_len + t) * kernel * cin, x.data() + (b * len + t) * cin, row_bytes);
  return patches;
}

/// Adjoint of im2col: scatters patch gradients back onto the input rows.
template <typename Scalar>
Mat<Scalar> col2im(const Mat<Scalar>& dpatches, Index batch, Index kernel, Index cin) {
  const Index out_len = dpatches.rows() / batch;
  const Index len = out_len + kernel - 1;
  Mat<Scalar> dx = Mat<Scalar>::Zero(batch * len, cin);
  for (Index b = 0; b < batch; ++b)
    for (Index t = 0; t < out_len; ++t) {
      Eigen::Map<RowVec<Scalar>> dst(dx.data() + (b * len + t) * cin, kernel * cin);
      dst += dpatches.row(b * out_len + t);
    }
  return dx;
}

template <typename Scalar>
Mat<Scalar> affine(const Mat<Scalar>& x, const Mat<Scalar>& w, const Mat<Scalar>& b) {
  Mat<Scalar> y(x.rows(), w.cols());
  y.noalias() = x * w;
  y.rowwise() += b.row(0);
  return y;
}

template <typename Scalar>
void relu_inplace(Mat<Scalar>& x) {
  x = x.cwiseMax(Scalar(0));
}

/// dL/dz for z -> relu(z), given the layer's relu output.
template <typename Scalar>
Mat<Scalar> relu_backward(const Mat<Scalar>& dy, const Mat<Scalar>& relu_out) {
  return (relu_out.array() > Scalar(0)).select(dy.array(), Scalar(0)).matrix();
}

struct PoolIndex {
  std::vector<Index> argmax;  ///< source row per output element, row-major over the output
};

/// Non-overlapping max pool along time, floor semantics; the first maximal
/// element wins ties.
template <typename Scalar>
Mat<Scalar> maxpool(const Mat<Scalar>& x, Index batch, Index pool, PoolIndex* index) {
  const Index len = x.rows() / batch;
  const Index out_len = len / pool;
  const Index c = x.cols();
  Mat<Scalar> y(batch * out_len, c);
  if (index) index->argmax.resize(static_cast<std::size_t>(batch * out_len * c));
  for (Index b = 0; b < batch; ++b)
    for (Index t = 0; t < out_len; ++t) {
      const Index base = b * len + t * pool;
      for (Index k = 0; k < c; ++k) {
        Index best = base;
        for (Index j = 1; j < pool; ++j)
          if (x(base + j, k) > x(best, k)) best = base + j;
        y(b * out_len + t, k) = x(best, k);
        if (index) index->argmax[static_cast<std::size_t>((b * out_len + t) * c + k)] = best;
      }
    }
  return y;
}

template <typename Scalar>
Mat<Scalar> maxpool_backward(const Mat<Scalar>& dy, const PoolIndex& index, Index input_rows) {
  Mat<Scalar> dx = Mat<Scalar>::Zero(input_rows, dy.cols());
  const Index c = dy.cols();
  for (Index r = 0; r < dy.rows(); ++r)
    for (Index k = 0; k < c; ++k) dx(index.argmax[static_cast<std::size_t>(r * c + k)], k) += dy(r, k);
  return dx;
}

/// Global average pool: (B*L) x C -> B x C.
template <typename Scalar>
Mat<Scalar> global_average_pool(const Mat<Scalar>& x, Index batch) {
  const Index len = x.rows() / batch;
  Mat<Scalar> y(batch, x.cols());
  for (Index b = 0; b < batch; ++b) y.row(b) = x.middleRows(b * len, len).colwise().mean();
  return y;
}

template <typename Scalar>
Mat<Scalar> global_average_pool_backward(const Mat<Scalar>& dy, Index len) {
  Mat<Scalar> dx(dy.rows() * len, dy.cols());
  const Scalar scale = Scalar(1) / static_cast<Scalar>(len);
  for (Index b = 0; b < dy.rows(); ++b) dx.middleRows(b * len, len).rowwise() = dy.row(b) * scale;
  return dx;
}

/// Non-overlapping average pool along time, floor semantics:
/// (B*L) x C -> (B*(L/pool)) x C.
template <typename Scalar>
Mat<Scalar> average_pool(const Mat<Scalar>& x, Index batch, Index pool) {
  const Index len = x.rows() / batch;
  const Index out_len = len / pool;
  Mat<Scalar> y(batch * out_len, x.cols());
  for (Index b = 0; b < batch; ++b)
    for (Index t = 0; t < out_len; ++t) y.row(b * out_len + t) = x.middleRows(b * len + t * pool, pool).colwise().mean();
  return y;
}

template <typename Scalar>
Mat<Scalar> average_pool_backward(const Mat<Scalar>& dy, Index batch, Index len, Index pool) {
  const Index out_len = dy.rows() / batch;
  Mat<Scalar> dx = Mat<Scalar>::Zero(batch * len, dy.cols());
  const Scalar scale = Scalar(1) / static_cast<Scalar>(pool);
  for (Index b = 0; b < batch; ++b)
    for (Index t = 0; t < out_len; ++t)
      dx.middleRows(b * len + t * pool, pool).rowwise() = dy.row(b * out_len + t) * scale;
  return dx;
}

/// Inverted-dropout mask: each entry is 0 with probability `rate`, else
/// 1/(1-rate).
template <typename Scalar>
Mat<Scalar> dropout_mask(Index rows, Index cols, double rate, Rng& rng) {
  Mat<Scalar> m(rows, cols);
  const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - rate));
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = uniform01(rng) < rate ? Scalar(0) : keep_scale;
  return m;
}

}  // namespace fogwatch::nn
