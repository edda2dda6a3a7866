#pragma once

#include <cmath>
#include <span>

#include "fogwatch/common.hpp"

namespace fogwatch::nn {

/// Per-entry boolean mask aligned with a (B x T'*C) prediction.
using MaskMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
struct LossGrad {
  double value = 0.0;
  Mat<Scalar> grad;  ///< dL/d(prediction), same shape as the prediction
};

/// Mean squared error over masked entries only:
/// L = (1/N_m) * sum over masked (pred - target)^2.
template <typename Scalar>
LossGrad<Scalar> masked_mse(const Mat<Scalar>& pred, const Mat<Scalar>& target, const MaskMatrix& mask) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() || mask.rows() != pred.rows() ||
      mask.cols() != pred.cols())
    throw DataError(DataError::Kind::Structural, "masked_mse shape mismatch");
  const auto n_masked = mask.count();
  if (n_masked == 0) throw DataError(DataError::Kind::DegenerateInput, "masked_mse needs at least one masked position");
  LossGrad<Scalar> out;
  out.grad = mask.select((pred - target).array(), Scalar(0)).matrix();
  out.value = out.grad.template cast<double>().squaredNorm() / static_cast<double>(n_masked);
  out.grad *= Scalar(2) / static_cast<Scalar>(n_masked);
  return out;
}

/// Binary cross-entropy on logits, mean over the batch, in the stable form
/// max(z,0) - z*y + log(1 + exp(-|z|)).
template <typename Scalar>
LossGrad<Scalar> bce_with_logits(const Mat<Scalar>& logits, std::span<const Label> labels) {
  if (logits.cols() != 1 || static_cast<std::size_t>(logits.rows()) != labels.size())
    throw DataError(DataError::Kind::Structural, "bce shape mismatch");
  const auto n = static_cast<double>(labels.size());
  LossGrad<Scalar> out;
  out.grad.resize(logits.rows(), 1);
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double z = static_cast<double>(logits(i, 0));
    const double y = labels[static_cast<std::size_t>(i)] == Label::FoG ? 1.0 : 0.0;
    total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    const double sig = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    out.grad(i, 0) = static_cast<Scalar>((sig - y) / n);
  }
  out.value = total / n;
  return out;
}

inline double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

}  // namespace fogwatch::nn
