#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>

#include "fogwatch/nn/params.hpp"

namespace fogwatch::nn {

/// TimeBased: lr_t = lr / (1 + decay * t). Weight: L2 term decay * w added to
/// the gradient, constant rate.
enum class DecayMode { TimeBased, Weight };

struct OptimizerSpec {
  double learning_rate = 0.01;
  double decay = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 64;
  DecayMode decay_mode = DecayMode::TimeBased;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(decay >= 0.0)) throw ConfigError("decay must be non-negative");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
  }
};

template <typename Scalar>
struct AdamState {
  std::map<std::string, Mat<Scalar>> m;
  std::map<std::string, Mat<Scalar>> v;
  std::uint64_t step = 0;  ///< completed updates
};

/// One bias-corrected Adam update of every array that has a gradient and
/// passes `trainable`. Arrays outside that set are not touched. Throws
/// NumericError before modifying anything if a gradient is non-finite.
template <typename Scalar>
void adam_step(ParamSet<Scalar>& params, AdamState<Scalar>& state, const ParamSet<Scalar>& grads,
               const OptimizerSpec& opt, const std::function<bool(const std::string&)>& trainable = {}) {
  auto selected = [&](const std::string& name) { return !trainable || trainable(name); };
  for (const auto& [name, g] : grads.arrays) {
    if (!selected(name)) continue;
    if (!params.has(name) || params.at(name).rows() != g.rows() || params.at(name).cols() != g.cols())
      throw DataError(DataError::Kind::Structural, "gradient shape does not match parameter " + name);
    if (!g.allFinite()) throw NumericError("non-finite gradient for " + name + " at step " + std::to_string(state.step));
  }

  const double t = static_cast<double>(state.step);
  const double lr = opt.decay_mode == DecayMode::TimeBased ? opt.learning_rate / (1.0 + opt.decay * t)
                                                           : opt.learning_rate;
  const double bc1 = 1.0 - std::pow(opt.beta1, t + 1.0);
  const double bc2 = 1.0 - std::pow(opt.beta2, t + 1.0);
  const auto b1 = static_cast<Scalar>(opt.beta1);
  const auto b2 = static_cast<Scalar>(opt.beta2);

  for (const auto& [name, g_raw] : grads.arrays) {
    if (!selected(name)) continue;
    Mat<Scalar>& p = params.at(name);
    Mat<Scalar> g = g_raw;
    if (opt.decay_mode == DecayMode::Weight && opt.decay > 0.0) g += static_cast<Scalar>(opt.decay) * p;
    auto [mit, m_new] = state.m.try_emplace(name, Mat<Scalar>::Zero(g.rows(), g.cols()));
    auto [vit, v_new] = state.v.try_emplace(name, Mat<Scalar>::Zero(g.rows(), g.cols()));
    Mat<Scalar>& m = mit->second;
    Mat<Scalar>& v = vit->second;
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseAbs2();
    const auto m_scale = static_cast<Scalar>(1.0 / bc1);
    const auto v_scale = static_cast<Scalar>(1.0 / bc2);
    const auto step = static_cast<Scalar>(lr);
    const auto eps = static_cast<Scalar>(opt.epsilon);
    p.array() -= step * (m.array() * m_scale) / ((v.array() * v_scale).sqrt() + eps);
  }
  ++state.step;
  ++params.version;
}

}  // namespace fogwatch::nn
