#pragma once

// Deliberately naive reference implementations used as test oracles. They
// share nothing with the library's vectorised code paths.

#include <algorithm>
#include <cmath>
#include <vector>

#include "fogwatch/nn/arch.hpp"
#include "fogwatch/nn/params.hpp"

namespace oracle {

using fogwatch::Frame;
using fogwatch::Index;
using fogwatch::nn::ArchSpec;
using fogwatch::nn::ParamSet;

// h[t][c] for one window.
using Seq = std::vector<std::vector<double>>;

inline Seq from_frame(const Frame& f) {
  Seq s(static_cast<std::size_t>(f.rows()), std::vector<double>(static_cast<std::size_t>(f.cols())));
  for (Index t = 0; t < f.rows(); ++t)
    for (Index c = 0; c < f.cols(); ++c) s[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)] = f(t, c);
  return s;
}

inline Seq conv_relu(const Seq& x, const fogwatch::Mat<double>& w, const fogwatch::Mat<double>& b, std::size_t k) {
  const std::size_t cin = x[0].size();
  const std::size_t cout = static_cast<std::size_t>(w.cols());
  Seq y(x.size() - k + 1, std::vector<double>(cout));
  for (std::size_t t = 0; t < y.size(); ++t)
    for (std::size_t f = 0; f < cout; ++f) {
      double acc = b(0, static_cast<Index>(f));
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t c = 0; c < cin; ++c)
          acc += x[t + j][c] * w(static_cast<Index>(j * cin + c), static_cast<Index>(f));
      y[t][f] = std::max(acc, 0.0);
    }
  return y;
}

inline Seq maxpool(const Seq& x, std::size_t p) {
  Seq y(x.size() / p, std::vector<double>(x[0].size()));
  for (std::size_t t = 0; t < y.size(); ++t)
    for (std::size_t c = 0; c < x[0].size(); ++c) {
      double m = x[t * p][c];
      for (std::size_t j = 1; j < p; ++j) m = std::max(m, x[t * p + j][c]);
      y[t][c] = m;
    }
  return y;
}

inline std::vector<double> dense(const std::vector<double>& x, const fogwatch::Mat<double>& w,
                                 const fogwatch::Mat<double>& b, bool relu) {
  std::vector<double> y(static_cast<std::size_t>(w.cols()));
  for (std::size_t o = 0; o < y.size(); ++o) {
    double acc = b(0, static_cast<Index>(o));
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * w(static_cast<Index>(i), static_cast<Index>(o));
    y[o] = relu ? std::max(acc, 0.0) : acc;
  }
  return y;
}

inline std::vector<double> embed(const ParamSet<double>& p, const ArchSpec& a, const Frame& frame) {
  Seq h = from_frame(frame);
  for (std::size_t i = 0; i < a.conv_filters.size(); ++i) {
    h = conv_relu(h, p.at(fogwatch::nn::conv_weight(i + 1)), p.at(fogwatch::nn::conv_bias(i + 1)), a.kernel);
    if (a.maxpool_after == i + 1) h = maxpool(h, a.pool);
  }
  if (a.final_pool == 0) {
    std::vector<double> g(h[0].size(), 0.0);
    for (const auto& row : h)
      for (std::size_t c = 0; c < g.size(); ++c) g[c] += row[c];
    for (auto& v : g) v /= static_cast<double>(h.size());
    return g;
  }
  std::vector<double> flat;
  for (std::size_t t = 0; t + a.final_pool <= h.size(); t += a.final_pool)
    for (std::size_t c = 0; c < h[0].size(); ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < a.final_pool; ++j) s += h[t + j][c];
      flat.push_back(s / static_cast<double>(a.final_pool));
    }
  return flat;
}

// Eval-mode logit.
inline double logit(const ParamSet<double>& p, const ArchSpec& a, const Frame& frame) {
  auto h = embed(p, a, frame);
  for (std::size_t i = 0; i < a.dense_units.size(); ++i)
    h = dense(h, p.at(fogwatch::nn::dense_weight(i + 1)), p.at(fogwatch::nn::dense_bias(i + 1)), true);
  return dense(h, p.at(fogwatch::nn::kOutWeight), p.at(fogwatch::nn::kOutBias), false)[0];
}

inline std::vector<double> reconstruction(const ParamSet<double>& p, const ArchSpec& a, const Frame& frame) {
  return dense(embed(p, a, frame), p.at(fogwatch::nn::kPretextWeight), p.at(fogwatch::nn::kPretextBias), false);
}

}  // namespace oracle
