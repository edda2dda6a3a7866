#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace fogwatch {

/// Row-major dynamic matrix; the layout every stacked (batch*time x channel)
/// activation in the library uses.
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// One window of accelerometer data, T' rows by C channels.
using Frame = Eigen::MatrixXd;
using Eigen::Index;

enum class Label : std::uint8_t { NonFoG = 0, FoG = 1 };

inline constexpr int to_int(Label l) { return static_cast<int>(l); }
inline constexpr Label label_from_bool(bool fog) { return fog ? Label::FoG : Label::NonFoG; }

// Error hierarchy. The CLI maps ConfigError -> 2, DataError -> 3, NumericError -> 4.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  enum class Kind { Parse, Format, Structural, EmptyInput, DegenerateInput, Undefined };

  DataError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// Mixes a master seed with a stage tag and two counters into an independent
/// 64-bit seed (splitmix64 finalizer over an FNV-1a hash of the tag).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t a = 0,
                          std::uint64_t b = 0);

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// FNV-1a over raw bytes; used for data and config fingerprints.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace fogwatch
