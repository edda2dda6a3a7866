#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fogwatch/common.hpp"

namespace fogwatch {

enum class Unit { G, MeterPerSecond2 };
enum class MedicationState { On, Off, Unknown };

/// A timestamped three-axis accelerometer recording with per-sample labels.
///
/// Invariants (checked by validate()): timestamps strictly increasing with
/// spacing 1/rate_hz within 1e-6 s, one label per sample, rate_hz > 0.
struct SignalStream {
  std::vector<double> time;                       ///< seconds
  Eigen::Matrix<double, Eigen::Dynamic, 3> accel;  ///< ax, ay, az in `unit`
  std::vector<Label> labels;
  double rate_hz = 0.0;
  Unit unit = Unit::G;
  std::string subject_id;
  MedicationState medication = MedicationState::Unknown;

  std::size_t size() const { return time.size(); }
  bool empty() const { return time.empty(); }
  double duration_s() const { return empty() ? 0.0 : time.back() - time.front(); }
  std::size_t fog_samples() const;

  /// Throws DataError(Structural) on any invariant violation.
  void validate() const;
};

/// Builds a stream sampled uniformly from t0 with the given rate.
SignalStream make_uniform_stream(const Eigen::Matrix<double, Eigen::Dynamic, 3>& accel,
                                 std::vector<Label> labels, double rate_hz, double t0 = 0.0);

// Canonical CSV: header `t,ax,ay,az,label`.
SignalStream load_canonical_csv(const std::filesystem::path& path);
SignalStream parse_canonical_csv(const std::string& text);
void write_canonical_csv(const SignalStream& stream, const std::filesystem::path& path);
std::string format_canonical_csv(const SignalStream& stream);

enum class DaphnetSensor { Ankle = 0, Thigh = 1, Trunk = 2 };

/// Daphnet layout: space separated, time in ms, 9 acceleration columns in mg
/// (ankle, thigh, trunk; 3 axes each), annotation 0/1/2.
///
/// Annotation 0 rows are dropped and the remaining samples are re-stamped
/// contiguously at the file's rate, so the result is a uniform stream.
/// Acceleration is converted from mg to g.
SignalStream load_daphnet(const std::filesystem::path& path,
                          DaphnetSensor sensor = DaphnetSensor::Trunk);
SignalStream parse_daphnet(const std::string& text, DaphnetSensor sensor = DaphnetSensor::Trunk);

/// Column mapping for delimited files with named columns (e.g. the tDCS
/// Kaggle layout: Time,AccV,AccML,AccAP,StartHesitation,Turn,Walking).
struct ColumnMapping {
  std::string time_column = "Time";
  bool time_is_sample_index = true;  ///< if true, t = value / rate_hz
  double rate_hz = 128.0;            ///< used when time_is_sample_index
  std::string ax_column = "AccV";
  std::string ay_column = "AccML";
  std::string az_column = "AccAP";
  std::vector<std::string> fog_columns{"StartHesitation", "Turn", "Walking"};
  char delimiter = ',';
  Unit unit = Unit::G;
};

/// Reads `key=value` lines (time_column, time_is_sample_index, rate_hz,
/// ax_column, ay_column, az_column, fog_columns (comma list), delimiter, unit).
ColumnMapping parse_column_mapping(const std::string& text);

SignalStream load_mapped_csv(const std::filesystem::path& path, const ColumnMapping& mapping);
SignalStream parse_mapped_csv(const std::string& text, const ColumnMapping& mapping);

/// Linear interpolation of the signal onto a uniform grid at target_hz starting
/// at the first timestamp; labels are resampled nearest-neighbour.
SignalStream resample(const SignalStream& stream, double target_hz);

/// Standard gravity, for m/s^2 to g conversion.
inline constexpr double kStandardGravity = 9.80665;

/// Copy of the stream expressed in g.
SignalStream to_g(const SignalStream& stream);

/// Subtracts each channel's mean. Works on any Eigen matrix expression.
template <typename Derived>
typename Derived::PlainObject remove_mean(const Eigen::MatrixBase<Derived>& window) {
  typename Derived::PlainObject out = window;
  if (out.rows() > 0) out.rowwise() -= out.colwise().mean();
  return out;
}

}  // namespace fogwatch
