#include "fogwatch/windowing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "binary_io.hpp"
#include "text_util.hpp"

namespace fogwatch {

namespace detail {

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError(DataError::Kind::Parse, "cannot write " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace detail

void WindowSpec::validate() const {
  if (!(window_s > 0.0)) throw ConfigError("window_s must be positive");
  if (!(hop_nonfog_frac > 0.0 && hop_nonfog_frac <= 1.0)) throw ConfigError("hop_nonfog_frac must be in (0, 1]");
  if (!(hop_fog_frac > 0.0 && hop_fog_frac <= 1.0)) throw ConfigError("hop_fog_frac must be in (0, 1]");
  if (!(label_threshold > 0.0 && label_threshold <= 1.0)) throw ConfigError("label_threshold must be in (0, 1]");
}

std::size_t WindowSpec::window_samples(double rate_hz) const {
  return static_cast<std::size_t>(std::llround(window_s * rate_hz));
}

std::size_t WindowSpec::hop_nonfog_samples(double rate_hz) const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(hop_nonfog_frac * static_cast<double>(window_samples(rate_hz)))));
}

std::size_t WindowSpec::hop_fog_samples(double rate_hz) const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(hop_fog_frac * static_cast<double>(window_samples(rate_hz)))));
}

Frame WindowSet::raw_frame(std::size_t i) const {
  Frame f = frames.at(i);
  f.rowwise() += channel_mean.at(i);
  return f;
}

WindowSet WindowSet::select(const std::vector<std::size_t>& indices) const {
  WindowSet out;
  out.spec = spec;
  out.rate_hz = rate_hz;
  out.subject_id = subject_id;
  out.frames.reserve(indices.size());
  // Provenance is copied only when the set carries it.
  const bool prov = fog_fraction.size() == size() && start_index.size() == size() && channel_mean.size() == size();
  for (auto i : indices) {
    out.frames.push_back(frames.at(i));
    out.labels.push_back(labels.at(i));
    if (!prov) continue;
    out.fog_fraction.push_back(fog_fraction[i]);
    out.start_index.push_back(start_index[i]);
    out.channel_mean.push_back(channel_mean[i]);
  }
  return out;
}

void WindowSet::append(const WindowSet& other) {
  if (other.empty()) return;
  if (!empty() && other.window_samples() != window_samples())
    throw DataError(DataError::Kind::Structural, "cannot append windows of different length");
  if (!empty() && rate_hz > 0 && other.rate_hz > 0 && rate_hz != other.rate_hz)
    throw DataError(DataError::Kind::Structural, "cannot append windows of different sampling rates");
  if (empty()) {
    spec = other.spec;
    rate_hz = other.rate_hz;
  }
  frames.insert(frames.end(), other.frames.begin(), other.frames.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  fog_fraction.insert(fog_fraction.end(), other.fog_fraction.begin(), other.fog_fraction.end());
  start_index.insert(start_index.end(), other.start_index.begin(), other.start_index.end());
  channel_mean.insert(channel_mean.end(), other.channel_mean.begin(), other.channel_mean.end());
  mixed_count += other.mixed_count;
}

WindowSet segment(const SignalStream& stream, const WindowSpec& spec) {
  spec.validate();
  const std::size_t win = spec.window_samples(stream.rate_hz);
  if (win == 0) throw ConfigError("window shorter than one sample");
  if (stream.size() < win) throw DataError(DataError::Kind::EmptyInput, "stream shorter than one window");
  const std::size_t hop_non = spec.hop_nonfog_samples(stream.rate_hz);
  const std::size_t hop_fog = spec.hop_fog_samples(stream.rate_hz);

  // prefix[i] = FoG samples in [0, i)
  std::vector<std::size_t> prefix(stream.size() + 1, 0);
  for (std::size_t i = 0; i < stream.size(); ++i)
    prefix[i + 1] = prefix[i] + (stream.labels[i] == Label::FoG ? 1 : 0);

  WindowSet ws;
  ws.spec = spec;
  ws.rate_hz = stream.rate_hz;
  ws.subject_id = stream.subject_id;
  const bool train = spec.mode == SegmentMode::TrainDHWT;
  const auto rows = static_cast<Eigen::Index>(win);

  for (std::size_t start = 0; start + win <= stream.size();) {
    const std::size_t fog = prefix[start + win] - prefix[start];
    const double frac = static_cast<double>(fog) / static_cast<double>(win);
    const bool is_fog = frac >= spec.label_threshold;
    const bool mixed = fog > 0 && !is_fog;
    if (mixed) ++ws.mixed_count;
    if (!(train && mixed)) {
      Frame raw = stream.accel.middleRows(static_cast<Eigen::Index>(start), rows);
      Eigen::RowVector3d mean = raw.colwise().mean();
      ws.frames.push_back(remove_mean(raw));
      ws.labels.push_back(label_from_bool(is_fog));
      ws.fog_fraction.push_back(frac);
      ws.start_index.push_back(start);
      ws.channel_mean.push_back(mean);
    }
    start += (train && is_fog) ? hop_fog : hop_non;
  }
  return ws;
}

std::pair<double, double> class_balance(const WindowSet& ws) {
  if (ws.empty()) throw DataError(DataError::Kind::EmptyInput, "class balance of an empty window set");
  const auto fog = static_cast<double>(std::count(ws.labels.begin(), ws.labels.end(), Label::FoG));
  const double fog_frac = fog / static_cast<double>(ws.size());
  return {1.0 - fog_frac, fog_frac};
}

std::string encode_windows(const WindowSet& ws, bool with_trailer) {
  detail::ByteWriter w;
  w.bytes("FOGW1");
  const auto n = static_cast<std::uint32_t>(ws.size());
  const auto t = static_cast<std::uint32_t>(ws.window_samples());
  const auto c = static_cast<std::uint32_t>(ws.empty() ? 3 : ws.frames.front().cols());
  w.u32(n);
  w.u32(t);
  w.u32(c);
  for (const auto& f : ws.frames)
    for (Eigen::Index r = 0; r < f.rows(); ++r)
      for (Eigen::Index k = 0; k < f.cols(); ++k) w.f32(static_cast<float>(f(r, k)));
  for (auto l : ws.labels) w.u8(static_cast<std::uint8_t>(l));
  if (with_trailer) {
    if (ws.start_index.size() != ws.size() || ws.fog_fraction.size() != ws.size() || ws.channel_mean.size() != ws.size())
      throw DataError(DataError::Kind::Structural, "window set has no provenance to write");
    w.bytes("FOGX");
    for (std::size_t i = 0; i < ws.size(); ++i) {
      w.u32(static_cast<std::uint32_t>(ws.start_index[i]));
      w.f32(static_cast<float>(ws.fog_fraction[i]));
      for (int k = 0; k < 3; ++k) w.f32(static_cast<float>(ws.channel_mean[i][k]));
    }
    w.f64(ws.spec.window_s);
    w.f64(ws.spec.hop_nonfog_frac);
    w.f64(ws.spec.hop_fog_frac);
    w.f64(ws.spec.label_threshold);
    w.u8(ws.spec.mode == SegmentMode::TrainDHWT ? 0 : 1);
    w.f64(ws.rate_hz);
  }
  return w.take();
}

WindowSet decode_windows(const std::string& bytes) {
  detail::ByteReader r(bytes);
  if (r.bytes(5) != "FOGW1") throw DataError(DataError::Kind::Format, "missing FOGW1 magic");
  const std::uint32_t n = r.u32();
  const std::uint32_t t = r.u32();
  const std::uint32_t c = r.u32();
  if (c != 3) throw DataError(DataError::Kind::Format, "only 3-channel windows are supported");
  WindowSet ws;
  ws.frames.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    Frame f(t, c);
    for (std::uint32_t row = 0; row < t; ++row)
      for (std::uint32_t k = 0; k < c; ++k) f(row, k) = r.f32();
    ws.frames.push_back(std::move(f));
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto l = r.u8();
    if (l > 1) throw DataError(DataError::Kind::Format, "label byte out of range");
    ws.labels.push_back(static_cast<Label>(l));
  }
  if (r.remaining() >= 4 && r.bytes(4) == "FOGX") {
    for (std::uint32_t i = 0; i < n; ++i) {
      ws.start_index.push_back(r.u32());
      ws.fog_fraction.push_back(r.f32());
      Eigen::RowVector3d m;
      for (int k = 0; k < 3; ++k) m[k] = r.f32();
      ws.channel_mean.push_back(m);
    }
    ws.spec.window_s = r.f64();
    ws.spec.hop_nonfog_frac = r.f64();
    ws.spec.hop_fog_frac = r.f64();
    ws.spec.label_threshold = r.f64();
    ws.spec.mode = r.u8() == 0 ? SegmentMode::TrainDHWT : SegmentMode::InferenceFixed;
    ws.rate_hz = r.f64();
  } else {
    for (std::uint32_t i = 0; i < n; ++i) {
      ws.start_index.push_back(i);
      ws.fog_fraction.push_back(ws.labels[i] == Label::FoG ? 1.0 : 0.0);
      ws.channel_mean.push_back(Eigen::RowVector3d::Zero());
    }
  }
  return ws;
}

void write_windows(const WindowSet& ws, const std::filesystem::path& path, bool with_trailer) {
  detail::write_bytes(path.string(), encode_windows(ws, with_trailer));
}

WindowSet read_windows(const std::filesystem::path& path) { return decode_windows(detail::read_file(path.string())); }

}  // namespace fogwatch
