#include "fogwatch/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "text_util.hpp"

namespace fogwatch {

namespace detail {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataError::Kind::Parse, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

namespace {

constexpr double kSpacingTolerance = 1e-6;

DataError parse_error(std::size_t line, const std::string& msg) {
  return DataError(DataError::Kind::Parse, "line " + std::to_string(line) + ": " + msg);
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    std::string_view line(text.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line_no, line);
    pos = end + 1;
  }
}

double median_spacing(const std::vector<double>& t) {
  std::vector<double> d(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i) d[i - 1] = t[i] - t[i - 1];
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  if (d.size() % 2 == 1) return *mid;
  double hi = *mid;
  double lo = *std::max_element(d.begin(), mid);
  return 0.5 * (lo + hi);
}

SignalStream assemble(std::vector<double> t, const std::vector<Eigen::Vector3d>& rows,
                      std::vector<Label> labels, double rate_hz) {
  SignalStream s;
  s.time = std::move(t);
  s.accel.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) s.accel.row(static_cast<Eigen::Index>(i)) = rows[i];
  s.labels = std::move(labels);
  s.rate_hz = rate_hz;
  return s;
}

}  // namespace

std::size_t SignalStream::fog_samples() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::FoG));
}

void SignalStream::validate() const {
  auto fail = [](const std::string& m) { throw DataError(DataError::Kind::Structural, m); };
  if (!(rate_hz > 0.0)) fail("rate_hz must be positive");
  if (labels.size() != time.size()) fail("label count differs from sample count");
  if (static_cast<std::size_t>(accel.rows()) != time.size()) fail("accel row count differs from sample count");
  const double period = 1.0 / rate_hz;
  for (std::size_t i = 1; i < time.size(); ++i) {
    const double dt = time[i] - time[i - 1];
    if (!(dt > 0.0)) fail("timestamps not strictly increasing at sample " + std::to_string(i));
    if (std::abs(dt - period) > kSpacingTolerance)
      fail("irregular sample spacing at sample " + std::to_string(i));
  }
}

SignalStream make_uniform_stream(const Eigen::Matrix<double, Eigen::Dynamic, 3>& accel,
                                 std::vector<Label> labels, double rate_hz, double t0) {
  if (!(rate_hz > 0.0)) throw ConfigError("rate_hz must be positive");
  if (labels.size() != static_cast<std::size_t>(accel.rows()))
    throw DataError(DataError::Kind::Structural, "label count differs from sample count");
  SignalStream s;
  s.accel = accel;
  s.labels = std::move(labels);
  s.rate_hz = rate_hz;
  s.time.resize(s.labels.size());
  for (std::size_t i = 0; i < s.time.size(); ++i) s.time[i] = t0 + static_cast<double>(i) / rate_hz;
  return s;
}

SignalStream parse_canonical_csv(const std::string& text) {
  std::vector<double> t;
  std::vector<Eigen::Vector3d> rows;
  std::vector<Label> labels;
  bool header_seen = false;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (detail::trim(line).empty()) return;
    if (!header_seen) {
      auto cols = detail::split(line, ',');
      if (cols.size() != 5 || cols[0] != "t" || cols[1] != "ax" || cols[2] != "ay" || cols[3] != "az" ||
          cols[4] != "label")
        throw parse_error(line_no, "expected header t,ax,ay,az,label");
      header_seen = true;
      return;
    }
    auto cols = detail::split(line, ',');
    if (cols.size() != 5) throw parse_error(line_no, "expected 5 columns, got " + std::to_string(cols.size()));
    double v[4];
    for (int c = 0; c < 4; ++c) {
      auto d = detail::parse_double(cols[static_cast<std::size_t>(c)]);
      if (!d || !std::isfinite(*d)) throw parse_error(line_no, "invalid number '" + std::string(cols[static_cast<std::size_t>(c)]) + "'");
      v[c] = *d;
    }
    auto lab = detail::parse_int(cols[4]);
    if (!lab || (*lab != 0 && *lab != 1)) throw parse_error(line_no, "label must be 0 or 1");
    if (!t.empty() && !(v[0] > t.back()))
      throw DataError(DataError::Kind::Structural,
                      "line " + std::to_string(line_no) + ": timestamps not strictly increasing");
    t.push_back(v[0]);
    rows.emplace_back(v[1], v[2], v[3]);
    labels.push_back(*lab == 1 ? Label::FoG : Label::NonFoG);
  });
  if (!header_seen) throw parse_error(1, "missing header");
  if (t.size() < 2) throw DataError(DataError::Kind::EmptyInput, "need at least two samples to infer rate");
  const double rate = 1.0 / median_spacing(t);
  SignalStream s = assemble(std::move(t), rows, std::move(labels), rate);
  s.validate();
  return s;
}

SignalStream load_canonical_csv(const std::filesystem::path& path) {
  return parse_canonical_csv(detail::read_file(path.string()));
}

std::string format_canonical_csv(const SignalStream& stream) {
  std::string out = "t,ax,ay,az,label\n";
  out.reserve(stream.size() * 64);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out += detail::format_fixed_roundtrip(stream.time[i], 6);
    for (int c = 0; c < 3; ++c) {
      out += ',';
      out += detail::format_double(stream.accel(r, c));
    }
    out += stream.labels[i] == Label::FoG ? ",1\n" : ",0\n";
  }
  return out;
}

void write_canonical_csv(const SignalStream& stream, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError(DataError::Kind::Parse, "cannot write " + path.string());
  f << format_canonical_csv(stream);
}

SignalStream parse_daphnet(const std::string& text, DaphnetSensor sensor) {
  const int base = 1 + 3 * static_cast<int>(sensor);
  std::vector<Eigen::Vector3d> rows;
  std::vector<Label> labels;
  std::vector<double> all_t;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    auto cols = detail::split_ws(line);
    if (cols.empty()) return;
    if (cols.size() != 11)
      throw DataError(DataError::Kind::Format, "line " + std::to_string(line_no) + ": expected 11 columns, got " +
                                                   std::to_string(cols.size()));
    auto tm = detail::parse_double(cols[0]);
    auto ann = detail::parse_int(cols[10]);
    if (!tm || !ann || *ann < 0 || *ann > 2) throw parse_error(line_no, "invalid time or annotation");
    all_t.push_back(*tm / 1000.0);
    if (*ann == 0) return;
    Eigen::Vector3d a;
    for (int c = 0; c < 3; ++c) {
      auto d = detail::parse_double(cols[static_cast<std::size_t>(base + c)]);
      if (!d) throw parse_error(line_no, "invalid acceleration value");
      a[c] = *d / 1000.0;
    }
    rows.push_back(a);
    labels.push_back(*ann == 2 ? Label::FoG : Label::NonFoG);
  });
  if (all_t.size() < 2) throw DataError(DataError::Kind::EmptyInput, "daphnet file has fewer than two rows");
  // Daphnet stamps are whole milliseconds (15/16 ms alternating at 64 Hz), so
  // the mean spacing is the right rate estimate here.
  const double rate = static_cast<double>(all_t.size() - 1) / (all_t.back() - all_t.front());
  std::vector<double> t(rows.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i) / rate;
  SignalStream s = assemble(std::move(t), rows, std::move(labels), rate);
  s.unit = Unit::G;
  return s;
}

SignalStream load_daphnet(const std::filesystem::path& path, DaphnetSensor sensor) {
  return parse_daphnet(detail::read_file(path.string()), sensor);
}

ColumnMapping parse_column_mapping(const std::string& text) {
  ColumnMapping m;
  for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
    auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') return;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("mapping line " + std::to_string(line_no) + ": expected key=value");
    std::string key(detail::trim(line.substr(0, eq)));
    std::string val(detail::trim(line.substr(eq + 1)));
    if (key == "time_column") m.time_column = val;
    else if (key == "time_is_sample_index") m.time_is_sample_index = (val == "1" || val == "true");
    else if (key == "rate_hz") {
      auto d = detail::parse_double(val);
      if (!d || *d <= 0) throw ConfigError("rate_hz must be a positive number");
      m.rate_hz = *d;
    } else if (key == "ax_column") m.ax_column = val;
    else if (key == "ay_column") m.ay_column = val;
    else if (key == "az_column") m.az_column = val;
    else if (key == "fog_columns") {
      m.fog_columns.clear();
      for (auto c : detail::split(val, ',')) if (!c.empty()) m.fog_columns.emplace_back(c);
    } else if (key == "delimiter") m.delimiter = val == "\\t" ? '\t' : (val.empty() ? ',' : val[0]);
    else if (key == "unit") {
      if (val == "g") m.unit = Unit::G;
      else if (val == "m_per_s2") m.unit = Unit::MeterPerSecond2;
      else throw ConfigError("unit must be g or m_per_s2");
    } else throw ConfigError("unknown mapping key '" + key + "'");
  });
  return m;
}

SignalStream parse_mapped_csv(const std::string& text, const ColumnMapping& mapping) {
  std::vector<double> t;
  std::vector<Eigen::Vector3d> rows;
  std::vector<Label> labels;
  int ti = -1, xi = -1, yi = -1, zi = -1;
  std::vector<int> fog_idx;
  bool header_seen = false;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (detail::trim(line).empty()) return;
    auto cols = detail::split(line, mapping.delimiter);
    if (!header_seen) {
      auto find = [&](const std::string& name) {
        for (std::size_t i = 0; i < cols.size(); ++i)
          if (cols[i] == name) return static_cast<int>(i);
        throw DataError(DataError::Kind::Format, "column '" + name + "' not in header");
      };
      ti = find(mapping.time_column);
      xi = find(mapping.ax_column);
      yi = find(mapping.ay_column);
      zi = find(mapping.az_column);
      for (const auto& c : mapping.fog_columns) fog_idx.push_back(find(c));
      header_seen = true;
      return;
    }
    auto num = [&](int idx) {
      if (static_cast<std::size_t>(idx) >= cols.size()) throw DataError(DataError::Kind::Format, "line " + std::to_string(line_no) + ": too few columns");
      auto d = detail::parse_double(cols[static_cast<std::size_t>(idx)]);
      if (!d) throw parse_error(line_no, "invalid number");
      return *d;
    };
    double tv = num(ti);
    if (mapping.time_is_sample_index) tv /= mapping.rate_hz;
    if (!t.empty() && !(tv > t.back()))
      throw DataError(DataError::Kind::Structural, "line " + std::to_string(line_no) + ": timestamps not strictly increasing");
    t.push_back(tv);
    rows.emplace_back(num(xi), num(yi), num(zi));
    bool fog = false;
    for (int f : fog_idx) fog = fog || num(f) != 0.0;
    labels.push_back(label_from_bool(fog));
  });
  if (t.size() < 2) throw DataError(DataError::Kind::EmptyInput, "need at least two samples");
  const double rate = mapping.time_is_sample_index ? mapping.rate_hz : 1.0 / median_spacing(t);
  SignalStream s = assemble(std::move(t), rows, std::move(labels), rate);
  s.unit = mapping.unit;
  s.validate();
  return s;
}

SignalStream load_mapped_csv(const std::filesystem::path& path, const ColumnMapping& mapping) {
  return parse_mapped_csv(detail::read_file(path.string()), mapping);
}

SignalStream resample(const SignalStream& stream, double target_hz) {
  if (!(target_hz > 0.0)) throw ConfigError("target rate must be positive");
  if (stream.empty()) throw DataError(DataError::Kind::EmptyInput, "cannot resample an empty stream");
  const std::size_t n = stream.size();
  const double ratio = stream.rate_hz / target_hz;
  // Number of target samples whose source position stays within [0, n-1].
  const auto count = static_cast<std::size_t>(
      std::floor(static_cast<double>(n - 1) / ratio + 1e-9)) + 1;

  SignalStream out;
  out.rate_hz = target_hz;
  out.unit = stream.unit;
  out.subject_id = stream.subject_id;
  out.medication = stream.medication;
  out.time.resize(count);
  out.labels.resize(count);
  out.accel.resize(static_cast<Eigen::Index>(count), 3);
  const double t0 = stream.time.front();
  for (std::size_t k = 0; k < count; ++k) {
    const double pos = static_cast<double>(k) * stream.rate_hz / target_hz;
    auto i = static_cast<std::size_t>(std::floor(pos));
    if (i >= n - 1) i = n - 1;
    const double frac = pos - static_cast<double>(i);
    const auto r = static_cast<Eigen::Index>(k);
    if (i + 1 < n && frac > 0.0) {
      out.accel.row(r) = (1.0 - frac) * stream.accel.row(static_cast<Eigen::Index>(i)) +
                         frac * stream.accel.row(static_cast<Eigen::Index>(i + 1));
    } else {
      out.accel.row(r) = stream.accel.row(static_cast<Eigen::Index>(i));
    }
    const std::size_t nearest = std::min(n - 1, static_cast<std::size_t>(std::floor(pos + 0.5)));
    out.labels[k] = stream.labels[nearest];
    out.time[k] = t0 + static_cast<double>(k) / target_hz;
  }
  return out;
}

SignalStream to_g(const SignalStream& stream) {
  SignalStream out = stream;
  if (out.unit == Unit::MeterPerSecond2) {
    out.accel /= kStandardGravity;
    out.unit = Unit::G;
  }
  return out;
}

}  // namespace fogwatch
