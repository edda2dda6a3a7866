#include "fogwatch/nn/serialize.hpp"

#include "../binary_io.hpp"
#include "../text_util.hpp"

namespace fogwatch::nn {

namespace {

constexpr std::uint8_t kFormatVersion = 1;

void write_array(detail::ByteWriter& w, const std::string& name, const Mat<double>& a) {
  w.u32(static_cast<std::uint32_t>(name.size()));
  w.bytes(name);
  w.u32(2);
  w.u32(static_cast<std::uint32_t>(a.rows()));
  w.u32(static_cast<std::uint32_t>(a.cols()));
  for (Eigen::Index i = 0; i < a.size(); ++i) w.f32(static_cast<float>(a.data()[i]));
}

std::pair<std::string, Mat<double>> read_array(detail::ByteReader& r) {
  const auto name_len = r.u32();
  std::string name(r.bytes(name_len));
  const auto rank = r.u32();
  if (rank == 0 || rank > 2) throw DataError(DataError::Kind::Format, "unsupported array rank for " + name);
  const auto rows = r.u32();
  const auto cols = rank == 2 ? r.u32() : 1u;
  Mat<double> a(rows, cols);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = r.f32();
  return {std::move(name), std::move(a)};
}

}  // namespace

std::string encode_weights(const ArchSpec& arch, const ParamSet<double>& params, const AdamState<double>* adam) {
  detail::ByteWriter w;
  w.bytes("FOGM1");
  w.u8(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(arch.input_len));
  w.u32(static_cast<std::uint32_t>(arch.channels));
  w.u32(static_cast<std::uint32_t>(arch.kernel));
  w.u32(static_cast<std::uint32_t>(arch.maxpool_after));
  w.u32(static_cast<std::uint32_t>(arch.pool));
  w.u32(static_cast<std::uint32_t>(arch.final_pool));
  w.u32(static_cast<std::uint32_t>(arch.conv_filters.size()));
  for (auto f : arch.conv_filters) w.u32(static_cast<std::uint32_t>(f));
  w.u32(static_cast<std::uint32_t>(arch.dense_units.size()));
  for (auto u : arch.dense_units) w.u32(static_cast<std::uint32_t>(u));
  w.f64(arch.dropout);

  w.u32(static_cast<std::uint32_t>(params.arrays.size()));
  for (const auto& [name, a] : params.arrays) write_array(w, name, a);

  if (adam) {
    w.bytes("ADAM");
    w.u64(adam->step);
    w.u32(static_cast<std::uint32_t>(adam->m.size() + adam->v.size()));
    for (const auto& [name, a] : adam->m) write_array(w, "m/" + name, a);
    for (const auto& [name, a] : adam->v) write_array(w, "v/" + name, a);
  }
  return w.take();
}

WeightFile decode_weights(const std::string& bytes) {
  detail::ByteReader r(bytes);
  if (r.bytes(5) != "FOGM1") throw DataError(DataError::Kind::Format, "missing FOGM1 magic");
  if (r.u8() != kFormatVersion) throw DataError(DataError::Kind::Format, "unsupported weight file version");
  WeightFile wf;
  wf.arch.input_len = r.u32();
  wf.arch.channels = r.u32();
  wf.arch.kernel = r.u32();
  wf.arch.maxpool_after = r.u32();
  wf.arch.pool = r.u32();
  wf.arch.final_pool = r.u32();
  wf.arch.conv_filters.resize(r.u32());
  for (auto& f : wf.arch.conv_filters) f = r.u32();
  wf.arch.dense_units.resize(r.u32());
  for (auto& u : wf.arch.dense_units) u = r.u32();
  wf.arch.dropout = r.f64();

  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto [name, a] = read_array(r);
    wf.params.arrays.emplace(std::move(name), std::move(a));
  }
  if (r.remaining() >= 4 && r.bytes(4) == "ADAM") {
    AdamState<double> st;
    st.step = r.u64();
    const auto n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
      auto [name, a] = read_array(r);
      if (name.starts_with("m/")) st.m.emplace(name.substr(2), std::move(a));
      else if (name.starts_with("v/")) st.v.emplace(name.substr(2), std::move(a));
      else throw DataError(DataError::Kind::Format, "unexpected optimizer array " + name);
    }
    wf.adam = std::move(st);
  }
  return wf;
}

void save_weights(const std::filesystem::path& path, const ArchSpec& arch, const ParamSet<double>& params,
                  const AdamState<double>* adam) {
  detail::write_bytes(path.string(), encode_weights(arch, params, adam));
}

WeightFile load_weights(const std::filesystem::path& path) { return decode_weights(detail::read_file(path.string())); }

}  // namespace fogwatch::nn
