#include "fogwatch/trace.hpp"

#include <cmath>

#include "text_util.hpp"

namespace fogwatch {

namespace {

constexpr const char* kHeader = "index,start_index,truth,fog_fraction,magnitude,probability,decision,active,stream_start";

DataError parse_error(std::size_t line, const std::string& what) {
  return DataError(DataError::Kind::Parse, "trace line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string format_trace_csv(const PredictionTrace& trace, bool include_timing) {
  std::string out = kHeader;
  out += include_timing ? ",gate_ms,model_ms\n" : "\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& e = trace.entries[i];
    out += std::to_string(i) + "," + std::to_string(e.start_index) + "," + std::to_string(to_int(e.truth)) + "," +
           detail::format_double(e.fog_fraction) + "," +
           (std::isnan(e.magnitude) ? std::string() : detail::format_double(e.magnitude)) + "," +
           detail::format_double(e.probability) + "," + std::to_string(to_int(e.decision)) + "," +
           (e.active ? "1" : "0") + "," + (trace.is_break(i) ? "1" : "0");
    if (include_timing) out += "," + detail::format_double(e.gate_ms) + "," + detail::format_double(e.model_ms);
    out += "\n";
  }
  return out;
}

PredictionTrace parse_trace_csv(const std::string& text) {
  PredictionTrace t;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const auto line = detail::trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto cells = detail::split(line, ',');
    if (columns == 0) {
      if (line.substr(0, std::string_view(kHeader).size()) != kHeader)
        throw parse_error(line_no, "expected header starting with " + std::string(kHeader));
      columns = cells.size();
      if (columns != 9 && columns != 11) throw parse_error(line_no, "unexpected column count");
      continue;
    }
    if (cells.size() != columns) throw parse_error(line_no, "expected " + std::to_string(columns) + " cells");
    auto num = [&](std::size_t c) {
      const auto v = detail::parse_double(cells[c]);
      if (!v) throw parse_error(line_no, "bad number '" + std::string(cells[c]) + "'");
      return *v;
    };
    auto flag = [&](std::size_t c) {
      if (cells[c] == "0") return false;
      if (cells[c] == "1") return true;
      throw parse_error(line_no, "expected 0 or 1, got '" + std::string(cells[c]) + "'");
    };
    TraceEntry e;
    const double start = num(1);
    if (start < 0 || start != std::floor(start)) throw parse_error(line_no, "bad start index");
    e.start_index = static_cast<std::size_t>(start);
    e.truth = label_from_bool(flag(2));
    e.fog_fraction = num(3);
    if (!cells[4].empty()) e.magnitude = num(4);
    e.probability = num(5);
    e.decision = label_from_bool(flag(6));
    e.active = flag(7);
    if (flag(8) && !t.entries.empty()) t.segment_breaks.push_back(t.entries.size());
    if (columns == 11) {
      e.gate_ms = num(9);
      e.model_ms = num(10);
    }
    t.entries.push_back(e);
  }
  if (columns == 0) throw DataError(DataError::Kind::EmptyInput, "trace file is empty");
  return t;
}

}  // namespace fogwatch
