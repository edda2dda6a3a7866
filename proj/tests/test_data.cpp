#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "fogwatch/ingest.hpp"
#include "fogwatch/windowing.hpp"

using namespace fogwatch;

namespace {

SignalStream ramp_stream(std::size_t n, double rate) {
  Eigen::Matrix<double, Eigen::Dynamic, 3> a(static_cast<Index>(n), 3);
  for (Index i = 0; i < a.rows(); ++i) a.row(i) << 0.01 * static_cast<double>(i), 1.0, -0.5 * static_cast<double>(i);
  return make_uniform_stream(a, std::vector<Label>(n, Label::NonFoG), rate);
}

}  // namespace

TEST_CASE("canonical csv round trip") {
  Rng rng(1);
  auto s = fixture::random_stream(rng, 300);
  s.subject_id = "s01";
  const auto back = parse_canonical_csv(format_canonical_csv(s));
  REQUIRE(back.size() == s.size());
  CHECK(back.labels == s.labels);
  CHECK((back.accel - s.accel).cwiseAbs().maxCoeff() < 1e-12);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(back.time[i] - s.time[i]) < 1e-9);
  CHECK(back.rate_hz == doctest::Approx(40.0));
}

TEST_CASE("canonical csv errors") {
  CHECK_THROWS_AS(parse_canonical_csv("t,ax,ay\n0,1,2\n"), DataError);
  CHECK_THROWS_AS(parse_canonical_csv("t,ax,ay,az,label\n0,1,2,3,1\n0.025,1,x,3,0\n"), DataError);
  CHECK_THROWS_AS(parse_canonical_csv("t,ax,ay,az,label\n0,1,2,3,1\n0.025,1,2,3,7\n"), DataError);
  // timestamps going backwards
  CHECK_THROWS_AS(parse_canonical_csv("t,ax,ay,az,label\n0.05,1,2,3,1\n0.025,1,2,3,0\n0.0,1,2,3,0\n"), DataError);
  CHECK_THROWS_AS(parse_canonical_csv("t,ax,ay,az,label\n"), DataError);
}

TEST_CASE("daphnet adapter drops unannotated rows and converts mg") {
  const std::string text =
      "0 1000 0 0 0 0 0 10 20 30 0\n"
      "15 1000 0 0 0 0 0 11 21 31 1\n"
      "31 1000 0 0 0 0 0 12 22 32 2\n"
      "46 1000 0 0 0 0 0 13 23 33 1\n";
  const auto s = parse_daphnet(text, DaphnetSensor::Trunk);
  REQUIRE(s.size() == 3);
  CHECK(s.labels == fixture::labels_of({0, 1, 0}));
  CHECK(s.accel(0, 0) == doctest::Approx(0.011));
  CHECK(s.accel(2, 2) == doctest::Approx(0.033));
  const auto ankle = parse_daphnet(text, DaphnetSensor::Ankle);
  CHECK(ankle.accel(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("mapped csv uses the column mapping") {
  const auto m = parse_column_mapping("rate_hz=100\nunit=m_per_s2\n");
  const std::string text =
      "Time,AccV,AccML,AccAP,StartHesitation,Turn,Walking\n"
      "0,9.80665,0,0,0,0,0\n"
      "1,9.80665,0,0,0,1,0\n"
      "2,9.80665,0,0,0,0,0\n";
  const auto s = parse_mapped_csv(text, m);
  CHECK(s.rate_hz == doctest::Approx(100.0));
  CHECK(s.labels == fixture::labels_of({0, 1, 0}));
  CHECK(s.unit == Unit::MeterPerSecond2);
  CHECK(to_g(s).accel(0, 0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(parse_column_mapping("bogus=1\n"), ConfigError);
}

TEST_CASE("resample") {
  SUBCASE("identity at the same rate") {
    const auto s = ramp_stream(200, 40.0);
    const auto r = resample(s, 40.0);
    REQUIRE(r.size() == s.size());
    CHECK((r.accel - s.accel).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("linear signals are reproduced exactly") {
    const auto s = ramp_stream(1280, 128.0);
    const auto r = resample(s, 40.0);
    CHECK(r.rate_hz == 40.0);
    CHECK(r.size() == 400);
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double t = r.time[i];
      CHECK(r.accel(static_cast<Index>(i), 0) == doctest::Approx(0.01 * t * 128.0).epsilon(1e-9));
    }
  }
  SUBCASE("labels are nearest neighbour") {
    auto s = ramp_stream(100, 100.0);
    for (std::size_t i = 50; i < 100; ++i) s.labels[i] = Label::FoG;
    const auto r = resample(s, 50.0);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(r.labels[i] == (r.time[i] >= 0.495 ? Label::FoG : Label::NonFoG));
  }
}

TEST_CASE("remove_mean is idempotent") {
  Frame f = Frame::Random(120, 3).array() + 2.0;
  const Frame once = remove_mean(f);
  const Frame twice = remove_mean(once);
  CHECK(once.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
  CHECK((once - twice).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fixed-hop segmentation of an all-NonFoG stream") {
  WindowSpec spec;
  spec.mode = SegmentMode::InferenceFixed;
  const auto ws = segment(ramp_stream(1200, 40.0), spec);
  CHECK(ws.size() == 19);
  for (std::size_t i = 1; i < ws.size(); ++i) CHECK(ws.start_index[i] - ws.start_index[i - 1] == 60);
  for (auto l : ws.labels) CHECK(l == Label::NonFoG);
  CHECK((ws.raw_frame(3).col(1).array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("DHWT matches the stepwise enumeration") {
  auto s = ramp_stream(1200, 40.0);
  for (std::size_t i = 400; i < 800; ++i) s.labels[i] = Label::FoG;
  WindowSpec spec;
  const auto ws = segment(s, spec);
  const auto ref = fixture::dhwt_oracle(s.labels, 120, 60, 30, 0.5, true);
  REQUIRE(ws.size() == ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    CHECK(ws.start_index[i] == ref[i].start);
    CHECK(ws.labels[i] == ref[i].label);
  }
  CHECK(ws.mixed_count > 0);

  spec.mode = SegmentMode::InferenceFixed;
  const auto fixed = segment(s, spec);
  CHECK(class_balance(ws).second > class_balance(fixed).second);
}

TEST_CASE("DHWT on random streams") {
  Rng rng(21);
  for (int k = 0; k < 20; ++k) {
    const auto s = fixture::random_stream(rng, 2000 + static_cast<std::size_t>(uniform01(rng) * 2000));
    const auto ws = segment(s, WindowSpec{});
    const auto ref = fixture::dhwt_oracle(s.labels, 120, 60, 30, 0.5, true);
    REQUIRE(ws.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(ws.start_index[i] == ref[i].start);
  }
}

TEST_CASE("window spec validation") {
  WindowSpec spec;
  spec.hop_fog_frac = 0.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = {};
  spec.label_threshold = 1.5;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  CHECK_THROWS_AS(segment(ramp_stream(50, 40.0), WindowSpec{}), DataError);
}

TEST_CASE("window container round trip") {
  Rng rng(3);
  const auto ws = segment(fixture::random_stream(rng, 3000), WindowSpec{});
  const auto back = decode_windows(encode_windows(ws));
  REQUIRE(back.size() == ws.size());
  CHECK(back.labels == ws.labels);
  CHECK(back.start_index == ws.start_index);
  CHECK((back.frames[5] - ws.frames[5]).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(back.rate_hz == ws.rate_hz);

  const auto bare = decode_windows(encode_windows(ws, false));
  CHECK(bare.size() == ws.size());
  CHECK(bare.start_index[7] == 7);
  CHECK_THROWS_AS(decode_windows("FOGW2"), DataError);
}

TEST_CASE("select and append") {
  Rng rng(4);
  const auto ws = segment(fixture::random_stream(rng, 3000), WindowSpec{});
  const auto sub = ws.select({3, 1});
  CHECK(sub.size() == 2);
  CHECK(sub.start_index[0] == ws.start_index[3]);
  WindowSet joined;
  joined.append(sub);
  joined.append(sub);
  CHECK(joined.size() == 4);
  WindowSet other = sub;
  other.rate_hz = 50.0;
  CHECK_THROWS(joined.append(other));
}
