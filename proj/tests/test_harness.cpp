#include <cmath>
#include <set>

#include "doctest.h"
#include "fogwatch/harness.hpp"

using namespace fogwatch;
using namespace fogwatch::harness;

TEST_CASE("subjects csv") {
  const std::string text =
      "subject_id,age,years_since_dx,updrs,medication\n"
      "s1,70,5,30,on\n"
      "s2,,8,,off\n"
      "s3,65,2,25,\n";
  const auto subs = parse_subjects_csv(text);
  REQUIRE(subs.size() == 3);
  CHECK(subs[1].id == "s2");
  CHECK_FALSE(subs[1].age.has_value());
  CHECK(*subs[1].years_since_dx == 8.0);
  CHECK(subs[1].medication == MedicationState::Off);
  CHECK(subs[2].medication == MedicationState::Unknown);
  CHECK(parse_subjects_csv(format_subjects_csv(subs)).size() == 3);
  CHECK_THROWS_AS(parse_subjects_csv("subject_id,age\ns1,x\n"), DataError);
}

TEST_CASE("synthetic cohort") {
  CohortSpec spec;
  spec.subjects = 3;
  spec.duration_s = 300;
  spec.seed = 4;
  const auto c = synth_cohort(spec);
  REQUIRE(c.streams.size() == 3);
  for (const auto& s : c.streams) {
    CHECK(s.size() == 12000);
    CHECK(s.fog_samples() == static_cast<std::size_t>(std::llround(0.35 * 12000)));
    CHECK_NOTHROW(s.validate());
    // the stream is not stuck on one label
    CHECK(s.labels.front() == Label::NonFoG);
  }
  const auto again = synth_cohort(spec);
  CHECK(again.streams[1].accel == c.streams[1].accel);
  spec.seed = 5;
  CHECK(synth_cohort(spec).streams[1].accel != c.streams[1].accel);
}

TEST_CASE("LOGO split") {
  CohortSpec spec;
  spec.subjects = 10;
  spec.duration_s = 60;
  const auto subs = synth_cohort(spec).subjects;
  const auto plan = make_logo_split(subs, 11, 3);
  CHECK(plan.group_a.size() == 5);
  CHECK(plan.group_b.size() == 5);
  std::set<std::string> all(plan.group_a.begin(), plan.group_a.end());
  all.insert(plan.group_b.begin(), plan.group_b.end());
  CHECK(all.size() == 10);
  CHECK(plan.seeds.size() == 3);
  CHECK(std::set<std::uint64_t>(plan.seeds.begin(), plan.seeds.end()).size() == 3);

  const auto bal = split_balance(subs, plan);
  for (int f = 0; f < 3; ++f) CHECK(std::abs(bal.mean_a[f] - bal.mean_b[f]) <= bal.pooled_sd[f]);

  auto missing = subs;
  missing[0].age.reset();
  const auto p2 = make_logo_split(missing, 11, 1);
  CHECK(p2.imputed == std::vector<std::string>{subs[0].id});
  CHECK(make_logo_split(subs, 11, 3).group_a == plan.group_a);
}

TEST_CASE("LOGO split edge cases") {
  SubjectInfo x{"x", 70.0, 5.0, 30.0, MedicationState::On};
  SubjectInfo y = x;
  y.id = "y";
  const auto two = make_logo_split({x, y}, 1, 1);
  CHECK(two.group_a.size() == 1);
  CHECK(two.group_b.size() == 1);
  CHECK_THROWS_AS(make_logo_split({x}, 1, 1), ConfigError);

  std::vector<SubjectInfo> aged;
  for (int i = 0; i < 40; ++i) aged.push_back({"p" + std::to_string(i), 50.0 + i, std::nullopt, std::nullopt, {}});
  const auto plan = make_logo_split(aged, 3, 1);
  const auto bal = split_balance(aged, plan);
  CHECK(std::abs(bal.mean_a[0] - bal.mean_b[0]) < 0.1 * bal.pooled_sd[0]);
  CHECK(plan.imputed.size() == 40);
}

TEST_CASE("run config parsing") {
  const auto cfg = parse_run_config("# comment\npretrain_epochs = 5\ngate_alpha=0.3\n\nseed=42\n");
  CHECK(cfg.plan.pretrain_epochs == 5);
  CHECK(cfg.gate.alpha == 0.3);
  CHECK(cfg.seed == 42);

  try {
    parse_run_config("seed=1\nnot_a_key=3\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_run_config("seed=abc\n"), ConfigError);

  RunConfig c;
  c.plan.finetune_lr = 3e-4;
  c.label_fractions = {0.1, 0.5};
  c.arch.final_pool = 0;
  const auto back = parse_run_config(format_run_config(c));
  CHECK(format_run_config(back) == format_run_config(c));
  CHECK(config_hash(back) == config_hash(c));
  RunConfig moved = c;
  moved.out_dir = "elsewhere";
  CHECK(config_hash(moved) == config_hash(c));
  moved.seed = 9;
  CHECK(config_hash(moved) != config_hash(c));
}

TEST_CASE("run config validation") {
  RunConfig c;
  c.window.window_s = 2.0;  // 80 samples at 40 Hz, architecture expects 120
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.data_format = "parquet";
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("metric summary rows") {
  std::vector<FoldResult> folds(4);
  const double acc[] = {0.8, 0.9, 0.7, 1.0};
  for (std::size_t i = 0; i < 4; ++i) {
    folds[i].repeat = i / 2;
    folds[i].train_group = i % 2 ? 'B' : 'A';
    folds[i].window.accuracy = acc[i];
    folds[i].window.counts.tn = 1;
    folds[i].auc = 0.5;
  }
  const auto rows = summarize(folds);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].label == "test=A");
  CHECK(*rows[0].values[3] == doctest::Approx(0.95));
  CHECK(rows[1].label == "test=B");
  CHECK(*rows[1].values[3] == doctest::Approx(0.75));
  CHECK(rows[2].label == "Avg");
  CHECK(*rows[2].values[3] == doctest::Approx(0.85));
  CHECK(*rows[3].values[3] == doctest::Approx(0.7));
  CHECK(*rows[4].values[3] == doctest::Approx(1.0));
  CHECK(*rows[5].values[3] == doctest::Approx(std::sqrt(0.05 / 3.0)));
  CHECK_FALSE(rows[2].values[0].has_value());
}

TEST_CASE("training and test groups never share a frame") {
  CohortSpec spec;
  spec.subjects = 4;
  spec.duration_s = 120;
  CohortSource src(synth_cohort(spec));
  RunConfig cfg;
  const auto g = load_training_group(src, {"S01", "S02"}, cfg);
  const auto t = load_test_group(src, {"S03", "S04"}, cfg);
  std::set<std::uint64_t> train;
  for (auto f : frame_fingerprints(g.labeled)) train.insert(f);
  for (auto f : frame_fingerprints(g.pretrain)) train.insert(f);
  for (const auto& ws : t.streams)
    for (auto f : frame_fingerprints(ws)) CHECK(train.count(f) == 0);
  CHECK(g.fingerprint != t.fingerprint);
}
