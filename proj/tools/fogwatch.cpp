#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fogwatch/gate.hpp"
#include "fogwatch/harness.hpp"
#include "fogwatch/ingest.hpp"
#include "fogwatch/metrics.hpp"
#include "fogwatch/ssl.hpp"
#include "fogwatch/trace.hpp"
#include "fogwatch/windowing.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;
using namespace fogwatch;
using namespace fogwatch::harness;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
  bool quiet = false;
};

struct Context {
  RunConfig cfg;
  bool quiet = false;
  Manifest manifest;

  void log(const std::string& msg) const {
    if (!quiet) std::cerr << msg << "\n";
  }

  Logger logger() const {
    if (quiet) return {};
    return [](const std::string& m) { std::cerr << m << "\n"; };
  }

  fs::path out(const std::string& name) {
    manifest.outputs.push_back(name);
    return cfg.out_dir / name;
  }

  void finish() {
    manifest.config = cfg;
    write_text(cfg.out_dir / "manifest.json", manifest_json(manifest));
  }
};

Context make_context(const Globals& g, const std::string& command) {
  Context ctx;
  if (!g.config.empty()) ctx.cfg = load_run_config(g.config);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(ctx.cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) ctx.cfg.seed = *g.seed;
  if (!g.out.empty()) ctx.cfg.out_dir = g.out;
  ctx.cfg.validate();
  ctx.quiet = g.quiet;
  ctx.manifest.command = command;
  ctx.manifest.seeds["master"] = ctx.cfg.seed;
  fs::create_directories(ctx.cfg.out_dir);
  return ctx;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

SignalStream load_input(const fs::path& path, const std::string& format, const RunConfig& cfg) {
  if (!fs::exists(path)) throw DataError(DataError::Kind::EmptyInput, "missing input " + path.string());
  if (format == "canonical") return load_canonical_csv(path);
  if (format == "daphnet") return load_daphnet(path, cfg.daphnet_sensor);
  if (format == "mapped") {
    if (cfg.mapping_file.empty()) throw ConfigError("mapped input needs mapping_file");
    return load_mapped_csv(path, parse_column_mapping(detail::read_file(cfg.mapping_file.string())));
  }
  throw ConfigError("unknown input format '" + format + "'");
}

WindowSet load_window_files(const std::vector<std::string>& paths) {
  WindowSet all;
  for (const auto& p : paths) all.append(read_windows(p));
  if (all.empty()) throw DataError(DataError::Kind::EmptyInput, "no windows in the given files");
  return all;
}

PredictionTrace load_trace(const std::string& path) { return parse_trace_csv(detail::read_file(path)); }

void print(const Context& ctx, const std::string& text) {
  if (!ctx.quiet) std::cout << text;
}

// ---------------------------------------------------------------- commands

void cmd_synth(Context& ctx) {
  const auto cohort = synth_cohort(ctx.cfg.synth);
  ctx.manifest.seeds["synth"] = ctx.cfg.synth.seed;
  for (const auto& s : cohort.streams) write_text(ctx.out("data/" + s.subject_id + ".csv"), format_canonical_csv(s));
  write_text(ctx.out("subjects.csv"), format_subjects_csv(cohort.subjects));
  ctx.log("wrote " + std::to_string(cohort.streams.size()) + " subjects to " + (ctx.cfg.out_dir / "data").string());
}

void cmd_resample(Context& ctx, const std::string& in, std::string format) {
  if (format.empty()) format = ctx.cfg.data_format == "synth" ? "canonical" : ctx.cfg.data_format;
  auto raw = load_input(in, format, ctx.cfg);
  const auto s = prepare_stream(raw, ctx.cfg.target_hz);
  write_text(ctx.out(fs::path(in).stem().string() + ".csv"), format_canonical_csv(s));
  ctx.log(std::to_string(raw.size()) + " samples at " + std::to_string(raw.rate_hz) + " Hz -> " +
          std::to_string(s.size()) + " at " + std::to_string(s.rate_hz) + " Hz");
}

void cmd_segment(Context& ctx, const std::string& in, const std::string& mode) {
  WindowSpec spec = ctx.cfg.window;
  if (mode == "train") spec.mode = SegmentMode::TrainDHWT;
  else if (mode == "infer") spec.mode = SegmentMode::InferenceFixed;
  else throw ConfigError("--mode must be train or infer");
  const auto s = prepare_stream(load_canonical_csv(in), ctx.cfg.target_hz);
  const auto ws = segment(s, spec);
  const auto bytes = encode_windows(ws);
  ctx.manifest.fingerprints["windows"] = hex(fnv1a(bytes.data(), bytes.size()));
  write_text(ctx.out(fs::path(in).stem().string() + ".fogw"), bytes);
  const auto [non, fog] = class_balance(ws);
  ctx.log(std::to_string(ws.size()) + " windows, FoG fraction " + std::to_string(fog) + ", " +
          std::to_string(ws.mixed_count) + " mixed");
  (void)non;
}

void cmd_pretrain(Context& ctx, const std::vector<std::string>& windows) {
  const auto ws = load_window_files(windows);
  const auto seed = derive_seed(ctx.cfg.seed, "pretrain");
  auto mask = ctx.cfg.mask;
  mask.seed = derive_seed(seed, "mask", mask.seed);
  ctx.manifest.seeds["pretrain"] = seed;
  ctx.manifest.seeds["mask"] = mask.seed;
  const auto b = ssl::pretrain(ssl::UnlabeledView(ws), ctx.cfg.arch, ctx.cfg.plan, mask, seed);
  ssl::save_bundle(ctx.out("model.fogm"), b);
  ctx.manifest.outputs.push_back("model.fogm.json");
  ctx.manifest.fingerprints["encoder"] = hex(b.encoder_checksum());
  ctx.log("pretext loss " + std::to_string(b.pretext_initial_loss) + " -> " + std::to_string(b.pretext_loss.back()));
}

void cmd_finetune(Context& ctx, const std::string& model, const std::vector<std::string>& windows, bool supervised) {
  const auto ws = load_window_files(windows);
  ssl::ModelBundle b;
  if (supervised) {
    const auto seed = derive_seed(ctx.cfg.seed, "supervised");
    ctx.manifest.seeds["supervised"] = seed;
    b = ssl::train_supervised(ws, ctx.cfg.arch, ctx.cfg.plan, seed);
  } else {
    if (model.empty()) throw ConfigError("finetune needs --model unless --supervised is given");
    const auto pre = ssl::load_bundle(model);
    const auto seed = derive_seed(ctx.cfg.seed, "finetune");
    ctx.manifest.seeds["finetune"] = seed;
    b = ssl::finetune(pre, ws, ctx.cfg.plan, seed);
    if (ctx.cfg.plan.freeze_encoder && b.encoder_checksum() != pre.encoder_checksum())
      throw NumericError("encoder changed during frozen fine-tuning");
  }
  ssl::save_bundle(ctx.out("model.fogm"), b);
  ctx.manifest.outputs.push_back("model.fogm.json");
  ctx.manifest.fingerprints["encoder"] = hex(b.encoder_checksum());
  ctx.log("classifier loss " + std::to_string(b.classifier_loss.front()) + " -> " +
          std::to_string(b.classifier_loss.back()));
}

void cmd_infer(Context& ctx, const std::string& model, const std::string& windows, bool use_gate) {
  const auto b = ssl::load_bundle(model);
  if (!b.has_classifier()) throw ConfigError(model + " has no classifier head");
  const auto ws = read_windows(windows);
  const gate::FrameClassifier f = [&](const Frame& x) {
    return ssl::predict_proba(b, std::span<const Frame>(&x, 1)).front();
  };
  std::optional<gate::GateConfig> g;
  if (use_gate) g = ctx.cfg.gate;
  const auto trace = gate::run_inference(ws, f, g);
  write_text(ctx.out("trace.csv"), format_trace_csv(trace));
  const auto d = gate::duty_cycle_report(trace);
  ctx.log(std::to_string(d.n_active) + " active, " + std::to_string(d.n_rejected) + " rejected, mean active " +
          std::to_string(d.mean_active_ms) + " ms");
}

void cmd_gate_sweep(Context& ctx, const std::string& trace_path) {
  const auto t = load_trace(trace_path);
  const auto alphas = gate::alpha_grid(0.0, ctx.cfg.sweep_alpha_max, ctx.cfg.sweep_points);
  const auto rows = gate::gate_sweep(t, alphas);
  write_text(ctx.out("gate_sweep.csv"), gate::sweep_csv(rows));
  print(ctx, gate::sweep_csv(rows, false));
}

void cmd_ato(Context& ctx, const std::string& trace_path) {
  const auto t = load_trace(trace_path);
  std::vector<double> mags;
  std::vector<Label> truth;
  std::vector<Label> dec;
  for (const auto& e : t.entries) {
    if (!e.active) throw DataError(DataError::Kind::Structural, "ato needs an ungated trace");
    mags.push_back(e.magnitude);
    truth.push_back(e.truth);
    dec.push_back(e.decision);
  }
  const gate::ActiveModel model = [&](const std::vector<std::size_t>& active) {
    std::vector<Label> out;
    out.reserve(active.size());
    for (auto i : active) out.push_back(dec[i]);
    return out;
  };
  const auto r = gate::ato(mags, truth, model, ctx.cfg.ato);
  write_text(ctx.out("ato_log.csv"), gate::ato_log_csv(r));
  print(ctx, "alpha_opt," + detail::format_double(r.alpha_opt) + "\nbaseline," + detail::format_double(r.baseline) +
                 "\nevaluations," + std::to_string(r.evaluations) + "\n");
  if (r.no_degradation_found) ctx.log("performance stayed within tolerance up to alpha_final");
}

void cmd_evaluate(Context& ctx, const std::string& trace_path, std::size_t passes) {
  auto t = load_trace(trace_path);
  if (passes == 0) passes = ctx.cfg.majority_vote_passes;
  if (passes > 0) t = metrics::majority_vote(t, passes);
  const auto wm = metrics::window_metrics(t);
  std::optional<double> auc;
  try {
    auc = metrics::roc_auc(t);
  } catch (const DataError&) {
    ctx.log("AUC undefined: trace holds a single class");
  }
  const auto er = metrics::episode_report(t);
  write_text(ctx.out("report.json"), metrics::report_json(wm, auc, er));
  write_text(ctx.out("report.txt"), metrics::report_text(wm, auc, er));
  write_text(ctx.out("episodes.csv"), metrics::episodes_csv(er));
  print(ctx, metrics::report_text(wm, auc, er));
}

void cmd_logo(Context& ctx) {
  const auto src = make_source(ctx.cfg);
  const auto plan = make_logo_split(src->subjects(), ctx.cfg.seed, ctx.cfg.repeats);
  ctx.manifest.plan = plan;
  ctx.manifest.seeds["split"] = plan.split_seed;
  std::vector<FoldResult> folds;
  auto run = [&](ModelKind kind, const std::string& tag) {
    const auto rep = run_logo(ctx.cfg, *src, plan, kind, ctx.logger());
    write_text(ctx.out("metrics_" + tag + ".csv"), metric_table_csv(rep.summary));
    write_text(ctx.out("metrics_" + tag + ".txt"), metric_table_text(rep.summary));
    for (std::size_t r = 0; r < rep.per_repeat.size(); ++r)
      write_text(ctx.out("metrics_" + tag + "_repeat" + std::to_string(r) + ".csv"), metric_table_csv(rep.per_repeat[r]));
    for (const auto& f : rep.folds) {
      const std::string key = tag + ".r" + std::to_string(f.repeat) + ".train" + f.train_group;
      ctx.manifest.fingerprints[key + ".train"] = hex(f.train_fingerprint);
      ctx.manifest.fingerprints[key + ".test"] = hex(f.test_fingerprint);
    }
    folds.insert(folds.end(), rep.folds.begin(), rep.folds.end());
    print(ctx, std::string(model_name(kind)) + "\n" + metric_table_text(rep.summary));
  };
  run(ModelKind::SelfSupervised, "ssl");
  if (ctx.cfg.supervised_baseline) run(ModelKind::Supervised, "supervised");
  write_text(ctx.out("folds.csv"), folds_csv(folds));
}

void cmd_label_sweep(Context& ctx, std::vector<double> fractions) {
  if (fractions.empty()) fractions = ctx.cfg.label_fractions;
  const auto src = make_source(ctx.cfg);
  const auto plan = make_logo_split(src->subjects(), ctx.cfg.seed, 1);
  ctx.manifest.plan = plan;
  const auto points = label_ratio_sweep(ctx.cfg, *src, plan, fractions, ctx.logger());
  write_text(ctx.out("label_sweep.csv"), sweep_points_csv(points));
  print(ctx, sweep_points_csv(points));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Freezing-of-gait detection with self-supervised pretraining and gated inference"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", version_string());
  Globals g;
  app.add_option("--config", g.config, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--set", g.overrides, "override one config key (key=value), repeatable");
  app.add_flag("--quiet", g.quiet, "no progress output");

  std::string in;
  std::string format;
  std::string mode = "train";
  std::string model;
  std::string trace;
  std::vector<std::string> windows;
  bool use_gate = false;
  bool supervised = false;
  bool reshuffle = false;
  std::size_t passes = 0;
  std::vector<double> fractions;

  auto* synth = app.add_subcommand("synth", "write a synthetic cohort as canonical CSVs");
  auto* rs = app.add_subcommand("resample", "convert a recording to a canonical CSV in g at the working rate");
  rs->add_option("--in", in, "input recording")->required();
  rs->add_option("--format", format, "canonical, daphnet or mapped (default: data_format)");
  auto* seg = app.add_subcommand("segment", "cut a canonical CSV into windows");
  seg->add_option("--in", in, "canonical CSV")->required();
  seg->add_option("--mode", mode, "train (dynamic hop) or infer (fixed hop)");
  auto* pre = app.add_subcommand("pretrain", "masked-reconstruction pretraining");
  pre->add_option("--windows", windows, "window files")->required();
  auto* ft = app.add_subcommand("finetune", "train the classifier head on labeled windows");
  ft->add_option("--model", model, "pretrained model");
  ft->add_option("--windows", windows, "window files")->required();
  ft->add_flag("--supervised", supervised, "train the supervised baseline instead");
  auto* inf = app.add_subcommand("infer", "classify windows, writing trace.csv");
  inf->add_option("--model", model, "fine-tuned model")->required();
  inf->add_option("--windows", in, "window file")->required();
  inf->add_flag("--gate", use_gate, "reject windows below gate_alpha before the model runs");
  auto* gs = app.add_subcommand("gate-sweep", "metrics and rejection ratio over an alpha grid");
  gs->add_option("--trace", trace, "ungated trace.csv")->required();
  auto* at = app.add_subcommand("ato", "adaptive threshold search");
  at->add_option("--trace", trace, "ungated trace.csv")->required();
  auto* ev = app.add_subcommand("evaluate", "window and episode reports");
  ev->add_option("--trace", trace, "trace.csv")->required();
  auto* mv = ev->add_option("--majority-vote", passes, "smoothing passes (flag alone: 1)")->expected(0, 1);
  auto* logo = app.add_subcommand("logo", "two-group leave-one-group-out evaluation");
  logo->add_flag("--reshuffle-groups", reshuffle, "draw new groups for every repeat");
  auto* ls = app.add_subcommand("label-sweep", "self-supervised vs supervised over label fractions");
  ls->add_option("--fractions", fractions, "label fractions in (0, 1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    auto* sub = app.get_subcommands().front();
    auto ctx = make_context(g, sub->get_name());
    if (sub == synth) cmd_synth(ctx);
    else if (sub == rs) cmd_resample(ctx, in, format);
    else if (sub == seg) cmd_segment(ctx, in, mode);
    else if (sub == pre) cmd_pretrain(ctx, windows);
    else if (sub == ft) cmd_finetune(ctx, model, windows, supervised);
    else if (sub == inf) cmd_infer(ctx, model, in, use_gate);
    else if (sub == gs) cmd_gate_sweep(ctx, trace);
    else if (sub == at) cmd_ato(ctx, trace);
    else if (sub == ev) cmd_evaluate(ctx, trace, mv->count() > 0 && passes == 0 ? 1 : passes);
    else if (sub == logo) {
      if (reshuffle) ctx.cfg.reshuffle_groups = true;
      cmd_logo(ctx);
    } else if (sub == ls) cmd_label_sweep(ctx, fractions);
    ctx.finish();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
