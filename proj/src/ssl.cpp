#include "fogwatch/ssl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "fogwatch/gate.hpp"
#include "fogwatch/nn/network.hpp"
#include "fogwatch/nn/serialize.hpp"
#include "json.hpp"
#include "text_util.hpp"

namespace fogwatch::ssl {

using nlohmann::json;

namespace {

constexpr std::size_t kEvalChunk = 256;

std::size_t below(Rng& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

// Fisher-Yates driven by uniform01 so the order does not depend on the
// standard library's distribution implementations.
std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[below(rng, i)]);
  return p;
}

template <typename S>
Mat<S> flatten_targets(std::span<const Frame> frames, std::span<const std::size_t> idx) {
  const Index len = frames[idx.front()].rows();
  const Index c = frames[idx.front()].cols();
  Mat<S> out(static_cast<Index>(idx.size()), len * c);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const Frame& f = frames[idx[r]];
    for (Index t = 0; t < len; ++t)
      for (Index k = 0; k < c; ++k) out(static_cast<Index>(r), t * c + k) = static_cast<S>(f(t, k));
  }
  return out;
}

// Masked batch input, flattened targets and the loss mask for one batch.
template <typename S>
struct PretextBatch {
  Mat<S> input;
  Mat<S> target;
  nn::MaskMatrix mask;
};

template <typename S>
PretextBatch<S> pretext_batch(const UnlabeledView& ws, std::span<const std::size_t> idx, const MaskSpec& mask,
                              std::size_t epoch) {
  const auto frames = ws.frames();
  const Index len = frames[idx.front()].rows();
  const Index c = frames[idx.front()].cols();
  PretextBatch<S> b;
  b.input = nn::stack_frames<S>(frames, idx);
  b.target = flatten_targets<S>(frames, idx);
  b.mask = nn::MaskMatrix::Constant(static_cast<Index>(idx.size()), len * c, false);
  const auto fill = static_cast<S>(mask.fill_value);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    Rng rng(mask_seed(mask, epoch, idx[r]));
    for (auto t : draw_mask(static_cast<std::size_t>(len), mask, rng)) {
      const Index ti = static_cast<Index>(t);
      b.input.row(static_cast<Index>(r) * len + ti).setConstant(fill);
      b.mask.row(static_cast<Index>(r)).segment(ti * c, c).setConstant(true);
    }
  }
  return b;
}

template <typename F>
decltype(auto) with_precision(Precision p, F&& f) {
  if (p == Precision::Float32) return f(float{});
  return f(double{});
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

template <typename S>
double pretext_eval(const nn::ParamSet<S>& params, const nn::ArchSpec& arch, const UnlabeledView& ws,
                    const MaskSpec& mask) {
  const auto all = iota_indices(ws.size());
  double sq = 0.0;
  double count = 0.0;
  for (std::size_t s = 0; s < all.size(); s += kEvalChunk) {
    std::span<const std::size_t> idx(all.data() + s, std::min(kEvalChunk, all.size() - s));
    auto b = pretext_batch<S>(ws, idx, mask, 0);
    Mat<S> pred = nn::forward(params, arch, b.input, nn::Head::Pretext, nn::Mode::Eval, nullptr,
                              static_cast<nn::ForwardCache<S>*>(nullptr));
    auto l = nn::masked_mse(pred, b.target, b.mask);
    const auto n = static_cast<double>(b.mask.count());
    sq += l.value * n;
    count += n;
  }
  return sq / count;
}

template <typename S>
void pretrain_impl(const UnlabeledView& ws, const nn::ArchSpec& arch, const TrainPlan& plan, const MaskSpec& mask,
                   std::uint64_t seed, ModelBundle& out) {
  nn::ParamSet<S> params;
  {
    Rng rng(derive_seed(seed, "init.encoder"));
    nn::init_encoder(params, arch, rng);
  }
  {
    Rng rng(derive_seed(seed, "init.pretext"));
    nn::init_pretext(params, arch, rng);
  }
  out.pretext_initial_loss = pretext_eval(params, arch, ws, mask);
  if (!std::isfinite(out.pretext_initial_loss)) throw NumericError("pretext loss is not finite before training");

  const auto opt = plan.pretrain_optimizer();
  nn::AdamState<S> adam;
  nn::ForwardCache<S> cache;
  for (std::size_t epoch = 1; epoch <= plan.pretrain_epochs; ++epoch) {
    Rng shuffle(derive_seed(seed, "pretrain.shuffle", epoch));
    const auto order = permutation(ws.size(), shuffle);
    double sq = 0.0;
    double count = 0.0;
    for (std::size_t s = 0; s < order.size(); s += plan.batch_size) {
      std::span<const std::size_t> idx(order.data() + s, std::min(plan.batch_size, order.size() - s));
      auto b = pretext_batch<S>(ws, idx, mask, epoch);
      Mat<S> pred = nn::forward(params, arch, b.input, nn::Head::Pretext, nn::Mode::Train, nullptr, &cache);
      auto l = nn::masked_mse(pred, b.target, b.mask);
      if (!std::isfinite(l.value))
        throw NumericError("pretraining diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
      const auto n = static_cast<double>(b.mask.count());
      sq += l.value * n;
      count += n;
      auto grads = nn::backward(params, arch, cache, l.grad, true);
      nn::adam_step(params, adam, grads, opt);
    }
    out.pretext_loss.push_back(sq / count);
  }
  out.params = params.template cast<double>();
  out.params.version = 0;
}

// Head-only training on fixed embeddings; the encoder never runs here.
template <typename S>
nn::ParamSet<double> train_head(const nn::ArchSpec& arch, const Mat<S>& embeddings, std::span<const Label> labels,
                                const nn::OptimizerSpec& opt, std::size_t epochs, std::uint64_t seed,
                                std::vector<double>& loss_log) {
  nn::ParamSet<S> head;
  {
    Rng rng(derive_seed(seed, "init.classifier"));
    nn::init_classifier(head, arch, rng);
  }
  nn::AdamState<S> adam;
  nn::HeadCache<S> cache;
  const auto n = static_cast<std::size_t>(embeddings.rows());
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    Rng shuffle(derive_seed(seed, "finetune.shuffle", epoch));
    Rng drop(derive_seed(seed, "finetune.dropout", epoch));
    const auto order = permutation(n, shuffle);
    double total = 0.0;
    for (std::size_t s = 0; s < n; s += opt.batch_size) {
      const std::size_t bsz = std::min(opt.batch_size, n - s);
      Mat<S> emb(static_cast<Index>(bsz), embeddings.cols());
      std::vector<Label> y(bsz);
      for (std::size_t r = 0; r < bsz; ++r) {
        emb.row(static_cast<Index>(r)) = embeddings.row(static_cast<Index>(order[s + r]));
        y[r] = labels[order[s + r]];
      }
      Mat<S> logits = nn::classify(head, arch, emb, nn::Mode::Train, &drop, &cache);
      auto l = nn::bce_with_logits<S>(logits, y);
      if (!std::isfinite(l.value))
        throw NumericError("fine-tuning diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
      total += l.value * static_cast<double>(bsz);
      auto grads = head.zeros_like();
      nn::backward_head(head, cache, l.grad, grads);
      nn::adam_step(head, adam, grads, opt);
    }
    loss_log.push_back(total / static_cast<double>(n));
  }
  return head.template cast<double>();
}

template <typename S>
void train_end_to_end(nn::ParamSet<S>& params, const nn::ArchSpec& arch, const WindowSet& ws,
                      std::span<const std::size_t> subset, const nn::OptimizerSpec& opt, std::size_t epochs,
                      std::uint64_t seed, const char* tag, std::vector<double>& loss_log) {
  nn::AdamState<S> adam;
  nn::ForwardCache<S> cache;
  const std::string stage(tag);
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    Rng shuffle(derive_seed(seed, stage + ".shuffle", epoch));
    Rng drop(derive_seed(seed, stage + ".dropout", epoch));
    const auto perm = permutation(subset.size(), shuffle);
    std::vector<std::size_t> order(subset.size());
    for (std::size_t i = 0; i < perm.size(); ++i) order[i] = subset[perm[i]];
    double total = 0.0;
    for (std::size_t s = 0; s < order.size(); s += opt.batch_size) {
      std::span<const std::size_t> idx(order.data() + s, std::min(opt.batch_size, order.size() - s));
      std::vector<Label> y(idx.size());
      for (std::size_t r = 0; r < idx.size(); ++r) y[r] = ws.labels[idx[r]];
      Mat<S> x = nn::stack_frames<S>(ws.frames, idx);
      Mat<S> logits = nn::forward(params, arch, x, nn::Head::Classifier, nn::Mode::Train, &drop, &cache);
      auto l = nn::bce_with_logits<S>(logits, y);
      if (!std::isfinite(l.value))
        throw NumericError(stage + " training diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
      total += l.value * static_cast<double>(idx.size());
      auto grads = nn::backward(params, arch, cache, l.grad, true);
      nn::adam_step(params, adam, grads, opt, [](const std::string& name) {
        return nn::group_of(name) != nn::ParamGroup::Pretext;
      });
    }
    loss_log.push_back(total / static_cast<double>(order.size()));
  }
}

template <typename S>
Mat<S> embed(const nn::ParamSet<S>& params, const nn::ArchSpec& arch, const WindowSet& ws,
             std::span<const std::size_t> subset) {
  Mat<S> out(static_cast<Index>(subset.size()), static_cast<Index>(arch.embedding_dim()));
  for (std::size_t s = 0; s < subset.size(); s += kEvalChunk) {
    std::span<const std::size_t> idx(subset.data() + s, std::min(kEvalChunk, subset.size() - s));
    Mat<S> x = nn::stack_frames<S>(ws.frames, idx);
    out.middleRows(static_cast<Index>(s), static_cast<Index>(idx.size())) =
        nn::encode(params, arch, x, static_cast<nn::EncoderCache<S>*>(nullptr));
  }
  return out;
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const Label> labels, std::span<const std::size_t> idx) {
  std::size_t fog = 0;
  for (auto i : idx) fog += labels[i] == Label::FoG ? 1 : 0;
  return {fog, idx.size() - fog};
}

std::vector<std::size_t> labeled_subset(const WindowSet& ws, const TrainPlan& plan, std::uint64_t seed) {
  if (ws.empty()) throw DataError(DataError::Kind::EmptyInput, "labelled window set is empty");
  auto subset = stratified_subsample(ws.labels, plan.label_fraction, derive_seed(seed, "subsample"));
  const auto [fog, nonfog] = class_counts(ws.labels, subset);
  if (fog == 0 || nonfog == 0)
    throw ConfigError("training set has a single class after subsampling (" + std::to_string(fog) + " FoG, " +
                      std::to_string(nonfog) + " non-FoG windows)");
  return subset;
}

std::uint64_t subset_fingerprint(const WindowSet& ws, std::span<const std::size_t> subset) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto i : subset) {
    const Frame& f = ws.frames[i];
    h = fnv1a(f.data(), static_cast<std::size_t>(f.size()) * sizeof(double), h);
    const auto lab = static_cast<std::uint8_t>(to_int(ws.labels[i]));
    h = fnv1a(&lab, 1, h);
  }
  return h;
}

const char* precision_name(Precision p) { return p == Precision::Float32 ? "float32" : "float64"; }
const char* decay_name(nn::DecayMode m) { return m == nn::DecayMode::TimeBased ? "time" : "weight"; }

json plan_json(const TrainPlan& p) {
  return json{{"pretrain_epochs", p.pretrain_epochs},
              {"pretrain_lr", p.pretrain_lr},
              {"pretrain_decay", p.pretrain_decay},
              {"finetune_epochs", p.finetune_epochs},
              {"finetune_lr", p.finetune_lr},
              {"finetune_decay", p.finetune_decay},
              {"supervised_epochs", p.supervised_epochs},
              {"supervised_lr", p.supervised_lr},
              {"supervised_decay", p.supervised_decay},
              {"batch_size", p.batch_size},
              {"label_fraction", p.label_fraction},
              {"freeze_encoder", p.freeze_encoder},
              {"decay_mode", decay_name(p.decay_mode)},
              {"precision", precision_name(p.precision)}};
}

TrainPlan plan_from_json(const json& j) {
  TrainPlan p;
  p.pretrain_epochs = j.value("pretrain_epochs", p.pretrain_epochs);
  p.pretrain_lr = j.value("pretrain_lr", p.pretrain_lr);
  p.pretrain_decay = j.value("pretrain_decay", p.pretrain_decay);
  p.finetune_epochs = j.value("finetune_epochs", p.finetune_epochs);
  p.finetune_lr = j.value("finetune_lr", p.finetune_lr);
  p.finetune_decay = j.value("finetune_decay", p.finetune_decay);
  p.supervised_epochs = j.value("supervised_epochs", p.supervised_epochs);
  p.supervised_lr = j.value("supervised_lr", p.supervised_lr);
  p.supervised_decay = j.value("supervised_decay", p.supervised_decay);
  p.batch_size = j.value("batch_size", p.batch_size);
  p.label_fraction = j.value("label_fraction", p.label_fraction);
  p.freeze_encoder = j.value("freeze_encoder", p.freeze_encoder);
  p.decay_mode = j.value("decay_mode", std::string("time")) == "weight" ? nn::DecayMode::Weight
                                                                       : nn::DecayMode::TimeBased;
  p.precision = j.value("precision", std::string("float32")) == "float64" ? Precision::Float64 : Precision::Float32;
  return p;
}

json mask_json(const MaskSpec& m) {
  return json{{"segment_len", m.segment_len},
              {"num_segments", m.num_segments},
              {"fill_value", m.fill_value},
              {"seed", m.seed}};
}

MaskSpec mask_from_json(const json& j) {
  MaskSpec m;
  m.segment_len = j.value("segment_len", m.segment_len);
  m.num_segments = j.value("num_segments", m.num_segments);
  m.fill_value = j.value("fill_value", m.fill_value);
  m.seed = j.value("seed", m.seed);
  return m;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

std::uint64_t parse_hex64(const std::string& s) { return std::stoull(s, nullptr, 16); }

}  // namespace

void MaskSpec::validate(std::size_t window_len) const {
  if (segment_len == 0) throw ConfigError("mask segment length must be positive");
  if (num_segments == 0) throw ConfigError("mask needs at least one segment");
  if (num_segments * segment_len >= window_len)
    throw ConfigError("mask of " + std::to_string(num_segments) + " x " + std::to_string(segment_len) +
                      " steps does not fit a window of " + std::to_string(window_len) + " steps");
}

void TrainPlan::validate() const {
  if (pretrain_epochs == 0 || finetune_epochs == 0 || supervised_epochs == 0)
    throw ConfigError("epoch counts must be positive");
  if (!(pretrain_lr > 0) || !(finetune_lr > 0) || !(supervised_lr > 0))
    throw ConfigError("learning rates must be positive");
  if (!(pretrain_decay >= 0) || !(finetune_decay >= 0) || !(supervised_decay >= 0))
    throw ConfigError("decay must be non-negative");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(label_fraction > 0.0 && label_fraction <= 1.0)) throw ConfigError("label_fraction must be in (0, 1]");
}

namespace {
nn::OptimizerSpec make_opt(double lr, double decay, const TrainPlan& p) {
  nn::OptimizerSpec o;
  o.learning_rate = lr;
  o.decay = decay;
  o.batch_size = p.batch_size;
  o.decay_mode = p.decay_mode;
  o.validate();
  return o;
}
}  // namespace

nn::OptimizerSpec TrainPlan::pretrain_optimizer() const { return make_opt(pretrain_lr, pretrain_decay, *this); }
nn::OptimizerSpec TrainPlan::finetune_optimizer() const { return make_opt(finetune_lr, finetune_decay, *this); }
nn::OptimizerSpec TrainPlan::supervised_optimizer() const {
  return make_opt(supervised_lr, supervised_decay, *this);
}

std::uint64_t UnlabeledView::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : frames_) h = fnv1a(f.data(), static_cast<std::size_t>(f.size()) * sizeof(double), h);
  return h;
}

std::uint64_t mask_seed(const MaskSpec& mask, std::size_t epoch, std::size_t index) {
  return derive_seed(mask.seed, "mask", epoch, index);
}

// Segments are placed by stars and bars: choose k distinct values from
// [0, free + k) and shift the j-th by j * (m - 1), which yields every
// non-overlapping placement with equal probability.
std::vector<std::size_t> draw_mask(std::size_t window_len, const MaskSpec& mask, Rng& rng) {
  mask.validate(window_len);
  const std::size_t k = mask.num_segments;
  const std::size_t m = mask.segment_len;
  const std::size_t slots = window_len - k * m + k;
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  // Floyd's sampling of k distinct values from [0, slots).
  for (std::size_t j = slots - k; j < slots; ++j) {
    const std::size_t t = below(rng, j + 1);
    if (std::find(chosen.begin(), chosen.end(), t) == chosen.end()) chosen.push_back(t);
    else chosen.push_back(j);
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<std::size_t> steps;
  steps.reserve(k * m);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t start = chosen[j] + j * (m - 1);
    for (std::size_t t = 0; t < m; ++t) steps.push_back(start + t);
  }
  return steps;
}

MaskedFrames apply_mask(const UnlabeledView& ws, const MaskSpec& mask) {
  MaskedFrames out;
  out.frames.reserve(ws.size());
  out.steps.reserve(ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) {
    Frame f = ws.frame(i);
    Rng rng(mask_seed(mask, 0, i));
    auto steps = draw_mask(static_cast<std::size_t>(f.rows()), mask, rng);
    for (auto t : steps) f.row(static_cast<Index>(t)).setConstant(mask.fill_value);
    out.frames.push_back(std::move(f));
    out.steps.push_back(std::move(steps));
  }
  return out;
}

nn::MaskMatrix mask_matrix(const std::vector<std::vector<std::size_t>>& steps, std::size_t window_len,
                           std::size_t channels) {
  const auto c = static_cast<Index>(channels);
  nn::MaskMatrix m = nn::MaskMatrix::Constant(static_cast<Index>(steps.size()), static_cast<Index>(window_len) * c,
                                              false);
  for (std::size_t r = 0; r < steps.size(); ++r)
    for (auto t : steps[r]) m.row(static_cast<Index>(r)).segment(static_cast<Index>(t) * c, c).setConstant(true);
  return m;
}

ModelBundle pretrain(const UnlabeledView& ws, const nn::ArchSpec& arch, const TrainPlan& plan, const MaskSpec& mask,
                     std::uint64_t seed) {
  arch.validate();
  plan.validate();
  if (ws.empty()) throw DataError(DataError::Kind::EmptyInput, "pretraining corpus is empty");
  if (static_cast<std::size_t>(ws.frame(0).rows()) != arch.input_len ||
      static_cast<std::size_t>(ws.frame(0).cols()) != arch.channels)
    throw DataError(DataError::Kind::Structural, "window shape does not match the architecture input");
  mask.validate(arch.input_len);

  ModelBundle out;
  out.arch = arch;
  with_precision(plan.precision, [&](auto tag) {
    using S = decltype(tag);
    pretrain_impl<S>(ws, arch, plan, mask, seed, out);
  });
  RunMetadata meta;
  meta.stage = "pretrain";
  meta.seed = seed;
  meta.data_fingerprint = ws.fingerprint();
  meta.n_windows = ws.size();
  meta.plan = plan;
  meta.mask = mask;
  out.history.push_back(meta);
  return out;
}

std::vector<std::size_t> stratified_subsample(std::span<const Label> labels, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("label fraction must be in (0, 1]");
  if (fraction == 1.0) return iota_indices(labels.size());
  std::vector<std::size_t> fog;
  std::vector<std::size_t> nonfog;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == Label::FoG ? fog : nonfog).push_back(i);
  const auto total = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(labels.size())));
  const auto n_fog = std::min(fog.size(), static_cast<std::size_t>(std::llround(fraction * static_cast<double>(fog.size())))) ;
  const auto n_non = std::min(nonfog.size(), total - std::min(total, n_fog));
  Rng rng(seed);
  const auto pf = permutation(fog.size(), rng);
  const auto pn = permutation(nonfog.size(), rng);
  std::vector<std::size_t> out;
  out.reserve(n_fog + n_non);
  for (std::size_t i = 0; i < n_fog; ++i) out.push_back(fog[pf[i]]);
  for (std::size_t i = 0; i < n_non; ++i) out.push_back(nonfog[pn[i]]);
  std::sort(out.begin(), out.end());
  return out;
}

ModelBundle finetune(const ModelBundle& bundle, const WindowSet& ws, const TrainPlan& plan, std::uint64_t seed) {
  plan.validate();
  if (!bundle.has_encoder()) throw DataError(DataError::Kind::Structural, "bundle has no encoder to fine-tune");
  const auto subset = labeled_subset(ws, plan, seed);
  ModelBundle out = bundle;
  out.classifier_loss.clear();
  const auto opt = plan.finetune_optimizer();

  if (plan.freeze_encoder) {
    const auto head = with_precision(plan.precision, [&](auto tag) {
      using S = decltype(tag);
      const auto enc = bundle.params.template cast<S>();
      Mat<S> emb = embed<S>(enc, bundle.arch, ws, subset);
      std::vector<Label> y(subset.size());
      for (std::size_t i = 0; i < subset.size(); ++i) y[i] = ws.labels[subset[i]];
      return train_head<S>(bundle.arch, emb, y, opt, plan.finetune_epochs, seed, out.classifier_loss);
    });
    for (const auto& [name, a] : head.arrays) out.params.arrays[name] = a;
  } else {
    out.params = with_precision(plan.precision, [&](auto tag) {
      using S = decltype(tag);
      auto params = bundle.params.template cast<S>();
      if (!params.has_group(nn::ParamGroup::Classifier)) {
        Rng rng(derive_seed(seed, "init.classifier"));
        nn::init_classifier(params, bundle.arch, rng);
      }
      train_end_to_end<S>(params, bundle.arch, ws, subset, opt, plan.finetune_epochs, seed, "finetune",
                          out.classifier_loss);
      return params.template cast<double>();
    });
  }
  out.params.version = 0;

  RunMetadata meta;
  meta.stage = "finetune";
  meta.seed = seed;
  meta.data_fingerprint = subset_fingerprint(ws, subset);
  meta.n_windows = subset.size();
  meta.n_fog = class_counts(ws.labels, subset).first;
  meta.plan = plan;
  out.history.push_back(meta);
  return out;
}

ModelBundle train_supervised(const WindowSet& ws, const nn::ArchSpec& arch, const TrainPlan& plan,
                             std::uint64_t seed) {
  arch.validate();
  plan.validate();
  const auto subset = labeled_subset(ws, plan, seed);
  ModelBundle out;
  out.arch = arch;
  const auto opt = plan.supervised_optimizer();
  out.params = with_precision(plan.precision, [&](auto tag) {
    using S = decltype(tag);
    nn::ParamSet<S> params;
    {
      Rng rng(derive_seed(seed, "init.encoder"));
      nn::init_encoder(params, arch, rng);
    }
    {
      Rng rng(derive_seed(seed, "init.classifier"));
      nn::init_classifier(params, arch, rng);
    }
    train_end_to_end<S>(params, arch, ws, subset, opt, plan.supervised_epochs, seed, "supervised",
                        out.classifier_loss);
    return params.template cast<double>();
  });
  out.params.version = 0;

  RunMetadata meta;
  meta.stage = "supervised";
  meta.seed = seed;
  meta.data_fingerprint = subset_fingerprint(ws, subset);
  meta.n_windows = subset.size();
  meta.n_fog = class_counts(ws.labels, subset).first;
  meta.plan = plan;
  out.history.push_back(meta);
  return out;
}

std::vector<double> predict_proba(const ModelBundle& bundle, std::span<const Frame> frames) {
  if (!bundle.has_classifier()) throw DataError(DataError::Kind::Structural, "bundle has no classifier head");
  std::vector<double> out;
  out.reserve(frames.size());
  const auto all = iota_indices(frames.size());
  for (std::size_t s = 0; s < all.size(); s += kEvalChunk) {
    std::span<const std::size_t> idx(all.data() + s, std::min(kEvalChunk, all.size() - s));
    Mat<double> x = nn::stack_frames<double>(frames, idx);
    Mat<double> logits = nn::forward(bundle.params, bundle.arch, x, nn::Head::Classifier, nn::Mode::Eval, nullptr,
                                     static_cast<nn::ForwardCache<double>*>(nullptr));
    for (Index r = 0; r < logits.rows(); ++r) out.push_back(nn::sigmoid(logits(r, 0)));
  }
  return out;
}

PredictionTrace empty_trace(const WindowSet& ws) {
  PredictionTrace trace;
  trace.subject_id = ws.subject_id;
  if (ws.rate_hz > 0) {
    trace.window_s = static_cast<double>(ws.spec.window_samples(ws.rate_hz)) / ws.rate_hz;
    trace.hop_s = static_cast<double>(ws.spec.hop_nonfog_samples(ws.rate_hz)) / ws.rate_hz;
  }
  trace.entries.resize(ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) {
    auto& e = trace.entries[i];
    e.start_index = i < ws.start_index.size() ? ws.start_index[i] : i;
    e.truth = ws.labels[i];
    e.fog_fraction = i < ws.fog_fraction.size() ? ws.fog_fraction[i] : (ws.labels[i] == Label::FoG ? 1.0 : 0.0);
    e.magnitude = gate::magnitude(ws.raw_frame(i));
  }
  return trace;
}

PredictionTrace predict(const ModelBundle& bundle, const WindowSet& ws) {
  if (!bundle.has_classifier()) throw DataError(DataError::Kind::Structural, "bundle has no classifier head");
  PredictionTrace trace = empty_trace(ws);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const double p = predict_proba(bundle, std::span<const Frame>(&ws.frames[i], 1)).front();
    const auto t1 = std::chrono::steady_clock::now();
    auto& e = trace.entries[i];
    e.probability = p;
    e.decision = p >= 0.5 ? Label::FoG : Label::NonFoG;
    e.active = true;
    e.model_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  return trace;
}

std::string bundle_metadata_json(const ModelBundle& b) {
  json hist = json::array();
  for (const auto& m : b.history) {
    hist.push_back(json{{"stage", m.stage},
                        {"seed", m.seed},
                        {"data_fingerprint", hex64(m.data_fingerprint)},
                        {"n_windows", m.n_windows},
                        {"n_fog", m.n_fog},
                        {"plan", plan_json(m.plan)},
                        {"mask", mask_json(m.mask)}});
  }
  json arch{{"input_len", b.arch.input_len},   {"channels", b.arch.channels},
            {"conv_filters", b.arch.conv_filters}, {"kernel", b.arch.kernel},
            {"maxpool_after", b.arch.maxpool_after}, {"pool", b.arch.pool},
            {"dense_units", b.arch.dense_units},   {"dropout", b.arch.dropout}};
  json j{{"format", "fogwatch-bundle"},
         {"arch", arch},
         {"encoder_checksum", hex64(b.encoder_checksum())},
         {"pretext_initial_loss", b.pretext_initial_loss},
         {"pretext_loss", b.pretext_loss},
         {"classifier_loss", b.classifier_loss},
         {"history", hist}};
  return j.dump(2) + "\n";
}

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
  nn::save_weights(path, bundle.arch, bundle.params);
  std::ofstream os(path.string() + ".json", std::ios::binary);
  if (!os) throw DataError(DataError::Kind::Parse, "cannot write " + path.string() + ".json");
  os << bundle_metadata_json(bundle);
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  auto wf = nn::load_weights(path);
  ModelBundle b;
  b.arch = wf.arch;
  b.params = std::move(wf.params);
  const std::filesystem::path side = path.string() + ".json";
  if (std::filesystem::exists(side)) {
    json j;
    try {
      j = json::parse(detail::read_file(side.string()));
    } catch (const json::exception& e) {
      throw DataError(DataError::Kind::Parse, side.string() + ": " + e.what());
    }
    b.pretext_initial_loss = j.value("pretext_initial_loss", 0.0);
    b.pretext_loss = j.value("pretext_loss", std::vector<double>{});
    b.classifier_loss = j.value("classifier_loss", std::vector<double>{});
    for (const auto& h : j.value("history", json::array())) {
      RunMetadata m;
      m.stage = h.value("stage", std::string());
      m.seed = h.value("seed", std::uint64_t{0});
      m.data_fingerprint = parse_hex64(h.value("data_fingerprint", std::string("0")));
      m.n_windows = h.value("n_windows", std::size_t{0});
      m.n_fog = h.value("n_fog", std::size_t{0});
      m.plan = plan_from_json(h.value("plan", json::object()));
      m.mask = mask_from_json(h.value("mask", json::object()));
      b.history.push_back(m);
    }
  }
  return b;
}

}  // namespace fogwatch::ssl
