#include "xlqa/train/trainer.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "xlqa/autodiff/ops.h"
#include "xlqa/common/error.h"

namespace xlqa::train {

using model::SequenceView;
using ad::Mask;
using ad::Shape;
using text::Batch;

std::string_view mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::kTargetOnly: return "target-only";
    case TrainMode::kJointShuffled: return "joint-shuffled";
    case TrainMode::kAdversarial: return "adversarial";
  }
  return "?";
}

TrainMode parse_mode(std::string_view s) {
  if (s == "target-only") return TrainMode::kTargetOnly;
  if (s == "joint-shuffled") return TrainMode::kJointShuffled;
  if (s == "adversarial") return TrainMode::kAdversarial;
  throw ConfigError("unknown training mode '" + std::string(s) + "'");
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kNone: return "none";
    case Variant::kGanCh: return "gan-ch";
    case Variant::kGanEn: return "gan-en";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  if (s == "none") return Variant::kNone;
  if (s == "gan-ch" || s == "GAN-CH") return Variant::kGanCh;
  if (s == "gan-en" || s == "GAN-EN") return Variant::kGanEn;
  throw ConfigError("unknown adversarial variant '" + std::string(s) + "'");
}

std::string_view ramp_name(RampShape r) { return r == RampShape::kLinear ? "linear" : "cosine"; }

RampShape parse_ramp(std::string_view s) {
  if (s == "linear") return RampShape::kLinear;
  if (s == "cosine") return RampShape::kCosine;
  throw ConfigError("unknown ramp shape '" + std::string(s) + "'");
}

void TrainerConfig::validate() const {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(lambda.peak >= 0)) throw ConfigError("lambda peak must be >= 0");
  if (lambda.ramp_steps < 1) throw ConfigError("lambda ramp steps must be >= 1");
  if (!(lr > 0) || !(d_lr > 0)) throw ConfigError("learning rates must be positive");
  if (!(ema_decay >= 0 && ema_decay < 1)) throw ConfigError("ema decay must be in [0,1)");
  if (max_steps < 0 || eval_every < 1 || patience < 1) throw ConfigError("bad step/eval/patience settings");
  if (mode != TrainMode::kAdversarial && variant != Variant::kNone) {
    throw ConfigError("adversarial variants need mode=adversarial");
  }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  };
  return splitmix(splitmix(splitmix(seed) ^ a) ^ (b * 0xD1B54A32D192ED03ull));
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

enum Purpose : std::uint64_t { kQaTgt = 1, kQaSrc = 2, kDStep = 100, kInit = 7, kDInit = 8 };

text::Dataset merged(const text::Dataset& a, const text::Dataset& b) {
  text::Dataset out;
  out.language = b.language;
  out.examples = a.examples;
  out.examples.insert(out.examples.end(), b.examples.begin(), b.examples.end());
  return out;
}

}  // namespace

std::string log_header() { return "step,l_qa,l_dis,lambda_g,dev_em,dev_f1"; }

std::string log_line(const LogRow& r) {
  return std::to_string(r.step) + "," + fmt(r.l_qa) + "," + fmt(r.l_dis) + "," + fmt(r.lambda_g) + "," +
         fmt(r.dev_em) + "," + fmt(r.dev_f1);
}

void write_log_csv(const std::vector<LogRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << log_header() << '\n';
  for (const auto& r : rows) out << log_line(r) << '\n';
}

Trainer::Trainer(const TrainerConfig& cfg, const model::HyperParams& hp,
                 const adversary::DiscriminatorConfig& dcfg, const Corpus& corpus, const Assets& assets)
    : cfg_(cfg), hp_(hp), corpus_(corpus), assets_(assets) {
  cfg_.validate();
  hp_.validate();
  if (corpus_.tgt_dev.language != Language::kTgt) throw ConfigError("dev set must be in the target language");
  dev_ = &corpus_.tgt_dev;

  const bool adversarial = cfg_.mode == TrainMode::kAdversarial;
  if (cfg_.mode == TrainMode::kTargetOnly) corpus_.src_train.examples.clear();
  for (text::Dataset* d : {&corpus_.src_train, &corpus_.tgt_train}) {
    std::erase_if(d->examples, [](const text::Example& ex) { return !ex.answerable(); });
  }
  if (adversarial) {
    if (corpus_.src_train.empty() || corpus_.src_train.language != Language::kSrc) {
      throw ConfigError("adversarial mode needs a source-language training set");
    }
    if (!assets_.src.table.matrix.defined()) {
      throw ConfigError("adversarial mode needs source embeddings (shared through a lexicon)");
    }
  } else if (!corpus_.src_train.empty() && corpus_.src_train.language != Language::kTgt) {
    throw ConfigError("joint-shuffled training needs the source set translated into the target language");
  }
  if (corpus_.tgt_train.empty() && corpus_.src_train.empty()) throw ConfigError("no training examples");

  const auto& tw = assets_.tgt;
  const auto& sw = assets_.src.table.matrix.defined() ? assets_.src : assets_.tgt;
  model_ = std::make_unique<model::QANet>(hp_, store_, model::LanguageResources{&sw.table, sw.chars.size()},
                                          model::LanguageResources{&tw.table, tw.chars.size()},
                                          mix_seed(cfg_.seed, kInit));
  if (adversarial && cfg_.variant != Variant::kNone) {
    adversary::DiscriminatorConfig dc = dcfg;
    dc.input_dim = hp_.hidden;
    disc_ = std::make_unique<adversary::Discriminator>(dc, store_, mix_seed(cfg_.seed, kDInit));
  }

  if (adversarial) {
    enc_src_ = text::encode_dataset(corpus_.src_train, assets_.src.words, assets_.src.chars);
    enc_tgt_ = text::encode_dataset(corpus_.tgt_train, tw.words, tw.chars);
    if (enc_tgt_.examples.empty()) throw ConfigError("adversarial mode needs target training examples");
  } else {
    enc_tgt_ = text::encode_dataset(merged(corpus_.src_train, corpus_.tgt_train), tw.words, tw.chars);
  }
  enc_dev_ = text::encode_dataset(corpus_.tgt_dev, tw.words, tw.chars);
  if (!corpus_.src_heldout.empty() && assets_.src.table.matrix.defined()) {
    enc_heldout_ = text::encode_dataset(corpus_.src_heldout, assets_.src.words, assets_.src.chars);
  }

  auto make_stream = [](const text::EncodedDataset* data, std::uint64_t id, bool cyclic) {
    Stream s;
    s.data = data;
    s.id = id;
    s.cyclic = cyclic;
    return s;
  };
  qa_tgt_ = make_stream(&enc_tgt_, kQaTgt, false);
  qa_src_ = make_stream(&enc_src_, kQaSrc, false);
  d_tgt_ = make_stream(&enc_tgt_, 3, true);
  d_src_ = make_stream(&enc_src_, 4, true);

  if (adversarial) {
    qa_params_ = collect({ad::GroupId::kDepSrc, ad::GroupId::kDepTgt, ad::GroupId::kIndependent});
  } else {
    qa_params_ = collect({ad::GroupId::kDepTgt, ad::GroupId::kIndependent});
  }
  if (disc_) d_params_ = collect({ad::GroupId::kDiscriminator});

  AdamConfig ac;
  ac.lr = cfg_.lr;
  ac.clip_norm = cfg_.clip_norm;
  ac.l2 = cfg_.l2;
  qa_opt_ = Adam(ac);
  ac.lr = cfg_.d_lr;
  ac.l2 = 0.0;
  d_opt_ = Adam(ac);
  ema_.track(qa_params_);
}

Trainer::~Trainer() = default;

std::vector<NamedParam> Trainer::collect(std::initializer_list<ad::GroupId> groups) const {
  std::vector<NamedParam> out;
  auto& store = const_cast<ad::ParameterStore&>(store_);
  for (ad::GroupId id : groups) {
    auto& g = store.group(id);
    for (auto& [name, entry] : g.entries()) {
      if (entry.frozen) continue;
      out.push_back({std::string(g.name()) + "/" + name, &g.get(name)});
    }
  }
  return out;
}

const std::vector<std::size_t>& Trainer::epoch_order(Stream& s, long long epoch) {
  if (s.cached_epoch != epoch) {
    s.order = text::shuffled_order(s.data->examples.size(), mix_seed(cfg_.seed, s.id, static_cast<std::uint64_t>(epoch)));
    s.cached_epoch = epoch;
  }
  return s.order;
}

std::vector<std::size_t> Trainer::next_indices(Stream& s) {
  const std::size_t n = s.data->examples.size();
  if (n == 0) throw StateError("batch stream over an empty dataset");
  const std::size_t b = cfg_.batch_size;
  std::vector<std::size_t> out;
  if (s.cyclic) {
    const std::size_t take = std::min(b, n);
    for (std::size_t i = 0; i < take; ++i) {
      const auto item = static_cast<std::size_t>(s.consumed) + i;
      out.push_back(epoch_order(s, static_cast<long long>(item / n))[item % n]);
    }
    s.consumed += static_cast<long long>(take);
    return out;
  }
  const std::size_t per_epoch = (n + b - 1) / b;
  const long long epoch = s.consumed / static_cast<long long>(per_epoch);
  const std::size_t idx = static_cast<std::size_t>(s.consumed % static_cast<long long>(per_epoch));
  const auto& order = epoch_order(s, epoch);
  for (std::size_t i = idx * b; i < std::min(n, idx * b + b); ++i) out.push_back(order[i]);
  ++s.consumed;
  return out;
}

double Trainer::discriminator_step(int j) {
  const auto ti = next_indices(d_tgt_);
  const auto si = next_indices(d_src_);
  const std::size_t m = std::min(ti.size(), si.size());
  const Batch tb = text::make_batch(enc_tgt_, std::span(ti).first(m));
  const Batch sb = text::make_batch(enc_src_, std::span(si).first(m));

  std::mt19937_64 rng(mix_seed(cfg_.seed, static_cast<std::uint64_t>(step_), kDStep + static_cast<std::uint64_t>(j)));
  model::Context ctx{true, hp_.dropout, &rng};
  std::vector<std::pair<Tensor, Mask>> feats_t, feats_s;
  {
    ad::NoGradGuard guard;
    for (std::size_t i = 0; i < m; ++i) {
      auto o = model_->dependent_forward(Language::kTgt, model::sequence_view(tb.question, i, true),
                                         model::sequence_view(tb.document, i, true), ctx);
      feats_t.emplace_back(o.question, o.question_mask);
      feats_t.emplace_back(o.document, o.document_mask);
    }
    for (std::size_t i = 0; i < m; ++i) {
      auto o = model_->dependent_forward(Language::kSrc, model::sequence_view(sb.question, i, true),
                                         model::sequence_view(sb.document, i, true), ctx);
      feats_s.emplace_back(o.question, o.question_mask);
      feats_s.emplace_back(o.document, o.document_mask);
    }
  }
  for (auto& p : d_params_) p.tensor->zero_grad();
  std::vector<Tensor> zt, zs;
  for (auto& [x, mask] : feats_t) zt.push_back(disc_->logit(x, mask));
  for (auto& [x, mask] : feats_s) zs.push_back(disc_->logit(x, mask));
  const Tensor l_dis = adversary::discriminator_loss(zt, zs);
  ad::backward(l_dis);
  d_opt_.step(d_params_);
  return static_cast<double>(l_dis.item());
}

double Trainer::qa_step(double lambda_g) {
  for (auto& p : qa_params_) p.tensor->zero_grad();
  const bool adversarial = cfg_.mode == TrainMode::kAdversarial;
  const auto ti = next_indices(qa_tgt_);
  std::vector<std::size_t> si;
  if (adversarial) si = next_indices(qa_src_);
  const Batch tb = text::make_batch(enc_tgt_, ti);
  Batch sb;
  if (adversarial) sb = text::make_batch(enc_src_, si);
  const double n = static_cast<double>(ti.size() + si.size());

  if (disc_) store_.group(ad::GroupId::kDiscriminator).set_trainable(false);
  double l_qa_sum = 0.0;
  auto run = [&](const Batch& b, Language lang, std::uint64_t purpose) {
    std::mt19937_64 rng(mix_seed(cfg_.seed, static_cast<std::uint64_t>(step_), purpose));
    model::Context ctx{true, hp_.dropout, &rng};
    const bool adv = disc_ && ((cfg_.variant == Variant::kGanCh && lang == Language::kSrc) ||
                               (cfg_.variant == Variant::kGanEn && lang == Language::kTgt));
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto dep = model_->dependent_forward(lang, model::sequence_view(b.question, i, true),
                                                 model::sequence_view(b.document, i, true), ctx);
      const auto dist = model_->independent_forward(dep, ctx);
      const Tensor nll = model::span_nll(dist, b.y1[i], b.y2[i]);
      l_qa_sum += static_cast<double>(nll.item());
      Tensor loss = ad::scale(nll, static_cast<Real>(1.0 / n));
      if (adv) {
        const std::vector<Tensor> z = {disc_->logit(dep.question, dep.question_mask),
                                       disc_->logit(dep.document, dep.document_mask)};
        const Tensor terms = adversary::discriminator_loss_terms(z, lang == Language::kTgt);
        loss = adversary::adversarial_generator_loss(loss, terms, lambda_g);
      }
      ad::backward(loss);
    }
  };
  run(tb, Language::kTgt, kQaTgt);
  if (adversarial) run(sb, Language::kSrc, kQaSrc);
  if (disc_) store_.group(ad::GroupId::kDiscriminator).set_trainable(true);
  qa_opt_.step(qa_params_);
  return l_qa_sum / n;
}

StepMetrics Trainer::step() {
  StepMetrics m;
  m.lambda_g = cfg_.lambda(step_);
  if (disc_) {
    double sum = 0.0;
    for (int j = 0; j < cfg_.k; ++j) {
      sum += discriminator_step(j);
      ++m.d_updates;
    }
    m.l_dis = sum / cfg_.k;
  }
  m.l_qa = qa_step(m.lambda_g);
  ++m.qa_updates;
  ++step_;
  ema_.update(qa_params_, ema_warmup_decay(cfg_.ema_decay, step_));
  m.step = step_;
  return m;
}

eval::Predictions Trainer::predict(const text::Dataset& data, bool use_ema) {
  if (data.language == Language::kSrc && !assets_.src.table.matrix.defined()) {
    throw ConfigError("no source-language assets to predict with");
  }
  const auto& la = data.language == Language::kSrc ? assets_.src : assets_.tgt;
  const auto enc = text::encode_dataset(data, la.words, la.chars);
  if (use_ema) ema_.swap_into(qa_params_);
  eval::Predictions out;
  try {
    ad::NoGradGuard guard;
    model::Context ctx;
    for (std::size_t i = 0; i < enc.examples.size(); ++i) {
      const std::size_t idx[] = {i};
      const Batch b = text::make_batch(enc, idx);
      const auto dist = model_->forward(data.language, model::sequence_view(b.question, 0, true),
                                        model::sequence_view(b.document, 0, true), ctx);
      const auto [s, e] = model_->predict(dist);
      const text::Example& ex = data.examples[enc.source_index[i]];
      out[ex.id] = text::span_text(ex, text::TokenSpan{s, e});
    }
  } catch (...) {
    if (use_ema) ema_.swap_into(qa_params_);
    throw;
  }
  if (use_ema) ema_.swap_into(qa_params_);
  return out;
}

DevResult Trainer::evaluate_dev() {
  DevResult r;
  r.predictions = predict(*dev_, true);
  const auto report = eval::evaluate(r.predictions, *dev_, Language::kTgt);
  r.em = report.exact_match;
  r.f1 = report.f1;
  return r;
}

double Trainer::discriminator_accuracy() {
  if (!disc_ || enc_heldout_.examples.empty() || enc_dev_.examples.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const std::size_t n = std::min({cfg_.dacc_examples, enc_heldout_.examples.size(), enc_dev_.examples.size()});
  ad::NoGradGuard guard;
  model::Context ctx;
  std::size_t correct = 0, total = 0;
  auto score = [&](const text::EncodedDataset& enc, Language lang) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t idx[] = {i};
      const Batch b = text::make_batch(enc, idx);
      const auto o = model_->dependent_forward(lang, model::sequence_view(b.question, 0, true),
                                               model::sequence_view(b.document, 0, true), ctx);
      for (const auto& [x, mask] : {std::pair{o.question, o.question_mask}, std::pair{o.document, o.document_mask}}) {
        const bool says_src = disc_->score(x, mask) > 0.5;
        correct += says_src == (lang == Language::kSrc);
        ++total;
      }
    }
  };
  score(enc_dev_, Language::kTgt);
  score(enc_heldout_, Language::kSrc);
  return static_cast<double>(correct) / static_cast<double>(total);
}

void Trainer::snapshot_best() { best_snapshot_ = ema_.shadows(); }

void Trainer::load_best_weights() {
  const auto& src = best_snapshot_.empty() ? ema_.shadows() : best_snapshot_;
  for (auto& p : qa_params_) {
    const auto& v = src.at(p.name);
    std::copy(v.begin(), v.end(), p.tensor->mutable_values().begin());
  }
}

TrainResult Trainer::run(long long until_step, const std::function<void(const LogRow&)>& on_row) {
  const long long target = until_step < 0 ? cfg_.max_steps : std::min(until_step, cfg_.max_steps);
  auto evaluate_into = [&](LogRow& row) {
    const DevResult dev = evaluate_dev();
    row.dev_em = dev.em;
    row.dev_f1 = dev.f1;
    if (!step0_done_ || dev.f1 > result_.best_f1) {
      result_.best_f1 = dev.f1;
      result_.best_em = dev.em;
      result_.best_step = step_;
      evals_since_best_ = 0;
      snapshot_best();
    } else if (++evals_since_best_ >= cfg_.patience) {
      stopped_ = true;
    }
  };
  if (!step0_done_) {
    LogRow row;
    row.step = 0;
    evaluate_into(row);
    result_.step0_f1 = row.dev_f1;
    step0_done_ = true;
    result_.log.push_back(row);
    if (on_row) on_row(row);
  }
  while (!stopped_ && step_ < target) {
    const StepMetrics m = step();
    LogRow row;
    row.step = m.step;
    row.l_qa = m.l_qa;
    row.l_dis = m.l_dis;
    row.lambda_g = m.lambda_g;
    if (step_ % cfg_.eval_every == 0 || step_ == cfg_.max_steps) evaluate_into(row);
    result_.log.push_back(row);
    if (on_row) on_row(row);
  }
  result_.steps = step_;
  result_.stopped_early = stopped_;
  result_.d_accuracy = discriminator_accuracy();
  return result_;
}

Checkpoint Trainer::to_checkpoint() const {
  Checkpoint c;
  auto dims_of = [](const Tensor& t) {
    std::vector<std::uint64_t> d(t.shape().begin(), t.shape().end());
    return d;
  };
  auto as_double = [](auto span) { return std::vector<double>(span.begin(), span.end()); };
  store_.for_each([&](const std::string& q, const Tensor& t, bool) {
    c.add("param/" + q, dims_of(t), as_double(t.values()));
  });
  auto add_moments = [&](const std::string& prefix, const Adam& opt, const std::vector<NamedParam>& params) {
    c.add_scalar(prefix + "t", static_cast<double>(opt.steps()));
    for (const auto& p : params) {
      auto it = opt.moments().find(p.name);
      if (it == opt.moments().end()) continue;
      c.add(prefix + "m/" + p.name, dims_of(*p.tensor), as_double(it->second.m));
      c.add(prefix + "v/" + p.name, dims_of(*p.tensor), as_double(it->second.v));
    }
  };
  add_moments("adam/", qa_opt_, qa_params_);
  if (disc_) add_moments("d_adam/", d_opt_, d_params_);
  for (const auto& p : qa_params_) {
    c.add("ema/" + p.name, dims_of(*p.tensor), as_double(ema_.shadows().at(p.name)));
    auto it = best_snapshot_.find(p.name);
    if (it != best_snapshot_.end()) c.add("best/" + p.name, dims_of(*p.tensor), as_double(it->second));
  }
  c.add_scalar("meta/step", static_cast<double>(step_));
  c.add_scalar("meta/stream/qa_tgt", static_cast<double>(qa_tgt_.consumed));
  c.add_scalar("meta/stream/qa_src", static_cast<double>(qa_src_.consumed));
  c.add_scalar("meta/stream/d_tgt", static_cast<double>(d_tgt_.consumed));
  c.add_scalar("meta/stream/d_src", static_cast<double>(d_src_.consumed));
  c.add_scalar("meta/best_f1", result_.best_f1);
  c.add_scalar("meta/best_em", result_.best_em);
  c.add_scalar("meta/best_step", static_cast<double>(result_.best_step));
  c.add_scalar("meta/step0_f1", result_.step0_f1);
  c.add_scalar("meta/evals_since_best", evals_since_best_);
  c.add_scalar("meta/stopped", stopped_ ? 1.0 : 0.0);
  c.add_scalar("meta/step0_done", step0_done_ ? 1.0 : 0.0);
  c.add_text("meta/config", config_text_);
  return c;
}

void Trainer::restore(const Checkpoint& c) {
  auto copy_into = [](const Checkpoint::Entry& e, std::span<Real> dst, const Shape& shape) {
    if (e.dims.size() != shape.size() || !std::equal(e.dims.begin(), e.dims.end(), shape.begin())) {
      throw StateError("checkpoint entry '" + e.name + "' has shape " +
                       ad::shape_string(Shape(e.dims.begin(), e.dims.end())) + ", model expects " +
                       ad::shape_string(shape));
    }
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<Real>(e.values[i]);
  };
  if (c.version != kCheckpointVersion) {
    throw StateError("checkpoint version " + std::to_string(c.version) + " is not supported (expected " +
                     std::to_string(kCheckpointVersion) + ")");
  }
  // Validate every parameter before mutating anything.
  store_.for_each([&](const std::string& q, const Tensor& t, bool) {
    const auto& e = c.get("param/" + q);
    if (e.dims.size() != t.rank() || !std::equal(e.dims.begin(), e.dims.end(), t.shape().begin())) {
      throw StateError("checkpoint parameter '" + q + "' has shape " +
                       ad::shape_string(Shape(e.dims.begin(), e.dims.end())) + ", model expects " +
                       ad::shape_string(t.shape()));
    }
  });
  store_.for_each([&](const std::string& q, Tensor& t, bool) {
    copy_into(c.get("param/" + q), t.mutable_values(), t.shape());
  });
  auto load_moments = [&](const std::string& prefix, Adam& opt, const std::vector<NamedParam>& params) {
    opt.set_steps(static_cast<long long>(c.scalar(prefix + "t")));
    opt.moments().clear();
    for (const auto& p : params) {
      const auto* m = c.find(prefix + "m/" + p.name);
      const auto* v = c.find(prefix + "v/" + p.name);
      if (!m || !v) continue;
      AdamMoments mom;
      mom.m.resize(p.tensor->size());
      mom.v.resize(p.tensor->size());
      copy_into(*m, mom.m, p.tensor->shape());
      copy_into(*v, mom.v, p.tensor->shape());
      opt.moments()[p.name] = std::move(mom);
    }
  };
  load_moments("adam/", qa_opt_, qa_params_);
  if (disc_) load_moments("d_adam/", d_opt_, d_params_);
  best_snapshot_.clear();
  for (const auto& p : qa_params_) {
    auto& shadow = ema_.shadows()[p.name];
    shadow.resize(p.tensor->size());
    copy_into(c.get("ema/" + p.name), shadow, p.tensor->shape());
    if (const auto* b = c.find("best/" + p.name)) {
      auto& dst = best_snapshot_[p.name];
      dst.resize(p.tensor->size());
      copy_into(*b, dst, p.tensor->shape());
    }
  }
  step_ = static_cast<long long>(c.scalar("meta/step"));
  qa_tgt_.consumed = static_cast<long long>(c.scalar("meta/stream/qa_tgt"));
  qa_src_.consumed = static_cast<long long>(c.scalar("meta/stream/qa_src"));
  d_tgt_.consumed = static_cast<long long>(c.scalar("meta/stream/d_tgt"));
  d_src_.consumed = static_cast<long long>(c.scalar("meta/stream/d_src"));
  result_.best_f1 = c.scalar("meta/best_f1");
  result_.best_em = c.scalar("meta/best_em");
  result_.best_step = static_cast<long long>(c.scalar("meta/best_step"));
  result_.step0_f1 = c.scalar("meta/step0_f1");
  result_.steps = step_;
  evals_since_best_ = static_cast<int>(c.scalar("meta/evals_since_best"));
  stopped_ = c.scalar("meta/stopped") != 0.0;
  step0_done_ = c.scalar("meta/step0_done") != 0.0;
  for (auto& p : qa_params_) p.tensor->zero_grad();
  for (auto& p : d_params_) p.tensor->zero_grad();
}

}  // namespace xlqa::train
