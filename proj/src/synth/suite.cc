#include "xlqa/synth/suite.h"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "xlqa/common/error.h"
#include "xlqa/train/assets.h"
#include "xlqa/xling/pipeline.h"

namespace xlqa::synth {

namespace {

text::Dataset head(const text::Dataset& d, double fraction) {
  text::Dataset out;
  out.language = d.language;
  const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(d.size())));
  out.examples.assign(d.examples.begin(), d.examples.begin() + static_cast<std::ptrdiff_t>(std::min(n, d.size())));
  return out;
}

}  // namespace

SuiteRow run_row(const SynthCorpus& corpus, const SuiteConfig& cfg, const std::string& row) {
  SuiteRow r;
  r.name = row;
  std::string base = row;
  if (auto at = row.find('@'); at != std::string::npos) {
    base = row.substr(0, at);
    try {
      r.target_fraction = std::stod(row.substr(at + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad target fraction in row '" + row + "'");
    }
    if (!(r.target_fraction > 0.0 && r.target_fraction <= 1.0)) throw ConfigError("target fraction must be in (0,1]");
  }
  if (base == "target-only") {
    r.mode = train::TrainMode::kTargetOnly;
  } else if (base == "dependent") {
    r.mode = train::TrainMode::kAdversarial;
  } else if (base == "gan-ch" || base == "mt+gan-ch") {
    r.mode = train::TrainMode::kAdversarial;
    r.variant = train::Variant::kGanCh;
    r.with_mt = base == "mt+gan-ch";
  } else if (base == "gan-en") {
    r.mode = train::TrainMode::kAdversarial;
    r.variant = train::Variant::kGanEn;
  } else {
    throw ConfigError("unknown suite row '" + row + "'");
  }

  train::Corpus c;
  c.src_train = corpus.source;
  c.tgt_train = head(corpus.target, r.target_fraction);
  c.tgt_dev = corpus.dev;
  c.src_heldout = corpus.src_heldout;
  if (r.with_mt) {
    const auto seg = target_segmenter(corpus);
    auto mt = xling::build_train_on_target(corpus.source, corpus.records, &seg);
    c.tgt_train.examples.insert(c.tgt_train.examples.end(), mt.dataset.examples.begin(), mt.dataset.examples.end());
  }
  // Assets come from the full corpus so every row sees the same tables.
  train::Corpus all = c;
  all.tgt_train = corpus.target;
  const train::Assets assets = train::build_assets(all, corpus.tgt_vectors, corpus.dim, &corpus.lexicon);

  train::TrainerConfig tc = cfg.trainer;
  tc.mode = r.mode;
  tc.variant = r.variant;
  const auto t0 = std::chrono::steady_clock::now();
  train::Trainer trainer(tc, cfg.hyper, cfg.discriminator, c, assets);
  std::function<void(const train::LogRow&)> cb;
  if (cfg.on_row) cb = [&](const train::LogRow& lr) { cfg.on_row(row, lr); };
  const train::TrainResult res = trainer.run(-1, cb);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.em = res.best_em;
  r.f1 = res.best_f1;
  r.step0_f1 = res.step0_f1;
  r.d_accuracy = res.d_accuracy;
  r.steps = res.steps;
  r.best_step = res.best_step;
  r.log = res.log;
  return r;
}

std::vector<SuiteRow> run_transfer_suite(const SynthSpec& spec, const SuiteConfig& cfg) {
  const SynthCorpus corpus = generate(spec);
  std::vector<SuiteRow> out;
  for (const std::string& row : cfg.rows) out.push_back(run_row(corpus, cfg, row));
  return out;
}

std::string suite_csv(const std::vector<SuiteRow>& rows) {
  std::ostringstream os;
  os << "row,mode,variant,target_fraction,em,f1,d_accuracy,steps,best_step\n";
  os << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.name << ',' << train::mode_name(r.mode) << ',' << train::variant_name(r.variant) << ','
       << r.target_fraction << ',' << r.em << ',' << r.f1 << ',';
    if (!std::isnan(r.d_accuracy)) os << r.d_accuracy;
    os << ',' << r.steps << ',' << r.best_step << '\n';
  }
  return os.str();
}

}  // namespace xlqa::synth
