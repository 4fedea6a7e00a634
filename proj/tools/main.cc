#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "run_config.h"
#include "xlqa/common/error.h"
#include "xlqa/eval/evalkit.h"
#include "xlqa/synth/suite.h"
#include "xlqa/text/embedding.h"
#include "xlqa/text/squad.h"
#include "xlqa/text/vocab.h"
#include "xlqa/train/assets.h"
#include "xlqa/train/checkpoint.h"
#include "xlqa/xling/pipeline.h"

namespace fs = std::filesystem;
using namespace xlqa;
using cli::RunConfig;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitState = 3;

// Config sources of one command: file, then XLQA_SEED, then flags.
struct Sources {
  std::string config_file;
  std::vector<std::string> sets;
  std::string out;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_file, "key = value configuration file");
    app->add_option("--set", sets, "override one key (key=value), repeatable");
    app->add_option("--out", out, "output directory (config key out)");
  }

  RunConfig resolve() const {
    cli::KeyValues kv;
    if (!config_file.empty()) kv = cli::read_key_values(config_file);
    if (const char* seed = std::getenv("XLQA_SEED"); seed && *seed) kv["seed"] = seed;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      kv[s.substr(0, eq)] = s.substr(eq + 1);
    }
    if (!out.empty()) kv["out"] = out;
    return cli::resolve(kv);
  }
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::unique_ptr<text::LongestMatchSegmenter> segmenter(const RunConfig& cfg) {
  if (cfg.tgt_words.empty()) return nullptr;
  std::ifstream in(cfg.tgt_words, std::ios::binary);
  if (!in) throw ConfigError("tgt_words: cannot read " + cfg.tgt_words);
  auto seg = std::make_unique<text::LongestMatchSegmenter>();
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) seg->add(line);
  }
  return seg;
}

text::Dataset load(const std::string& path, Language lang, const text::Segmenter* seg, std::size_t max_doc) {
  text::Dataset d = text::load_squad_json(path, lang, lang == Language::kTgt ? seg : nullptr);
  if (max_doc > 0) d = text::filter_by_length(d, max_doc);
  return d;
}

struct Loaded {
  train::Corpus corpus;
  train::Assets assets;
  xling::BilingualLexicon lexicon;
};

// Datasets, tables and lexicon of a training configuration.
Loaded load_training_inputs(const RunConfig& cfg) {
  const bool needs_src = cfg.trainer.mode != train::TrainMode::kTargetOnly;
  std::vector<std::string> files = {"tgt_train", "tgt_dev", "tgt_vectors"};
  if (needs_src) files.push_back("src_train");
  if (cfg.trainer.mode == train::TrainMode::kAdversarial) files.push_back("lexicon");
  cli::require_files(cfg, files);
  if (!cfg.src_heldout.empty()) cli::require_files(cfg, {"src_heldout"});

  Loaded l;
  const auto seg = segmenter(cfg);
  auto& c = l.corpus;
  c.tgt_train = load(cfg.tgt_train, Language::kTgt, seg.get(), cfg.max_doc_tokens);
  c.tgt_dev = load(cfg.tgt_dev, Language::kTgt, seg.get(), 0);
  if (needs_src) {
    // Joint-shuffled training reads already-translated source examples.
    const Language lang =
        cfg.trainer.mode == train::TrainMode::kJointShuffled ? Language::kTgt : Language::kSrc;
    c.src_train = load(cfg.src_train, lang, seg.get(), cfg.max_doc_tokens);
  }
  if (!cfg.src_heldout.empty()) c.src_heldout = load(cfg.src_heldout, Language::kSrc, nullptr, 0);
  if (!cfg.lexicon.empty()) l.lexicon = xling::BilingualLexicon::load_tsv(cfg.lexicon);
  std::size_t dim = 0;
  const auto vectors = text::read_embedding_file(cfg.tgt_vectors, &dim);
  l.assets = train::build_assets(c, vectors, dim, l.lexicon.empty() ? nullptr : &l.lexicon);
  return l;
}

int cmd_prepare(const RunConfig& cfg) {
  cli::require_files(cfg, {"tgt_train", "tgt_vectors"});
  if (!cfg.tgt_dev.empty()) cli::require_files(cfg, {"tgt_dev"});
  const auto seg = segmenter(cfg);
  text::Dataset tgt = load(cfg.tgt_train, Language::kTgt, seg.get(), 0);
  text::Vocabulary vocab = text::build_word_vocabulary(tgt);
  if (!cfg.tgt_dev.empty()) text::extend_word_vocabulary(vocab, load(cfg.tgt_dev, Language::kTgt, seg.get(), 0));
  std::size_t dim = 0;
  const auto vectors = text::read_embedding_file(cfg.tgt_vectors, &dim, &vocab);
  const auto build = text::build_embedding_table(vocab, vectors, dim);

  const fs::path out(cfg.out);
  fs::create_directories(out);
  vocab.save((out / "tgt_vocab.txt").string());
  // Rows in vocabulary order; words without a vector are left out and read
  // back as the zero unknown row.
  std::vector<std::string> order;
  for (const auto& w : vocab.words()) {
    if (vectors.count(w)) order.push_back(w);
  }
  text::write_embedding_file(vectors, order, (out / "tgt_vectors.cache").string());
  std::ostringstream report;
  report.setf(std::ios::fixed);
  report.precision(2);
  report << "tgt vocabulary " << vocab.words().size() << " words, " << build.found << " with vectors, coverage "
         << 100.0 * build.coverage << "%\n";
  write_text(out / "config.txt", cli::dump(cfg));
  write_text(out / "prepare.txt", report.str());
  std::cout << report.str();
  return 0;
}

struct TranslateArgs {
  std::string mode, direction, input, output;
};

int cmd_translate(const RunConfig& cfg, const TranslateArgs& a) {
  if (a.mode != "wbw" && a.mode != "records") throw ConfigError("--mode must be wbw or records");
  const xling::Direction dir = xling::parse_direction(a.direction);
  if (a.input.empty() || !fs::exists(a.input)) throw ConfigError("--input: no such file " + a.input);
  if (a.output.empty()) throw ConfigError("--output is required");
  if (a.mode == "wbw" && cfg.lexicon.empty()) throw ConfigError("wbw mode needs a lexicon");
  if (a.mode == "records" && cfg.records.empty()) throw ConfigError("records mode needs translation records");
  cli::require_files(cfg, {a.mode == "wbw" ? "lexicon" : "records"});

  const auto seg = segmenter(cfg);
  const Language in_lang = dir == xling::Direction::kSrcToTgt ? Language::kSrc : Language::kTgt;
  const text::Dataset input = load(a.input, in_lang, seg.get(), 0);
  xling::TranslationStats stats;
  text::Dataset translated;
  std::optional<text::Dataset> filtered;
  if (a.mode == "wbw") {
    const auto lex = xling::BilingualLexicon::load_tsv(cfg.lexicon);
    if (dir == xling::Direction::kSrcToTgt) {
      auto r = xling::build_train_on_target(input, lex);
      translated = std::move(r.dataset);
      stats = r.stats;
    } else {
      translated.language = Language::kSrc;
      for (const auto& ex : input.examples) {
        auto w = xling::word_by_word_translate(ex, lex, dir);
        stats.oov += w.oov;
        translated.examples.push_back(std::move(w.example));
      }
      stats.total = stats.recovered = input.size();
    }
  } else {
    const auto records = xling::load_records_jsonl(cfg.records);
    if (dir == xling::Direction::kSrcToTgt) {
      auto r = xling::build_train_on_target(input, records, seg.get());
      translated = std::move(r.dataset);
      stats = r.stats;
    } else {
      auto r = xling::build_test_on_source(input, records);
      translated = std::move(r.full);
      filtered = std::move(r.filtered);
      stats = r.stats;
    }
  }

  const fs::path out(a.output);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  text::write_squad_json(translated, out.string());
  if (filtered) {
    fs::path f = out;
    f.replace_extension(".filtered.json");
    text::write_squad_json(*filtered, f.string());
  }
  nlohmann::json j = {{"total", stats.total}, {"recovered", stats.recovered}, {"dropped", stats.dropped}};
  if (a.mode == "wbw") j["oov"] = stats.oov;
  fs::path sp = out;
  sp.replace_extension(".stats.json");
  write_text(sp, j.dump(2) + "\n");
  std::cout << "total " << stats.total << " recovered " << stats.recovered << " dropped " << stats.dropped << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& resume) {
  if (!resume.empty() && !fs::exists(resume)) throw ConfigError("--resume: no such file " + resume);
  Loaded l = load_training_inputs(cfg);
  train::Trainer trainer(cfg.trainer, cfg.hyper, cfg.discriminator, l.corpus, l.assets);
  const std::string config_text = cli::dump(cfg);
  trainer.set_config_text(config_text);
  if (!resume.empty()) trainer.restore(train::load_checkpoint(resume));

  const fs::path out(cfg.out);
  fs::create_directories(out);
  write_text(out / "config.txt", config_text);
  const auto res = trainer.run(-1, [](const train::LogRow& r) {
    if (!std::isnan(r.dev_f1)) std::cout << train::log_line(r) << std::endl;
  });
  train::write_log_csv(res.log, (out / "log.csv").string());
  train::save_checkpoint(trainer.to_checkpoint(), (out / "checkpoint.bin").string());
  nlohmann::json summary = {{"best_em", res.best_em},   {"best_f1", res.best_f1},
                            {"best_step", res.best_step}, {"steps", res.steps},
                            {"stopped_early", res.stopped_early}};
  if (!std::isnan(res.d_accuracy)) summary["d_accuracy"] = res.d_accuracy;
  write_text(out / "summary.json", summary.dump(2) + "\n");
  std::cout << "best dev EM " << res.best_em << " F1 " << res.best_f1 << " at step " << res.best_step << "\n";
  return 0;
}

struct DataArgs {
  std::string checkpoint, data, lang = "tgt", output, predictions;
};

int cmd_predict(const Sources& src, const DataArgs& a) {
  if (a.checkpoint.empty() || !fs::exists(a.checkpoint)) throw ConfigError("--checkpoint: no such file " + a.checkpoint);
  if (a.data.empty() || !fs::exists(a.data)) throw ConfigError("--data: no such file " + a.data);
  if (a.output.empty()) throw ConfigError("--output is required");
  const Language lang = parse_language(a.lang);
  const train::Checkpoint ckpt = train::load_checkpoint(a.checkpoint);
  // The run's own configuration, with command-line sources layered on top.
  cli::KeyValues kv = cli::parse_key_values(ckpt.text("meta/config"), a.checkpoint);
  if (!src.config_file.empty()) {
    for (const auto& [k, v] : cli::read_key_values(src.config_file)) kv[k] = v;
  }
  for (const auto& s : src.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (!src.out.empty()) kv["out"] = src.out;
  const RunConfig cfg = cli::resolve(kv);
  Loaded l = load_training_inputs(cfg);
  const auto seg = segmenter(cfg);
  const text::Dataset data = load(a.data, lang, seg.get(), 0);
  train::Trainer trainer(cfg.trainer, cfg.hyper, cfg.discriminator, l.corpus, l.assets);
  trainer.restore(ckpt);
  const auto preds = trainer.predict(data, true);
  eval::write_predictions(preds, a.output);
  std::cout << preds.size() << " predictions written to " << a.output << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, const DataArgs& a) {
  if (a.predictions.empty() || !fs::exists(a.predictions)) {
    throw ConfigError("--predictions: no such file " + a.predictions);
  }
  if (a.data.empty() || !fs::exists(a.data)) throw ConfigError("--data: no such file " + a.data);
  const Language lang = parse_language(a.lang);
  const auto seg = segmenter(cfg);
  const text::Dataset gold = load(a.data, lang, seg.get(), 0);
  const auto preds = eval::read_predictions(a.predictions);
  const auto report = eval::evaluate(preds, gold, lang);
  if (!a.output.empty()) eval::write_report(report, a.output);
  std::cout << "EM " << report.exact_match << " F1 " << report.f1 << "\n";
  return 0;
}

int cmd_repro(const RunConfig& cfg, const std::string& suite) {
  if (suite != "transfer") throw ConfigError("unknown suite '" + suite + "' (expected transfer)");
  const auto rows = cli::split_list(cfg.suite_rows);
  std::vector<double> fractions;
  for (const auto& f : cli::split_list(cfg.fractions)) {
    try {
      fractions.push_back(std::stod(f));
    } catch (const std::exception&) {
      throw ConfigError("bad fraction '" + f + "'");
    }
    if (!(fractions.back() > 0.0 && fractions.back() <= 1.0)) throw ConfigError("fractions must lie in (0,1]");
  }
  synth::SuiteConfig sc;
  sc.trainer = cfg.trainer;
  sc.hyper = cfg.hyper;
  sc.discriminator = cfg.discriminator;
  sc.on_row = [](const std::string& row, const train::LogRow& r) {
    if (!std::isnan(r.dev_f1)) std::cout << row << ' ' << train::log_line(r) << std::endl;
  };
  // Row names are checked before the first (slow) run.
  for (const auto& r : rows) {
    const std::string base = r.substr(0, r.find('@'));
    if (base != "target-only" && base != "dependent" && base != "gan-ch" && base != "gan-en" &&
        base != "mt+gan-ch") {
      throw ConfigError("unknown suite row '" + r + "'");
    }
  }
  const synth::SynthCorpus corpus = synth::generate(cfg.synth);

  const fs::path out(cfg.out);
  fs::create_directories(out);
  write_text(out / "config.txt", cli::dump(cfg));
  synth::write_corpus(corpus, (out / "corpus").string());
  std::vector<synth::SuiteRow> results;
  for (const auto& r : rows) results.push_back(synth::run_row(corpus, sc, r));
  write_text(out / "suite.csv", synth::suite_csv(results));

  std::ostringstream curves;
  curves << "row," << train::log_header() << '\n';
  for (const auto& r : results) {
    for (const auto& l : r.log) curves << r.name << ',' << train::log_line(l) << '\n';
  }
  write_text(out / "curves.csv", curves.str());

  if (!fractions.empty()) {
    std::ostringstream eff;
    eff << "fraction,target_only_f1,gan_ch_f1\n";
    for (double f : fractions) {
      std::ostringstream name;
      name << f;
      const auto t = synth::run_row(corpus, sc, "target-only@" + name.str());
      const auto g = synth::run_row(corpus, sc, "gan-ch@" + name.str());
      eff << name.str() << ',' << t.f1 << ',' << g.f1 << '\n';
    }
    write_text(out / "label_efficiency.csv", eff.str());
  }
  std::cout << synth::suite_csv(results);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual extractive QA: data preparation, translation, training and evaluation"};
  app.require_subcommand(1);

  Sources prep_src, tr_src, train_src, pred_src, eval_src, repro_src;
  auto* prepare = app.add_subcommand("prepare", "Build the target vocabulary and embedding cache");
  prep_src.add_to(prepare);

  TranslateArgs ta;
  auto* translate = app.add_subcommand("translate", "Translate a dataset word by word or from records");
  tr_src.add_to(translate);
  translate->add_option("--mode", ta.mode, "wbw or records")->required();
  translate->add_option("--direction", ta.direction, "src2tgt or tgt2src")->required();
  translate->add_option("--input", ta.input, "SQuAD-format input")->required();
  translate->add_option("--output", ta.output, "SQuAD-format output")->required();

  std::string resume;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_src.add_to(train_cmd);
  train_cmd->add_option("--resume", resume, "checkpoint to continue from");

  DataArgs pa;
  auto* predict = app.add_subcommand("predict", "Write {id: answer} predictions with EMA weights");
  pred_src.add_to(predict);
  predict->add_option("--checkpoint", pa.checkpoint)->required();
  predict->add_option("--data", pa.data)->required();
  predict->add_option("--lang", pa.lang, "src or tgt");
  predict->add_option("--output", pa.output)->required();

  DataArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against a dataset");
  eval_src.add_to(eval_cmd);
  eval_cmd->add_option("--predictions", ea.predictions)->required();
  eval_cmd->add_option("--data", ea.data)->required();
  eval_cmd->add_option("--lang", ea.lang, "src or tgt");
  eval_cmd->add_option("--output", ea.output, "report JSON");

  std::string suite = "transfer";
  auto* repro = app.add_subcommand("repro", "Run the synthetic transfer suite");
  repro_src.add_to(repro);
  repro->add_option("--suite", suite);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*prepare) return cmd_prepare(prep_src.resolve());
    if (*translate) return cmd_translate(tr_src.resolve(), ta);
    if (*train_cmd) return cmd_train(train_src.resolve(), resume);
    if (*predict) return cmd_predict(pred_src, pa);
    if (*eval_cmd) return cmd_eval(eval_src.resolve(), ea);
    if (*repro) return cmd_repro(repro_src.resolve(), suite);
  } catch (const StateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitState;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
