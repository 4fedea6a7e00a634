#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "support/tiny_corpus.h"
#include "xlqa/common/error.h"
#include "xlqa/common/utf8.h"
#include "xlqa/eval/evalkit.h"
#include "xlqa/model/qanet.h"
#include "xlqa/synth/suite.h"
#include "xlqa/xling/pipeline.h"

using namespace xlqa;
using namespace xlqa::synth;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> texts(const std::vector<text::Token>& toks) {
  std::vector<std::string> out;
  for (const auto& t : toks) out.push_back(t.text);
  return out;
}

}  // namespace

TEST_CASE("word forms") {
  CHECK(source_word(0).size() == 4);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < 1000; ++i) seen.insert(source_word(i));
  CHECK(seen.size() == 1000);
  const auto t = utf8::decode(target_word(3));
  CHECK(t.size() == 2);
  CHECK(t[0] == 0x4E00 + 6);
  CHECK(t[1] == 0x4E00 + 7);
}

TEST_CASE("SynthSpec validation") {
  SynthSpec s;
  s.vocab_size = 19;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = SynthSpec{};
  s.n_target = s.n_source + 1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = SynthSpec{};
  s.pairs_per_doc = s.min_clauses + 1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK_NOTHROW(SynthSpec{}.validate());
  CHECK(parse_word_order("identity") == WordOrder::kIdentity);
}

TEST_CASE("same seed gives byte-identical corpora") {
  const auto base = std::filesystem::temp_directory_path() / "xlqa_synth_det";
  std::filesystem::remove_all(base);
  auto spec = testing::tiny_spec();
  write_corpus(generate(spec), (base / "a").string());
  write_corpus(generate(spec), (base / "b").string());
  spec.seed = 9;
  write_corpus(generate(spec), (base / "c").string());
  for (const char* f : {"source.json", "target.json", "dev.json", "src_heldout.json", "lexicon.tsv",
                        "tgt_vectors.txt", "records.jsonl", "tgt_words.txt"}) {
    INFO(f);
    const auto a = slurp(base / "a" / f);
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(base / "b" / f));
  }
  CHECK(slurp(base / "a" / "source.json") != slurp(base / "c" / "source.json"));
  std::filesystem::remove_all(base);
}

TEST_CASE("spans are valid on every generated example") {
  SynthSpec spec;
  spec.n_source = 8000;
  spec.n_target = 1000;
  spec.n_dev = 500;
  spec.n_src_heldout = 500;
  const auto c = generate(spec);
  std::size_t n = 0;
  for (const auto* d : {&c.source, &c.target, &c.dev, &c.src_heldout}) {
    for (const auto& ex : d->examples) {
      REQUIRE(text::check_example(ex).empty());
      const auto s = ex.answer_spans.at(0);
      CHECK(s.start == s.end);
      // The asked key sits next to its value: after it in the source
      // language, before it under reversed clauses.
      const auto& key = ex.question_tokens[ex.language == Language::kSrc ? ex.question_tokens.size() - 1 : 0].text;
      const int k = ex.language == Language::kSrc ? s.start - 1 : s.start + 1;
      CHECK(ex.document_tokens.at(static_cast<std::size_t>(k)).text == key);
      CHECK(ex.document_tokens.size() % kClauseLength == 0);
      ++n;
    }
  }
  CHECK(n == 10000);
  CHECK(c.source.examples[0].id == "src-000000");
  std::set<std::string> ids;
  for (const auto& ex : c.dev.examples) ids.insert(ex.id);
  for (const auto& ex : c.target.examples) CHECK(ids.count(ex.id) == 0);
}

TEST_CASE("identity order: the lexicon maps records to source examples token for token") {
  auto spec = testing::tiny_spec();
  spec.word_order = WordOrder::kIdentity;
  const auto c = generate(spec);
  const auto seg = target_segmenter(c);
  REQUIRE(c.records.size() == c.source.size());
  for (std::size_t i = 0; i < c.source.size(); ++i) {
    const auto w = xling::word_by_word_translate(c.source.examples[i], c.lexicon, xling::Direction::kSrcToTgt);
    CHECK(w.oov == 0);
    const auto doc = xling::assemble_translated_document(c.records[i], Language::kTgt);
    CHECK(texts(text::tokenize(doc.text, Language::kTgt, &seg)) == texts(w.example.document_tokens));
    CHECK(text::tokenize(c.records[i].question, Language::kTgt, &seg).size() == w.example.question_tokens.size());
  }
}

TEST_CASE("reversed clauses: records equal the clause-reversed word-by-word translation") {
  const auto c = generate(testing::tiny_spec());
  const auto seg = target_segmenter(c);
  for (std::size_t i = 0; i < c.source.size(); ++i) {
    const auto w = xling::word_by_word_translate(c.source.examples[i], c.lexicon, xling::Direction::kSrcToTgt);
    auto words = texts(w.example.document_tokens);
    for (std::size_t b = 0; b < words.size(); b += kClauseLength)
      std::reverse(words.begin() + static_cast<std::ptrdiff_t>(b), words.begin() + static_cast<std::ptrdiff_t>(b + kClauseLength));
    const auto doc = xling::assemble_translated_document(c.records[i], Language::kTgt);
    CHECK(texts(text::tokenize(doc.text, Language::kTgt, &seg)) == words);
  }
}

TEST_CASE("record translation drops exactly the garbled answers") {
  SynthSpec spec;
  spec.n_source = 2000;
  spec.n_target = 100;
  const auto c = generate(spec);
  const auto seg = target_segmenter(c);
  const auto out = xling::build_train_on_target(c.source, c.records, &seg);
  CHECK(out.stats.total == 2000);
  CHECK(out.stats.recovered + out.stats.dropped == 2000);
  const double rate = static_cast<double>(out.stats.dropped) / 2000.0;
  CHECK(rate > 0.07);
  CHECK(rate < 0.13);
  for (const auto& ex : out.dataset.examples) CHECK(text::check_example(ex).empty());
  const auto wbw = xling::build_train_on_target(c.source, c.lexicon);
  CHECK(wbw.stats.dropped == 0);
  CHECK(wbw.dataset.size() == 2000);
}

TEST_CASE("embeddings: remapped source rows equal their images") {
  const auto c = generate(testing::tiny_spec());
  testing::TinySetup s;
  const auto& src = s.assets.src;
  for (const auto& w : src.words.words()) {
    const auto* img = c.lexicon.lookup(w, xling::Direction::kSrcToTgt);
    REQUIRE(img != nullptr);
    const auto row = src.table.row(src.words.id(w));
    const auto& v = c.tgt_vectors.at(*img);
    CHECK(std::equal(row.begin(), row.end(), v.begin()));
  }
}

TEST_CASE("a source example and its translation carry the same information") {
  // With identity order, no character features and the target stack a copy
  // of the source stack, both languages must yield identical predictions.
  auto spec = testing::tiny_spec();
  spec.word_order = WordOrder::kIdentity;
  const auto c = generate(spec);
  train::Corpus corpus;
  corpus.src_train = c.source;
  corpus.tgt_train = xling::build_train_on_target(c.source, c.lexicon).dataset;
  corpus.tgt_dev = c.dev;
  const auto assets = train::build_assets(corpus, c.tgt_vectors, c.dim, &c.lexicon);
  auto hp = model::HyperParams::desk();
  hp.use_chars = false;
  ad::ParameterStore store;
  model::QANet net(hp, store, {&assets.src.table, assets.src.chars.size()}, {&assets.tgt.table, assets.tgt.chars.size()}, 3);
  auto& sg = store.group(ad::GroupId::kDepSrc);
  auto& tg = store.group(ad::GroupId::kDepTgt);
  for (const auto& [name, e] : sg.entries()) {
    if (name == "word_table" || name.rfind("char_", 0) == 0) continue;
    auto dst = tg.get(name).mutable_values();
    std::copy(e.tensor.values().begin(), e.tensor.values().end(), dst.begin());
  }
  const auto enc_src = text::encode_dataset(corpus.src_train, assets.src.words, assets.src.chars);
  const auto enc_tgt = text::encode_dataset(corpus.tgt_train, assets.tgt.words, assets.tgt.chars);
  eval::Predictions ps, pt;
  std::vector<eval::GoldEntry> gs, gt;
  ad::NoGradGuard guard;
  for (std::size_t i = 0; i < enc_src.examples.size(); ++i) {
    const std::size_t idx[] = {i};
    const auto bs = text::make_batch(enc_src, idx);
    const auto bt = text::make_batch(enc_tgt, idx);
    const auto ds = net.forward(Language::kSrc, model::sequence_view(bs.question, 0, true), model::sequence_view(bs.document, 0, true), {});
    const auto dt = net.forward(Language::kTgt, model::sequence_view(bt.question, 0, true), model::sequence_view(bt.document, 0, true), {});
    for (std::size_t p = 0; p < ds.mask.size(); ++p) CHECK(std::abs(ds.log_p1.at(p) - dt.log_p1.at(p)) < 1e-9);
    const auto& es = corpus.src_train.examples[enc_src.source_index[i]];
    const auto& et = corpus.tgt_train.examples[enc_tgt.source_index[i]];
    const auto [a, b] = net.predict(ds);
    const auto [x, y] = net.predict(dt);
    CHECK(a == x);
    CHECK(b == y);
    ps[es.id] = text::span_text(es, {a, b});
    pt[et.id] = text::span_text(et, {x, y});
    gs.push_back({es.id, es.answer_texts});
    gt.push_back({et.id, et.answer_texts});
  }
  // Character F1 on two-character target words equals token F1.
  const auto rs = eval::evaluate(ps, gs, Language::kSrc);
  const auto rt = eval::evaluate(pt, gt, Language::kTgt);
  CHECK(rs.exact_match == rt.exact_match);
  CHECK(rs.f1 == doctest::Approx(rt.f1).epsilon(1e-12));
}

TEST_CASE("suite rows parse and run") {
  auto spec = testing::tiny_spec();
  const auto c = generate(spec);
  SuiteConfig cfg;
  testing::TinySetup s;
  cfg.trainer = s.cfg;
  cfg.trainer.max_steps = 3;
  cfg.hyper = s.hp;
  cfg.discriminator = s.dcfg;
  for (const char* name : {"target-only", "dependent", "gan-ch", "gan-en", "mt+gan-ch", "gan-ch@0.6"}) {
    const auto row = run_row(c, cfg, name);
    INFO(name);
    CHECK(row.steps == 3);
    CHECK(row.f1 >= 0.0);
    CHECK(row.f1 <= 100.0);
    CHECK(std::isnan(row.d_accuracy) == (std::string(name) == "target-only" || std::string(name) == "dependent"));
  }
  CHECK_THROWS_AS(run_row(c, cfg, "nonsense"), ConfigError);
  CHECK_THROWS_AS(run_row(c, cfg, "gan-ch@1.5"), ConfigError);
  SuiteRow r;
  r.name = "x";
  const std::string csv = suite_csv({r});
  CHECK(csv.rfind("row,", 0) == 0);
}
