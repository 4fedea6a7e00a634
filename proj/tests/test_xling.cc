#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "support/oracles.h"
#include "xlqa/common/error.h"
#include "xlqa/text/tokenizer.h"
#include "xlqa/xling/lexicon.h"
#include "xlqa/xling/pipeline.h"

using namespace xlqa;
using namespace xlqa::xling;
using text::Example;
using text::TokenSpan;

namespace {

Example src_example(const std::string& id, std::vector<std::string> doc, TokenSpan span,
                    std::vector<std::string> question = {"where"}) {
  Example ex;
  ex.id = id;
  ex.language = Language::kSrc;
  ex.document_tokens = text::layout_tokens(doc, Language::kSrc, &ex.context);
  ex.question_tokens = text::layout_tokens(question, Language::kSrc, &ex.question);
  ex.answer_spans = {span};
  ex.answer_texts = {text::span_text(ex, span)};
  return ex;
}

BilingualLexicon cat_lexicon() {
  BilingualLexicon lex;
  lex.add("cat", "猫");
  lex.add("dog", "狗");
  lex.add("where", "哪");
  return lex;
}

std::vector<std::string> texts(const std::vector<text::Token>& toks) {
  std::vector<std::string> out;
  for (const auto& t : toks) out.push_back(t.text);
  return out;
}

}  // namespace

TEST_CASE("lexicon") {
  BilingualLexicon lex;
  CHECK(lex.add("cat", "猫"));
  CHECK_FALSE(lex.add("cat", "貓"));
  CHECK(*lex.lookup("cat", Direction::kSrcToTgt) == "猫");
  CHECK(*lex.lookup("猫", Direction::kTgtToSrc) == "cat");
  CHECK(lex.lookup("dog", Direction::kSrcToTgt) == nullptr);
  CHECK(parse_direction("tgt2src") == Direction::kTgtToSrc);
  CHECK_THROWS(parse_direction("sideways"));
  const auto path = (std::filesystem::temp_directory_path() / "xlqa_lex_test.tsv").string();
  lex.add("dog", "狗");
  lex.save_tsv(path);
  const auto back = BilingualLexicon::load_tsv(path);
  CHECK(back.entries() == lex.entries());
  std::ofstream(path) << "cat\t猫\nbroken line\n";
  CHECK_THROWS_AS(BilingualLexicon::load_tsv(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("word-by-word translation") {
  const auto lex = cat_lexicon();
  SUBCASE("single token") {
    const auto r = word_by_word_translate(src_example("a", {"cat"}, {0, 0}), lex, Direction::kSrcToTgt);
    CHECK(texts(r.example.document_tokens) == std::vector<std::string>{"猫"});
    CHECK(r.example.answer_spans[0] == TokenSpan{0, 0});
    CHECK(r.example.language == Language::kTgt);
    CHECK(r.oov == 0);
  }
  SUBCASE("out-of-lexicon token kept and counted") {
    const auto r = word_by_word_translate(src_example("a", {"cat", "zebra"}, {0, 0}), lex, Direction::kSrcToTgt);
    CHECK(texts(r.example.document_tokens) == std::vector<std::string>{"猫", "zebra"});
    CHECK(r.oov == 1);
  }
  SUBCASE("answer follows the target joining rule") {
    const auto r = word_by_word_translate(src_example("a", {"dog", "cat", "cat"}, {1, 2}), lex, Direction::kSrcToTgt);
    CHECK(r.example.answer_texts[0] == "猫猫");
    CHECK(r.example.answer_spans[0] == TokenSpan{1, 2});
    CHECK(r.example.context == "狗猫猫");
    CHECK(text::check_example(r.example).empty());
  }
  SUBCASE("multi-word images re-index spans") {
    BilingualLexicon multi;
    multi.add("house cat", "猫");
    multi.add("dog", "狗");
    Example t;
    t.id = "t";
    t.language = Language::kTgt;
    const std::vector<std::string> doc = {"猫", "狗", "猫"};
    t.document_tokens = text::layout_tokens(doc, Language::kTgt, &t.context);
    const std::vector<std::string> q = {"狗"};
    t.question_tokens = text::layout_tokens(q, Language::kTgt, &t.question);
    t.answer_spans = {{1, 2}};
    t.answer_texts = {"狗猫"};
    const auto r = word_by_word_translate(t, multi, Direction::kTgtToSrc);
    CHECK(texts(r.example.document_tokens) == std::vector<std::string>{"house", "cat", "dog", "house", "cat"});
    CHECK(r.example.answer_spans[0] == TokenSpan{2, 4});
    CHECK(r.example.answer_texts[0] == "dog house cat");
  }
  CHECK_THROWS_AS(word_by_word_translate(src_example("a", {"cat"}, {0, 0}), BilingualLexicon{}, Direction::kSrcToTgt),
                  ConfigError);
  CHECK_THROWS_AS(word_by_word_translate(src_example("a", {"cat"}, {0, 0}), lex, Direction::kTgtToSrc), ContractError);
}

TEST_CASE("shared embedding remap") {
  text::Vocabulary v;
  v.add("cat");
  v.add("dog");
  v.add("zebra");
  text::VectorMap tgt{{"猫", {0.125, -3.5}}, {"狗", {1.0 / 3.0, 2.0}}};
  const auto r = remap_shared_embeddings(v, cat_lexicon(), tgt, 2);
  CHECK(r.mapped == 2);
  CHECK(r.coverage == doctest::Approx(2.0 / 3.0));
  const auto cat = r.table.row(v.id("cat"));
  CHECK(std::memcmp(cat.data(), tgt["猫"].data(), 2 * sizeof(ad::Real)) == 0);
  const auto dog = r.table.row(v.id("dog"));
  CHECK(std::memcmp(dog.data(), tgt["狗"].data(), 2 * sizeof(ad::Real)) == 0);
  const auto zebra = r.table.row(v.id("zebra"));
  const auto unk = r.table.row(text::Vocabulary::kUnk);
  CHECK(std::equal(zebra.begin(), zebra.end(), unk.begin()));
}

TEST_CASE("document assembly") {
  TranslationRecord r{"x", "q", {"A", "", "B"}, "A"};
  const auto src = assemble_translated_document(r, Language::kSrc);
  CHECK(src.text == "A B");
  CHECK(src.sentence_offsets.size() == 2);
  CHECK(src.sentence_offsets[1] == std::pair<std::size_t, std::size_t>{2, 3});
  CHECK(assemble_translated_document(r, Language::kTgt).text == "AB");
  TranslationRecord one{"y", "q", {"only one"}, ""};
  CHECK(assemble_translated_document(one, Language::kSrc).text == "only one");
}

TEST_CASE("span recovery") {
  const std::vector<std::string> words = {"a", "b", "c", "d"};
  const auto toks = text::layout_tokens(words, Language::kSrc, nullptr);
  CHECK(recover_span(toks, "b c", Language::kSrc) == TokenSpan{1, 2});
  CHECK_FALSE(recover_span(toks, "x", Language::kSrc).has_value());
  CHECK_FALSE(recover_span(toks, "", Language::kSrc).has_value());
}

TEST_CASE("span recovery agrees with brute-force enumeration") {
  std::mt19937_64 rng(2024);
  int found = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto inst = testing::random_span_instance(rng);
    const auto got = recover_span(inst.tokens, inst.answer, inst.lang);
    const auto want = testing::recover_span_oracle(inst.tokens, inst.answer, inst.lang);
    INFO("case " << i << " answer '" << inst.answer << "'");
    CHECK(got == want);
    found += want.has_value();
  }
  // The generator must exercise both outcomes.
  CHECK(found > 300);
  CHECK(found < 1000);
}

TEST_CASE("records parsing") {
  const std::string good =
      R"({"id":"a","question":"q1","sentences":["s1","s2"],"answer":"s1"})" "\n\n"
      R"({"id":"b","question":"q2","sentences":["t"],"answer":"t"})" "\n";
  const auto recs = parse_records_jsonl(good);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].sentences.size() == 2);
  CHECK_THROWS_AS(parse_records_jsonl("{\"id\":"), ParseError);
  CHECK_THROWS_AS(parse_records_jsonl(R"({"id":"a","question":"q","answer":"x"})"), SchemaError);
  CHECK_THROWS_AS(parse_records_jsonl(R"({"id":"a","question":"q","sentences":[],"answer":"x"})"), SchemaError);
  const auto path = (std::filesystem::temp_directory_path() / "xlqa_records_test.jsonl").string();
  write_records_jsonl(recs, path);
  const auto back = load_records_jsonl(path);
  CHECK(back[1].answer == "t");
  CHECK(back[0].sentences == recs[0].sentences);
  std::filesystem::remove(path);
}

TEST_CASE("train on target with records") {
  text::Dataset src;
  src.language = Language::kSrc;
  std::vector<TranslationRecord> recs;
  for (int i = 0; i < 10; ++i) {
    const std::string id = "s" + std::to_string(i);
    src.examples.push_back(src_example(id, {"cat", "dog"}, {0, 0}));
    const bool ok = i >= 3;
    recs.push_back({id, "哪", {"猫在這", "狗"}, ok ? "猫" : "鳥"});
  }
  text::LongestMatchSegmenter seg;
  const auto out = build_train_on_target(src, recs, &seg);
  CHECK(out.dataset.size() == 7);
  CHECK(out.stats.dropped == 3);
  CHECK(out.stats.recovered == 7);
  CHECK(out.dataset.language == Language::kTgt);
  for (const auto& ex : out.dataset.examples) CHECK(text::check_example(ex).empty());
  for (std::size_t i = 1; i < out.dataset.size(); ++i) CHECK(out.dataset.examples[i - 1].id < out.dataset.examples[i].id);

  auto missing = recs;
  missing.pop_back();
  CHECK_THROWS_AS(build_train_on_target(src, missing, &seg), SchemaError);
  auto extra = recs;
  extra.push_back({"zzz", "q", {"x"}, "x"});
  CHECK_THROWS_AS(build_train_on_target(src, extra, &seg), SchemaError);
  auto dup = recs;
  dup[1].id = dup[0].id;
  CHECK_THROWS_AS(build_train_on_target(src, dup, &seg), SchemaError);
}

TEST_CASE("train on target word by word") {
  text::Dataset src;
  src.language = Language::kSrc;
  src.examples.push_back(src_example("b", {"cat", "dog"}, {1, 1}));
  src.examples.push_back(src_example("a", {"dog", "cat", "cat"}, {1, 2}));
  const auto out = build_train_on_target(src, cat_lexicon());
  CHECK(out.dataset.size() == 2);
  CHECK(out.stats.dropped == 0);
  CHECK(out.dataset.examples[0].id == "a");
}

TEST_CASE("test on source") {
  text::Dataset tgt;
  tgt.language = Language::kTgt;
  std::vector<TranslationRecord> recs;
  for (int i = 0; i < 10; ++i) {
    Example ex;
    ex.id = "t" + std::to_string(i);
    ex.language = Language::kTgt;
    const std::vector<std::string> doc = {"貓", "狗"};
    ex.document_tokens = text::layout_tokens(doc, Language::kTgt, &ex.context);
    const std::vector<std::string> q = {"哪"};
    ex.question_tokens = text::layout_tokens(q, Language::kTgt, &ex.question);
    ex.answer_spans = {{0, 0}};
    ex.answer_texts = {"貓"};
    tgt.examples.push_back(ex);
    recs.push_back({ex.id, "where", {"the cat", "a dog"}, i < 4 ? "cat" : "kitty"});
  }
  const auto r = build_test_on_source(tgt, recs);
  CHECK(r.full.size() == 10);
  CHECK(r.filtered.size() == 4);
  std::size_t unanswerable = 0;
  for (const auto& ex : r.full.examples) unanswerable += !ex.answerable();
  CHECK(unanswerable == 6);
  for (auto& rec : recs) rec.answer = "cat";
  const auto all = build_test_on_source(tgt, recs);
  CHECK(all.filtered.size() == all.full.size());
  for (auto& rec : recs) rec.answer = "kitty";
  const auto none = build_test_on_source(tgt, recs);
  CHECK(none.filtered.empty());
  CHECK(none.full.size() == 10);
  CHECK(none.full.examples[0].answer_texts == std::vector<std::string>{"kitty"});
}

TEST_CASE("back-translated scoring") {
  text::Dataset gold;
  gold.language = Language::kTgt;
  Example ex;
  ex.id = "q";
  ex.language = Language::kTgt;
  ex.answer_texts = {"19世紀晚期"};
  gold.examples.push_back(ex);
  Example ex2 = ex;
  ex2.id = "r";
  gold.examples.push_back(ex2);
  eval::Predictions preds{{"q", "Late 19th century"}, {"r", "unknown phrase"}};
  const auto s = score_back_translated_predictions(preds, {{"Late 19th century", "19世紀晚期"}}, gold);
  CHECK(s.missing_map_entries == 1);
  REQUIRE(s.report.per_example.size() == 2);
  CHECK(s.report.per_example[0].em == 1.0);
  CHECK(s.report.per_example[1].em == 0.0);
  CHECK(s.report.per_example[1].f1 == 0.0);

  eval::Predictions direct{{"q", "19世紀晚期"}, {"r", "19世紀"}};
  const auto id = score_back_translated_predictions(direct, {{"19世紀晚期", "19世紀晚期"}, {"19世紀", "19世紀"}}, gold);
  const auto plain = eval::evaluate(direct, gold, Language::kTgt);
  CHECK(id.report.f1 == plain.f1);
  CHECK(id.report.exact_match == plain.exact_match);
}
