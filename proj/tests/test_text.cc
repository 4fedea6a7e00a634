#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "xlqa/common/error.h"
#include "xlqa/common/utf8.h"
#include "xlqa/text/batch.h"
#include "xlqa/text/embedding.h"
#include "xlqa/text/example.h"
#include "xlqa/text/squad.h"
#include "xlqa/text/tokenizer.h"
#include "xlqa/text/vocab.h"

using namespace xlqa;
using namespace xlqa::text;

namespace {

std::vector<std::string> texts(const std::vector<Token>& toks) {
  std::vector<std::string> out;
  for (const auto& t : toks) out.push_back(t.text);
  return out;
}

std::string squad_doc(const std::string& context, const std::string& answer, long start) {
  return R"({"version":"1.1","data":[{"title":"t","paragraphs":[{"context":")" + context +
         R"(","qas":[{"id":"q1","question":"what?","answers":[{"text":")" + answer +
         R"(","answer_start":)" + std::to_string(start) + "}]}]}]}]}";
}

Example synthetic_example(std::size_t doc_len, std::mt19937_64& rng, int id) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < doc_len; ++i) words.push_back("w" + std::to_string(rng() % 7));
  Example ex;
  ex.id = "e" + std::to_string(id);
  ex.language = Language::kSrc;
  ex.document_tokens = layout_tokens(words, Language::kSrc, &ex.context);
  const std::vector<std::string> q = {"what", "w" + std::to_string(rng() % 7)};
  ex.question_tokens = layout_tokens(q, Language::kSrc, &ex.question);
  const int s = static_cast<int>(rng() % doc_len);
  ex.answer_spans = {{s, s}};
  ex.answer_texts = {words[static_cast<std::size_t>(s)]};
  return ex;
}

}  // namespace

TEST_CASE("utf8 round trip and replacement") {
  const std::string s = "19世紀晚期";
  CHECK(utf8::decode(s).size() == 6);
  CHECK(utf8::encode(utf8::decode(s)) == s);
  CHECK(utf8::decode("\xff" "a") == std::u32string{0xFFFD, U'a'});
  CHECK(utf8::is_unicode_punct(U'。'));
  CHECK(utf8::is_ascii_punct(U'.'));
  CHECK_FALSE(utf8::is_ascii_punct(U'a'));
}

TEST_CASE("tokenizer") {
  CHECK(texts(tokenize("late 19th century", Language::kSrc)) ==
        std::vector<std::string>{"late", "19th", "century"});
  auto t = tokenize("  (cat), dog.", Language::kSrc);
  CHECK(texts(t) == std::vector<std::string>{"(", "cat", ")", ",", "dog", "."});
  CHECK(t[1].begin == 3);
  CHECK(t[1].end == 6);
  LongestMatchSegmenter with(std::vector<std::string>{"ab"});
  LongestMatchSegmenter without;
  CHECK(texts(tokenize("ab", Language::kTgt, &with)) == std::vector<std::string>{"ab"});
  CHECK(texts(tokenize("ab", Language::kTgt, &without)) == std::vector<std::string>{"a", "b"});
  CHECK(texts(tokenize("晚 期", Language::kTgt)) == std::vector<std::string>{"晚", "期"});
}

TEST_CASE("segmenter partitions non-space code points") {
  std::mt19937_64 rng(9);
  LongestMatchSegmenter seg(std::vector<std::string>{"ab", "abc", "ca", "b"});
  for (int trial = 0; trial < 200; ++trial) {
    std::string s;
    const std::size_t n = rng() % 12;
    for (std::size_t i = 0; i < n; ++i) s += "abc "[rng() % 4];
    const auto toks = tokenize(s, Language::kTgt, &seg);
    const std::u32string u = utf8::decode(s);
    std::u32string rebuilt, expect;
    for (const auto& tk : toks) {
      CHECK(utf8::encode(u.substr(tk.begin, tk.end - tk.begin)) == tk.text);
      rebuilt += utf8::decode(tk.text);
    }
    for (char32_t c : u)
      if (!utf8::is_space(c)) expect += c;
    CHECK(rebuilt == expect);
  }
}

TEST_CASE("vocabulary") {
  Vocabulary v;
  CHECK(v.size() == 2);
  CHECK(v.add("cat") == 2);
  CHECK(v.add("cat") == 2);
  CHECK(v.id("dog") == Vocabulary::kUnk);
  CHECK(v.entry(2) == "cat");
  CHECK(v.words() == std::vector<std::string>{"cat"});
  const auto path = std::filesystem::temp_directory_path() / "xlqa_vocab_test.txt";
  v.add("晚");
  v.save(path.string());
  CHECK(Vocabulary::load(path.string()) == v);
  std::filesystem::remove(path);
}

TEST_CASE("squad loading") {
  SUBCASE("answer at offset 0") {
    auto d = parse_squad_json(squad_doc("late 19th century art", "late 19th", 0), Language::kSrc);
    REQUIRE(d.size() == 1);
    CHECK(d.examples[0].answer_spans[0] == TokenSpan{0, 1});
    CHECK(check_example(d.examples[0]).empty());
  }
  SUBCASE("table-1 answer in the unsegmented language") {
    const std::string ctx = "起源於19世紀晚期的運動";
    LongestMatchSegmenter seg(std::vector<std::string>{"起源", "19", "世紀", "晚期", "運動"});
    auto d = parse_squad_json(squad_doc(ctx, "19世紀晚期", 3), Language::kTgt, &seg);
    REQUIRE(d.size() == 1);
    const auto& ex = d.examples[0];
    CHECK(span_text(ex, ex.answer_spans[0]) == "19世紀晚期");
    CHECK(ex.answer_spans[0] == TokenSpan{2, 4});
  }
  SUBCASE("offset outside the document drops the example") {
    auto d = parse_squad_json(squad_doc("a b c", "b", 40), Language::kSrc);
    CHECK(d.size() == 0);
    CHECK(d.dropped == 1);
  }
  SUBCASE("partial-token answer expands to covering tokens") {
    auto d = parse_squad_json(squad_doc("the centuries passed", "century", 4), Language::kSrc);
    CHECK(d.size() + d.dropped == 1);
  }
  CHECK_THROWS_AS(parse_squad_json("{not json", Language::kSrc), ParseError);
  CHECK_THROWS_AS(parse_squad_json(R"({"data":[{"paragraphs":[{"qas":[]}]}]})", Language::kSrc), SchemaError);
}

TEST_CASE("char range to span") {
  auto toks = tokenize("late 19th century", Language::kSrc);
  CHECK(char_range_to_span(toks, 5, 9) == TokenSpan{1, 1});
  CHECK(char_range_to_span(toks, 6, 12) == TokenSpan{1, 2});
  CHECK_FALSE(char_range_to_span(toks, 30, 31).has_value());
}

TEST_CASE("squad write then read round trip") {
  std::mt19937_64 rng(2);
  Dataset d;
  for (int i = 0; i < 5; ++i) d.examples.push_back(synthetic_example(6, rng, i));
  auto back = parse_squad_json(to_squad_json(d), Language::kSrc);
  REQUIRE(back.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(back.examples[i].id == d.examples[i].id);
    CHECK(back.examples[i].document_tokens == d.examples[i].document_tokens);
    CHECK(back.examples[i].answer_spans == d.examples[i].answer_spans);
  }
}

TEST_CASE("length filter boundary") {
  std::mt19937_64 rng(3);
  Dataset d;
  d.examples.push_back(synthetic_example(601, rng, 0));
  d.examples.push_back(synthetic_example(600, rng, 1));
  auto f = filter_by_length(d, 600);
  REQUIRE(f.size() == 1);
  CHECK(f.examples[0].id == "e1");
  CHECK(filter_by_length(Dataset{}, 600).empty());
  CHECK_THROWS(filter_by_length(d, 0));
}

TEST_CASE("batching") {
  std::mt19937_64 rng(4);
  Dataset d;
  for (int i = 0; i < 50; ++i) d.examples.push_back(synthetic_example(3 + rng() % 5, rng, i));
  const auto words = build_word_vocabulary(d);
  const auto chars = build_char_vocabulary(d);
  const auto enc = encode_dataset(d, words, chars);
  const auto batches = make_batches(enc, 24, 11);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size() == 24);
  CHECK(batches[1].size() == 24);
  CHECK(batches[2].size() == 2);
  std::multiset<std::size_t> seen;
  for (const auto& b : batches)
    for (auto i : b.example_indices) seen.insert(i);
  CHECK(seen.size() == 50);
  CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 50);
  const auto again = make_batches(enc, 24, 11);
  for (std::size_t i = 0; i < 3; ++i) CHECK(again[i].example_indices == batches[i].example_indices);
  for (const auto& b : batches) {
    for (std::size_t e = 0; e < b.size(); ++e) {
      const auto& m = b.document.masks[e];
      std::size_t ones = 0;
      for (std::size_t p = 0; p < m.size(); ++p) {
        ones += m[p] != 0;
        CHECK((m[p] != 0) == (b.document.words[e * b.document.length + p] != Vocabulary::kPad));
      }
      CHECK(ones == enc.examples[b.example_indices[e]].document.words.size());
    }
  }
}

TEST_CASE("padded masks for lengths 3 and 5") {
  std::mt19937_64 rng(5);
  Dataset d;
  d.examples.push_back(synthetic_example(3, rng, 0));
  d.examples.push_back(synthetic_example(5, rng, 1));
  const auto enc = encode_dataset(d, build_word_vocabulary(d), build_char_vocabulary(d));
  const std::vector<std::size_t> idx = {0, 1};
  const auto b = make_batch(enc, idx);
  CHECK(b.document.length == 5);
  CHECK(b.document.masks[0] == ad::Mask{1, 1, 1, 0, 0});
  CHECK(b.document.masks[1] == ad::Mask{1, 1, 1, 1, 1});
}

TEST_CASE("embedding table build and coverage") {
  Vocabulary v;
  for (auto w : {"a", "b", "c", "d", "e"}) v.add(w);
  VectorMap vm;
  for (auto w : {"a", "b", "c", "d", "e"}) vm[w] = {1.0, 2.0};
  auto full = build_embedding_table(v, vm, 2);
  CHECK(full.coverage == 1.0);
  vm.erase("c");
  auto part = build_embedding_table(v, vm, 2);
  CHECK(part.coverage == doctest::Approx(0.8));
  const auto row = part.table.row(v.id("c"));
  CHECK(row[0] == 0.0);
  CHECK(part.table.row(Vocabulary::kUnk)[0] == 0.0);
  CHECK(part.table.row(v.id("a"))[1] == 2.0);

  const auto path = (std::filesystem::temp_directory_path() / "xlqa_vec_test.txt").string();
  write_embedding_file(vm, {"a", "b"}, path);
  std::size_t dim = 0;
  auto back = read_embedding_file(path, &dim);
  CHECK(dim == 2);
  CHECK(back.size() == 2);
  CHECK(back["b"] == std::vector<ad::Real>{1.0, 2.0});
  std::filesystem::remove(path);
}

TEST_CASE("example invariants hold on random corpora") {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 300; ++i) {
    const auto ex = synthetic_example(1 + rng() % 20, rng, i);
    CHECK(check_example(ex).empty());
    Example broken = ex;
    broken.answer_spans[0].end = static_cast<int>(ex.document_tokens.size());
    CHECK_FALSE(check_example(broken).empty());
  }
}
