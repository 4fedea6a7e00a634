#include "xlqa/xling/pipeline.h"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "xlqa/common/error.h"
#include "xlqa/common/utf8.h"

namespace xlqa::xling {

using text::Dataset;
using text::Example;
using text::Token;
using text::TokenSpan;

namespace {

std::vector<std::string> split_spaces(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char32_t cp : utf8::decode(s)) {
    if (utf8::is_space(cp)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += utf8::encode(cp);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Translates a token list; first_index[i] / last_index[i] give the output
// range of input token i.
std::vector<std::string> translate_tokens(const std::vector<Token>& tokens, const BilingualLexicon& lexicon,
                                          Direction dir, std::size_t& oov,
                                          std::vector<int>* first_index, std::vector<int>* last_index) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) {
    if (first_index) first_index->push_back(static_cast<int>(out.size()));
    const std::string* image = lexicon.lookup(t.text, dir);
    std::vector<std::string> parts;
    if (image) parts = split_spaces(*image);
    if (parts.empty()) {
      if (!image) ++oov;
      out.push_back(t.text);
    } else {
      for (auto& p : parts) out.push_back(std::move(p));
    }
    if (last_index) last_index->push_back(static_cast<int>(out.size()) - 1);
  }
  return out;
}

void sort_by_id(std::vector<Example>& examples) {
  std::stable_sort(examples.begin(), examples.end(),
                   [](const Example& a, const Example& b) { return a.id < b.id; });
}

std::unordered_map<std::string, const TranslationRecord*> index_records(
    const std::vector<TranslationRecord>& records, const Dataset& data) {
  std::unordered_map<std::string, const TranslationRecord*> by_id;
  for (const auto& r : records) {
    if (!by_id.emplace(r.id, &r).second) throw SchemaError("duplicate translation record id '" + r.id + "'");
  }
  std::unordered_map<std::string, bool> seen;
  for (const Example& ex : data.examples) {
    if (!by_id.count(ex.id)) throw SchemaError("no translation record for example id '" + ex.id + "'");
    seen[ex.id] = true;
  }
  for (const auto& r : records) {
    if (!seen.count(r.id)) throw SchemaError("translation record id '" + r.id + "' matches no example");
  }
  return by_id;
}

struct Translated {
  Example example;
  bool recovered = false;
};

Translated translate_with_record(const Example& ex, const TranslationRecord& rec, Language out_lang,
                                 const text::Segmenter* segmenter) {
  Translated t;
  Example& out = t.example;
  out.id = ex.id;
  out.language = out_lang;
  out.question = rec.question;
  out.question_tokens = text::tokenize(rec.question, out_lang, segmenter);
  out.context = assemble_translated_document(rec, out_lang).text;
  out.document_tokens = text::tokenize(out.context, out_lang, segmenter);
  out.answer_texts = {rec.answer};
  if (auto span = recover_span(out.document_tokens, rec.answer, out_lang)) {
    out.answer_spans = {*span};
    t.recovered = true;
  }
  return t;
}

}  // namespace

WbwResult word_by_word_translate(const Example& example, const BilingualLexicon& lexicon,
                                 Direction direction) {
  if (lexicon.empty()) throw ConfigError("word-by-word translation needs a nonempty lexicon");
  const Language in_lang = direction == Direction::kSrcToTgt ? Language::kSrc : Language::kTgt;
  if (example.language != in_lang) {
    throw ContractError("example '" + example.id + "' is not in the direction's input language");
  }
  const Language out_lang = other(in_lang);
  WbwResult r;
  Example& out = r.example;
  out.id = example.id;
  out.language = out_lang;

  const auto q_words = translate_tokens(example.question_tokens, lexicon, direction, r.oov, nullptr, nullptr);
  out.question_tokens = text::layout_tokens(q_words, out_lang, &out.question);

  std::vector<int> first, last;
  const auto d_words = translate_tokens(example.document_tokens, lexicon, direction, r.oov, &first, &last);
  out.document_tokens = text::layout_tokens(d_words, out_lang, &out.context);
  if (d_words.size() == example.document_tokens.size()) {
    // One-to-one images: indices carry over unchanged.
    out.answer_spans = example.answer_spans;
  } else {
    for (const TokenSpan& s : example.answer_spans) out.answer_spans.push_back({first[s.start], last[s.end]});
  }
  if (example.answer_spans.empty()) {
    // No span to carry the answer through; translate its words directly.
    for (const std::string& a : example.answer_texts) {
      std::vector<Token> toks;
      for (auto& w : split_spaces(a)) toks.push_back(Token{w, 0, 0});
      std::size_t ignored = 0;
      out.answer_texts.push_back(
          text::join_tokens(translate_tokens(toks, lexicon, direction, ignored, nullptr, nullptr), out_lang));
    }
  } else {
    for (const TokenSpan& s : out.answer_spans) out.answer_texts.push_back(text::span_text(out, s));
  }
  return r;
}

RemapResult remap_shared_embeddings(const text::Vocabulary& src_vocab, const BilingualLexicon& lexicon,
                                    const text::VectorMap& tgt_vectors, std::size_t dim) {
  text::VectorMap src_vectors;
  for (const std::string& w : src_vocab.words()) {
    const std::string* image = lexicon.lookup(w, Direction::kSrcToTgt);
    if (!image) continue;
    auto it = tgt_vectors.find(*image);
    if (it != tgt_vectors.end()) src_vectors.emplace(w, it->second);
  }
  auto build = text::build_embedding_table(src_vocab, src_vectors, dim);
  RemapResult r;
  r.table = std::move(build.table);
  r.mapped = build.found;
  r.coverage = build.coverage;
  return r;
}

std::vector<TranslationRecord> parse_records_jsonl(const std::string& text, const std::string& source_name) {
  std::vector<TranslationRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source_name + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    try {
      TranslationRecord r;
      r.id = j.at("id").get<std::string>();
      r.question = j.at("question").get<std::string>();
      r.sentences = j.at("sentences").get<std::vector<std::string>>();
      r.answer = j.at("answer").get<std::string>();
      if (r.sentences.empty()) throw SchemaError(where + ": empty sentence list");
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(where + ": " + e.what());
    }
  }
  return out;
}

std::vector<TranslationRecord> load_records_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_records_jsonl(ss.str(), path);
}

void write_records_jsonl(const std::vector<TranslationRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  for (const auto& r : records) {
    nlohmann::json j = {{"id", r.id}, {"question", r.question}, {"sentences", r.sentences}, {"answer", r.answer}};
    out << j.dump() << '\n';
  }
}

AssembledDocument assemble_translated_document(const TranslationRecord& record, Language lang) {
  AssembledDocument doc;
  std::size_t pos = 0;
  for (const std::string& s : record.sentences) {
    const std::u32string cps = utf8::decode(s);
    if (std::all_of(cps.begin(), cps.end(), utf8::is_space)) continue;
    if (!doc.text.empty() && lang == Language::kSrc) {
      doc.text += ' ';
      ++pos;
    }
    doc.sentence_offsets.emplace_back(pos, pos + cps.size());
    doc.text += s;
    pos += cps.size();
  }
  return doc;
}

std::optional<TokenSpan> recover_span(const std::vector<Token>& tokens, const std::string& answer,
                                      Language lang) {
  const std::string target = eval::normalize_answer(answer, lang);
  if (target.empty()) return std::nullopt;
  // Normalization distributes over the joining rule, so spans can be grown
  // one normalized token at a time.
  std::vector<std::string> norm;
  norm.reserve(tokens.size());
  for (const Token& t : tokens) norm.push_back(eval::normalize_answer(t.text, lang));
  const std::string sep = lang == Language::kSrc ? " " : "";
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (norm[i].empty() || target.compare(0, norm[i].size(), norm[i]) != 0) continue;
    std::string acc;
    for (std::size_t j = i; j < tokens.size(); ++j) {
      if (!norm[j].empty()) {
        if (!acc.empty()) acc += sep;
        acc += norm[j];
        if (acc.size() > target.size() || target.compare(0, acc.size(), acc) != 0) break;
        if (acc.size() == target.size()) return TokenSpan{static_cast<int>(i), static_cast<int>(j)};
      }
    }
  }
  return std::nullopt;
}

TrainOnTarget build_train_on_target(const Dataset& src, const std::vector<TranslationRecord>& records,
                                    const text::Segmenter* tgt_segmenter) {
  if (src.language != Language::kSrc) throw ContractError("train-on-target expects a source-language dataset");
  const auto by_id = index_records(records, src);
  TrainOnTarget r;
  r.dataset.language = Language::kTgt;
  for (const Example& ex : src.examples) {
    ++r.stats.total;
    Translated t = translate_with_record(ex, *by_id.at(ex.id), Language::kTgt, tgt_segmenter);
    if (t.recovered) {
      ++r.stats.recovered;
      r.dataset.examples.push_back(std::move(t.example));
    } else {
      ++r.stats.dropped;
    }
  }
  r.dataset.dropped = r.stats.dropped;
  sort_by_id(r.dataset.examples);
  return r;
}

TrainOnTarget build_train_on_target(const Dataset& src, const BilingualLexicon& lexicon) {
  if (src.language != Language::kSrc) throw ContractError("train-on-target expects a source-language dataset");
  TrainOnTarget r;
  r.dataset.language = Language::kTgt;
  for (const Example& ex : src.examples) {
    ++r.stats.total;
    WbwResult w = word_by_word_translate(ex, lexicon, Direction::kSrcToTgt);
    r.stats.oov += w.oov;
    if (w.example.answerable()) {
      ++r.stats.recovered;
      r.dataset.examples.push_back(std::move(w.example));
    } else {
      ++r.stats.dropped;
    }
  }
  r.dataset.dropped = r.stats.dropped;
  sort_by_id(r.dataset.examples);
  return r;
}

TestOnSource build_test_on_source(const Dataset& tgt, const std::vector<TranslationRecord>& records) {
  if (tgt.language != Language::kTgt) throw ContractError("test-on-source expects a target-language dataset");
  const auto by_id = index_records(records, tgt);
  TestOnSource r;
  r.full.language = Language::kSrc;
  r.filtered.language = Language::kSrc;
  for (const Example& ex : tgt.examples) {
    ++r.stats.total;
    Translated t = translate_with_record(ex, *by_id.at(ex.id), Language::kSrc, nullptr);
    if (t.recovered) {
      ++r.stats.recovered;
      r.filtered.examples.push_back(t.example);
    } else {
      ++r.stats.dropped;
    }
    r.full.examples.push_back(std::move(t.example));
  }
  r.filtered.dropped = r.stats.dropped;
  sort_by_id(r.full.examples);
  sort_by_id(r.filtered.examples);
  return r;
}

BackTranslatedScore score_back_translated_predictions(const eval::Predictions& predictions,
                                                      const std::map<std::string, std::string>& back_translation,
                                                      const Dataset& gold) {
  BackTranslatedScore out;
  eval::Predictions mapped;
  for (const auto& [id, text] : predictions) {
    auto it = back_translation.find(text);
    if (it == back_translation.end()) {
      ++out.missing_map_entries;
      mapped[id] = "";
    } else {
      mapped[id] = it->second;
    }
  }
  if (out.missing_map_entries) {
    std::clog << "warning: " << out.missing_map_entries << " prediction(s) had no back-translation\n";
  }
  out.report = eval::evaluate(mapped, gold, gold.language);
  return out;
}

std::map<std::string, std::string> load_back_translation_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.is_object()) throw SchemaError(path + ": expected a JSON object");
  std::map<std::string, std::string> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_string()) throw SchemaError(path + ": value of '" + it.key() + "' is not a string");
    out[it.key()] = it.value().get<std::string>();
  }
  return out;
}

}  // namespace xlqa::xling
