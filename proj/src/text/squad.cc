#include "xlqa/text/squad.h"

#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "xlqa/common/error.h"
#include "xlqa/common/utf8.h"

namespace xlqa::text {

using nlohmann::json;

std::optional<TokenSpan> char_range_to_span(const std::vector<Token>& tokens,
                                            std::size_t char_begin, std::size_t char_end) {
  int start = -1, end = -1;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].end <= char_begin || tokens[i].begin >= char_end) continue;
    if (start < 0) start = static_cast<int>(i);
    end = static_cast<int>(i);
  }
  if (start < 0) return std::nullopt;
  return TokenSpan{start, end};
}

Example make_example(std::string id, Language lang, std::string question, std::string context,
                     const std::vector<std::pair<std::string, std::size_t>>& answers,
                     const Segmenter* segmenter, bool* ok) {
  Example ex;
  ex.id = std::move(id);
  ex.language = lang;
  ex.question_tokens = tokenize(question, lang, segmenter);
  ex.document_tokens = tokenize(context, lang, segmenter);
  const std::u32string ctx = utf8::decode(context);
  for (const auto& [text, start] : answers) {
    const std::u32string ans = utf8::decode(text);
    if (ans.empty() || start + ans.size() > ctx.size()) continue;
    if (ctx.compare(start, ans.size(), ans) != 0) continue;
    auto span = char_range_to_span(ex.document_tokens, start, start + ans.size());
    if (!span) continue;
    ex.answer_texts.push_back(text);
    ex.answer_spans.push_back(*span);
  }
  ex.question = std::move(question);
  ex.context = std::move(context);
  if (ok) *ok = !ex.answer_texts.empty() && !ex.question_tokens.empty();
  return ex;
}

namespace {

const json& field(const json& obj, const char* name, const std::string& where) {
  if (!obj.is_object() || !obj.contains(name)) {
    throw SchemaError(where + ": missing field '" + name + "'");
  }
  return obj.at(name);
}

std::string string_field(const json& obj, const char* name, const std::string& where) {
  const json& v = field(obj, name, where);
  if (!v.is_string()) throw SchemaError(where + ": field '" + name + "' is not a string");
  return v.get<std::string>();
}

}  // namespace

Dataset parse_squad_json(const std::string& json_text, Language lang, const Segmenter* segmenter,
                         const std::string& source_name) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(source_name + ": " + e.what());
  }
  Dataset ds;
  ds.language = lang;
  const json& data = field(root, "data", source_name);
  if (!data.is_array()) throw SchemaError(source_name + ": 'data' is not an array");
  for (std::size_t a = 0; a < data.size(); ++a) {
    const std::string wa = source_name + ": data[" + std::to_string(a) + "]";
    const json& paragraphs = field(data[a], "paragraphs", wa);
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
      const std::string wp = wa + ".paragraphs[" + std::to_string(p) + "]";
      const std::string context = string_field(paragraphs[p], "context", wp);
      const json& qas = field(paragraphs[p], "qas", wp);
      for (std::size_t q = 0; q < qas.size(); ++q) {
        const std::string wq = wp + ".qas[" + std::to_string(q) + "]";
        const std::string question = string_field(qas[q], "question", wq);
        const std::string id = string_field(qas[q], "id", wq);
        const json& answers = field(qas[q], "answers", wq);
        std::vector<std::pair<std::string, std::size_t>> raw;
        for (std::size_t k = 0; k < answers.size(); ++k) {
          const std::string wk = wq + ".answers[" + std::to_string(k) + "]";
          const std::string text = string_field(answers[k], "text", wk);
          const json& start = field(answers[k], "answer_start", wk);
          if (!start.is_number_integer()) {
            throw SchemaError(wk + ": 'answer_start' is not an integer");
          }
          const auto s = start.get<long long>();
          if (s < 0) continue;
          raw.emplace_back(text, static_cast<std::size_t>(s));
        }
        bool ok = false;
        Example ex = make_example(id, lang, question, context, raw, segmenter, &ok);
        if (ok) {
          ds.examples.push_back(std::move(ex));
        } else {
          ++ds.dropped;
        }
      }
    }
  }
  if (ds.dropped) {
    std::clog << source_name << ": dropped " << ds.dropped
              << " example(s) whose answer could not be located\n";
  }
  return ds;
}

Dataset load_squad_json(const std::string& path, Language lang, const Segmenter* segmenter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_squad_json(buf.str(), lang, segmenter, path);
}

std::string to_squad_json(const Dataset& dataset) {
  json data = json::array();
  for (const Example& ex : dataset.examples) {
    json answers = json::array();
    for (std::size_t i = 0; i < ex.answer_texts.size(); ++i) {
      std::size_t start = 0;
      if (i < ex.answer_spans.size()) {
        start = ex.document_tokens[ex.answer_spans[i].start].begin;
        // Point at the literal answer inside the span when it is present.
        const std::u32string ctx = utf8::decode(ex.context);
        const std::u32string ans = utf8::decode(ex.answer_texts[i]);
        const std::size_t hit = ctx.find(ans, start);
        if (hit != std::u32string::npos &&
            hit < ex.document_tokens[ex.answer_spans[i].end].end) {
          start = hit;
        }
      } else {
        const std::size_t hit = utf8::decode(ex.context).find(utf8::decode(ex.answer_texts[i]));
        start = hit == std::u32string::npos ? 0 : hit;
      }
      answers.push_back({{"text", ex.answer_texts[i]}, {"answer_start", start}});
    }
    json qa = {{"question", ex.question}, {"id", ex.id}, {"answers", answers}};
    json paragraph = {{"context", ex.context}, {"qas", json::array({qa})}};
    data.push_back({{"title", ex.id}, {"paragraphs", json::array({paragraph})}});
  }
  json root = {{"version", "1.1"}, {"data", data}};
  return root.dump();
}

void write_squad_json(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << to_squad_json(dataset) << '\n';
}

Dataset filter_by_length(const Dataset& dataset, std::size_t max_doc_tokens) {
  if (max_doc_tokens < 1) throw ContractError("filter_by_length: max must be >= 1");
  Dataset out;
  out.language = dataset.language;
  out.dropped = dataset.dropped;
  for (const Example& ex : dataset.examples) {
    if (ex.document_tokens.size() <= max_doc_tokens) out.examples.push_back(ex);
  }
  return out;
}

}  // namespace xlqa::text
