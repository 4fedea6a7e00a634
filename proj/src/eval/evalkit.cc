#include "xlqa/eval/evalkit.h"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "xlqa/common/error.h"
#include "xlqa/common/utf8.h"
#include "xlqa/text/example.h"

namespace xlqa::eval {

namespace {

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string normalize_src(std::string_view text) {
  std::u32string kept;
  for (char32_t cp : utf8::decode(text)) {
    if (utf8::is_ascii_punct(cp)) continue;
    kept.push_back(utf8::is_space(cp) ? U' ' : utf8::ascii_lower(cp));
  }
  std::string out;
  for (const std::string& w : split_ws(utf8::encode(kept))) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string normalize_tgt(std::string_view text) {
  std::u32string kept;
  for (char32_t cp : utf8::decode(text)) {
    if (utf8::is_unicode_punct(cp) || utf8::is_space(cp)) continue;
    kept.push_back(cp);
  }
  return utf8::encode(kept);
}

std::vector<std::string> units(const std::string& normalized, Language lang) {
  if (lang == Language::kSrc) return split_ws(normalized);
  std::vector<std::string> out;
  for (char32_t cp : utf8::decode(normalized)) out.push_back(utf8::encode(cp));
  return out;
}

}  // namespace

std::string normalize_answer(std::string_view text, Language lang) {
  return lang == Language::kSrc ? normalize_src(text) : normalize_tgt(text);
}

F1Parts f1_parts(std::string_view prediction, std::string_view gold, Language lang) {
  const auto pred_units = units(normalize_answer(prediction, lang), lang);
  const auto gold_units = units(normalize_answer(gold, lang), lang);
  F1Parts parts;
  if (pred_units.empty() || gold_units.empty()) {
    if (pred_units.empty() && gold_units.empty()) parts = {1.0, 1.0, 1.0};
    return parts;
  }
  std::unordered_map<std::string, int> counts;
  for (const auto& u : gold_units) ++counts[u];
  int same = 0;
  for (const auto& u : pred_units) {
    auto it = counts.find(u);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++same;
    }
  }
  if (same == 0) return parts;
  parts.precision = static_cast<double>(same) / static_cast<double>(pred_units.size());
  parts.recall = static_cast<double>(same) / static_cast<double>(gold_units.size());
  parts.f1 = 2.0 * parts.precision * parts.recall / (parts.precision + parts.recall);
  return parts;
}

double f1_score(std::string_view prediction, std::string_view gold, Language lang) {
  return f1_parts(prediction, gold, lang).f1;
}

bool exact_match(std::string_view prediction, std::string_view gold, Language lang) {
  return normalize_answer(prediction, lang) == normalize_answer(gold, lang);
}

EvalReport evaluate(const Predictions& predictions, const std::vector<GoldEntry>& gold,
                    Language lang) {
  EvalReport report;
  double em_sum = 0.0, f1_sum = 0.0;
  for (const GoldEntry& g : gold) {
    ExampleScore s;
    s.id = g.id;
    auto it = predictions.find(g.id);
    if (it == predictions.end()) {
      s.missing = true;
      ++report.missing;
    } else {
      for (const std::string& answer : g.answers) {
        s.em = std::max(s.em, exact_match(it->second, answer, lang) ? 1.0 : 0.0);
        s.f1 = std::max(s.f1, f1_score(it->second, answer, lang));
      }
      ++report.scored;
    }
    em_sum += s.em;
    f1_sum += s.f1;
    report.per_example.push_back(std::move(s));
  }
  if (!gold.empty()) {
    report.exact_match = 100.0 * em_sum / static_cast<double>(gold.size());
    report.f1 = 100.0 * f1_sum / static_cast<double>(gold.size());
  }
  return report;
}

EvalReport evaluate(const Predictions& predictions, const text::Dataset& dataset,
                    Language lang) {
  std::vector<GoldEntry> gold;
  gold.reserve(dataset.examples.size());
  for (const auto& ex : dataset.examples) gold.push_back({ex.id, ex.answer_texts});
  return evaluate(predictions, gold, lang);
}

Predictions read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open predictions file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.is_object()) throw SchemaError(path + ": predictions must be a JSON object");
  Predictions out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_string()) {
      throw SchemaError(path + ": prediction for '" + it.key() + "' is not a string");
    }
    out[it.key()] = it.value().get<std::string>();
  }
  return out;
}

void write_predictions(const Predictions& predictions, const std::string& path) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, text] : predictions) j[id] = text;
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["exact_match"] = report.exact_match;
  j["f1"] = report.f1;
  j["scored"] = report.scored;
  j["missing"] = report.missing;
  j["per_example"] = nlohmann::json::array();
  for (const auto& s : report.per_example) {
    j["per_example"].push_back({{"id", s.id}, {"em", s.em}, {"f1", s.f1}});
  }
  return j.dump(2);
}

void write_report(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << report_to_json(report) << '\n';
}

}  // namespace xlqa::eval
