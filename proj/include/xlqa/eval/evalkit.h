#ifndef XLQA_EVAL_EVALKIT_H_
#define XLQA_EVAL_EVALKIT_H_

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "xlqa/common/language.h"

namespace xlqa::text {
struct Dataset;
}

// SQuAD-compatible exact match and F1. Scoring units are characters for the
// target language and whitespace tokens for the source language.
namespace xlqa::eval {

// src: lowercase, drop punctuation, drop articles (a/an/the), collapse
// whitespace. tgt: drop punctuation and all whitespace.
std::string normalize_answer(std::string_view text, Language lang);

struct F1Parts {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Multiset overlap on scoring units of the normalized strings. Both empty
// scores 1; exactly one empty scores 0.
F1Parts f1_parts(std::string_view prediction, std::string_view gold, Language lang);
double f1_score(std::string_view prediction, std::string_view gold, Language lang);
bool exact_match(std::string_view prediction, std::string_view gold, Language lang);

struct ExampleScore {
  std::string id;
  double em = 0.0;
  double f1 = 0.0;
  bool missing = false;
};

struct EvalReport {
  std::vector<ExampleScore> per_example;
  double exact_match = 0.0;  // mean EM * 100
  double f1 = 0.0;           // mean F1 * 100
  std::size_t scored = 0;
  std::size_t missing = 0;
};

using Predictions = std::map<std::string, std::string>;

struct GoldEntry {
  std::string id;
  std::vector<std::string> answers;
};

// Per example, max over the gold answers; a missing prediction scores 0 and
// is counted.
EvalReport evaluate(const Predictions& predictions, const std::vector<GoldEntry>& gold,
                    Language lang);
EvalReport evaluate(const Predictions& predictions, const text::Dataset& dataset,
                    Language lang);

// JSON object {id: answer}.
Predictions read_predictions(const std::string& path);
void write_predictions(const Predictions& predictions, const std::string& path);
// JSON {exact_match, f1, scored, missing, per_example: [{id, em, f1}]}.
std::string report_to_json(const EvalReport& report);
void write_report(const EvalReport& report, const std::string& path);

}  // namespace xlqa::eval

#endif  // XLQA_EVAL_EVALKIT_H_
