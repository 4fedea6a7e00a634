#ifndef XLQA_TEXT_EXAMPLE_H_
#define XLQA_TEXT_EXAMPLE_H_

#include <span>
#include <string>
#include <vector>

#include "xlqa/common/language.h"

namespace xlqa::text {

// Offsets are Unicode code-point positions [begin, end) into the source text.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

// Inclusive token span (y1, y2).
struct TokenSpan {
  int start = 0;
  int end = 0;

  bool operator==(const TokenSpan&) const = default;
};

// One (question, document, answer) triple.
struct Example {
  std::string id;
  Language language = Language::kSrc;
  std::string question;
  std::string context;
  std::vector<Token> question_tokens;
  std::vector<Token> document_tokens;
  std::vector<std::string> answer_texts;
  // Aligned with answer_texts. Empty only for examples whose answer could
  // not be located (kept for text-only scoring, see build_test_on_source).
  std::vector<TokenSpan> answer_spans;

  bool answerable() const { return !answer_spans.empty(); }
};

struct Dataset {
  Language language = Language::kSrc;
  std::vector<Example> examples;
  // Examples rejected while loading or translating.
  std::size_t dropped = 0;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

// src joins with single spaces, tgt with nothing.
std::string join_tokens(std::span<const std::string> tokens, Language lang);
std::string join_tokens(std::span<const Token> tokens, Language lang);
std::string span_text(const Example& ex, TokenSpan span);

// Empty when every Example invariant holds; otherwise a description of the
// first violation.
std::string check_example(const Example& ex);

// Rebuilds text and offsets from a token list using the joining rule.
std::vector<Token> layout_tokens(std::span<const std::string> words, Language lang,
                                 std::string* joined);

}  // namespace xlqa::text

#endif  // XLQA_TEXT_EXAMPLE_H_
