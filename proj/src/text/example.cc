#include "xlqa/text/example.h"

#include "xlqa/common/utf8.h"
#include "xlqa/eval/evalkit.h"

namespace xlqa::text {

std::string join_tokens(std::span<const std::string> tokens, Language lang) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i && lang == Language::kSrc) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string join_tokens(std::span<const Token> tokens, Language lang) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i && lang == Language::kSrc) out += ' ';
    out += tokens[i].text;
  }
  return out;
}

std::string span_text(const Example& ex, TokenSpan span) {
  return join_tokens(std::span<const Token>(ex.document_tokens)
                         .subspan(span.start, span.end - span.start + 1),
                     ex.language);
}

std::string check_example(const Example& ex) {
  if (ex.answer_texts.empty()) return "no answer texts";
  if (!ex.answer_spans.empty() && ex.answer_spans.size() != ex.answer_texts.size()) {
    return "answer spans and texts are not aligned";
  }
  const int n = static_cast<int>(ex.document_tokens.size());
  for (std::size_t i = 0; i < ex.answer_spans.size(); ++i) {
    const TokenSpan s = ex.answer_spans[i];
    if (s.start < 0 || s.start > s.end || s.end >= n) {
      return "span (" + std::to_string(s.start) + "," + std::to_string(s.end) +
             ") outside document of " + std::to_string(n) + " tokens";
    }
    const std::string joined = eval::normalize_answer(span_text(ex, s), ex.language);
    const std::string gold = eval::normalize_answer(ex.answer_texts[i], ex.language);
    if (joined.find(gold) == std::string::npos) {
      return "span text '" + span_text(ex, s) + "' does not cover answer '" +
             ex.answer_texts[i] + "'";
    }
  }
  return {};
}

std::vector<Token> layout_tokens(std::span<const std::string> words, Language lang,
                                 std::string* joined) {
  std::vector<Token> out;
  out.reserve(words.size());
  std::string text;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i && lang == Language::kSrc) {
      text += ' ';
      ++pos;
    }
    const std::size_t len = utf8::decode(words[i]).size();
    out.push_back(Token{words[i], pos, pos + len});
    text += words[i];
    pos += len;
  }
  if (joined) *joined = std::move(text);
  return out;
}

}  // namespace xlqa::text
