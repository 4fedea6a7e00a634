#include "xlqa/text/tokenizer.h"

#include <algorithm>

#include "xlqa/common/utf8.h"

namespace xlqa::text {

void LongestMatchSegmenter::add(std::string_view word) {
  std::u32string w = utf8::decode(word);
  if (w.empty()) return;
  max_len_ = std::max(max_len_, w.size());
  words_.insert(std::move(w));
}

std::vector<Token> LongestMatchSegmenter::segment(std::u32string_view text) const {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (utf8::is_space(text[i])) {
      ++i;
      continue;
    }
    std::size_t best = 1;
    const std::size_t limit = std::min(max_len_, text.size() - i);
    for (std::size_t len = limit; len > 1; --len) {
      const auto piece = text.substr(i, len);
      if (std::any_of(piece.begin(), piece.end(), utf8::is_space)) continue;
      if (words_.count(std::u32string(piece))) {
        best = len;
        break;
      }
    }
    out.push_back(Token{utf8::encode(text.substr(i, best)), i, i + best});
    i += best;
  }
  return out;
}

namespace {

std::vector<Token> tokenize_src(const std::u32string& cps) {
  std::vector<Token> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    out.push_back(Token{utf8::encode(std::u32string_view(cps).substr(b, e - b)), b, e});
  };
  std::size_t i = 0;
  while (i < cps.size()) {
    if (utf8::is_space(cps[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && !utf8::is_space(cps[j])) ++j;
    std::size_t b = i, e = j;
    while (b < e && utf8::is_unicode_punct(cps[b])) {
      emit(b, b + 1);
      ++b;
    }
    std::size_t tail = e;
    while (tail > b && utf8::is_unicode_punct(cps[tail - 1])) --tail;
    if (tail > b) emit(b, tail);
    for (std::size_t k = tail; k < e; ++k) emit(k, k + 1);
    i = j;
  }
  return out;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text, Language lang, const Segmenter* segmenter) {
  const std::u32string cps = utf8::decode(text);
  if (lang == Language::kSrc) return tokenize_src(cps);
  if (segmenter) return segmenter->segment(cps);
  static const LongestMatchSegmenter kPerCharacter;
  return kPerCharacter.segment(cps);
}

}  // namespace xlqa::text
