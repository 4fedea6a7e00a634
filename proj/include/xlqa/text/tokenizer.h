#ifndef XLQA_TEXT_TOKENIZER_H_
#define XLQA_TEXT_TOKENIZER_H_

#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "xlqa/common/language.h"
#include "xlqa/text/example.h"

namespace xlqa::text {

// Word segmenter for the unsegmented language.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  // Tokens must partition the non-whitespace code points of `text`.
  virtual std::vector<Token> segment(std::u32string_view text) const = 0;
};

// Greedy longest match against a word list, falling back to one code point.
class LongestMatchSegmenter : public Segmenter {
 public:
  LongestMatchSegmenter() = default;
  template <typename Range>
  explicit LongestMatchSegmenter(const Range& words) {
    for (const auto& w : words) add(w);
  }
  void add(std::string_view word);
  std::vector<Token> segment(std::u32string_view text) const override;

 private:
  std::unordered_set<std::u32string> words_;
  std::size_t max_len_ = 1;
};

// src: whitespace split, then leading/trailing punctuation split off one
// character at a time. tgt: `segmenter`, or per-character when null.
std::vector<Token> tokenize(std::string_view text, Language lang,
                            const Segmenter* segmenter = nullptr);

}  // namespace xlqa::text

#endif  // XLQA_TEXT_TOKENIZER_H_
