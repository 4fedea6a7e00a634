#ifndef XLQA_TEXT_VOCAB_H_
#define XLQA_TEXT_VOCAB_H_

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xlqa/text/example.h"

namespace xlqa::text {

// Word (or character) vocabulary. Ids 0 and 1 are reserved for padding and
// unknown entries; every other id maps to exactly one entry.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary();

  int add(std::string_view entry);
  bool contains(std::string_view entry) const;
  // kUnk when absent.
  int id(std::string_view entry) const;
  const std::string& entry(int id) const;
  std::size_t size() const { return entries_.size(); }
  // Non-special entries in id order.
  std::vector<std::string> words() const;

  // One entry per line, UTF-8, specials excluded.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  bool operator==(const Vocabulary& other) const { return entries_ == other.entries_; }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, int> index_;
};

// Every question and document token, in order of first appearance.
Vocabulary build_word_vocabulary(const Dataset& dataset);
void extend_word_vocabulary(Vocabulary& vocab, const Dataset& dataset);
// Every code point of every token.
Vocabulary build_char_vocabulary(const Dataset& dataset);
void extend_char_vocabulary(Vocabulary& vocab, const Dataset& dataset);

}  // namespace xlqa::text

#endif  // XLQA_TEXT_VOCAB_H_
