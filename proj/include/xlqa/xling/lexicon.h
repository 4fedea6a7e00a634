#ifndef XLQA_XLING_LEXICON_H_
#define XLQA_XLING_LEXICON_H_

#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace xlqa::xling {

enum class Direction { kSrcToTgt, kTgtToSrc };

Direction parse_direction(std::string_view name);  // "src2tgt" | "tgt2src"

// Word-by-word dictionary w -> w'. The first mapping of a key wins, in both
// directions.
class BilingualLexicon {
 public:
  // Returns false when `src` (or, for the reverse map, `tgt`) was already
  // present; the earlier mapping is kept.
  bool add(std::string_view src, std::string_view tgt);

  const std::string* lookup(std::string_view word, Direction dir) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  // Insertion order.
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  // UTF-8 TSV, "src_word<TAB>tgt_word".
  static BilingualLexicon load_tsv(const std::string& path);
  void save_tsv(const std::string& path) const;

 private:
  std::unordered_map<std::string, std::string> forward_;
  std::unordered_map<std::string, std::string> reverse_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace xlqa::xling

#endif  // XLQA_XLING_LEXICON_H_
