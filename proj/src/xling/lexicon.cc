#include "xlqa/xling/lexicon.h"

#include <fstream>

#include "xlqa/common/error.h"

namespace xlqa::xling {

Direction parse_direction(std::string_view name) {
  if (name == "src2tgt") return Direction::kSrcToTgt;
  if (name == "tgt2src") return Direction::kTgtToSrc;
  throw ConfigError("unknown direction '" + std::string(name) + "' (expected src2tgt or tgt2src)");
}

bool BilingualLexicon::add(std::string_view src, std::string_view tgt) {
  if (src.empty() || tgt.empty()) throw ContractError("lexicon entries must be nonempty");
  const bool fresh = forward_.emplace(std::string(src), std::string(tgt)).second;
  if (fresh) {
    entries_.emplace_back(src, tgt);
    reverse_.emplace(std::string(tgt), std::string(src));
  }
  return fresh;
}

const std::string* BilingualLexicon::lookup(std::string_view word, Direction dir) const {
  const auto& map = dir == Direction::kSrcToTgt ? forward_ : reverse_;
  auto it = map.find(std::string(word));
  return it == map.end() ? nullptr : &it->second;
}

BilingualLexicon BilingualLexicon::load_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open lexicon " + path);
  BilingualLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected src<TAB>tgt");
    }
    lex.add(line.substr(0, tab), line.substr(tab + 1));
  }
  return lex;
}

void BilingualLexicon::save_tsv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  for (const auto& [s, t] : entries_) out << s << '\t' << t << '\n';
}

}  // namespace xlqa::xling
