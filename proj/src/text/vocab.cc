#include "xlqa/text/vocab.h"

#include <fstream>

#include "xlqa/common/error.h"
#include "xlqa/common/utf8.h"

namespace xlqa::text {

Vocabulary::Vocabulary() : entries_{"<pad>", "<unk>"} {}

int Vocabulary::add(std::string_view entry) {
  auto it = index_.find(std::string(entry));
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(entries_.size());
  entries_.emplace_back(entry);
  index_.emplace(std::string(entry), id);
  return id;
}

bool Vocabulary::contains(std::string_view entry) const {
  return index_.count(std::string(entry)) != 0;
}

int Vocabulary::id(std::string_view entry) const {
  auto it = index_.find(std::string(entry));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::entry(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= entries_.size()) {
    throw ContractError("vocabulary id " + std::to_string(id) + " out of range");
  }
  return entries_[id];
}

std::vector<std::string> Vocabulary::words() const {
  return {entries_.begin() + 2, entries_.end()};
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write vocabulary " + path);
  for (std::size_t i = 2; i < entries_.size(); ++i) out << entries_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open vocabulary " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    v.add(line);
  }
  return v;
}

void extend_word_vocabulary(Vocabulary& vocab, const Dataset& dataset) {
  for (const Example& ex : dataset.examples) {
    for (const Token& t : ex.question_tokens) vocab.add(t.text);
    for (const Token& t : ex.document_tokens) vocab.add(t.text);
  }
}

Vocabulary build_word_vocabulary(const Dataset& dataset) {
  Vocabulary v;
  extend_word_vocabulary(v, dataset);
  return v;
}

void extend_char_vocabulary(Vocabulary& vocab, const Dataset& dataset) {
  auto add_token = [&](const Token& t) {
    for (char32_t cp : utf8::decode(t.text)) vocab.add(utf8::encode(cp));
  };
  for (const Example& ex : dataset.examples) {
    for (const Token& t : ex.question_tokens) add_token(t);
    for (const Token& t : ex.document_tokens) add_token(t);
  }
}

Vocabulary build_char_vocabulary(const Dataset& dataset) {
  Vocabulary v;
  extend_char_vocabulary(v, dataset);
  return v;
}

}  // namespace xlqa::text
