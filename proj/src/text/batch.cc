#include "xlqa/text/batch.h"

#include <algorithm>
#include <numeric>
#include <random>

#include "xlqa/common/error.h"
#include "xlqa/common/utf8.h"

namespace xlqa::text {

EncodedSequence encode_sequence(const std::vector<Token>& tokens, const Vocabulary& words,
                                const Vocabulary& chars) {
  EncodedSequence seq;
  seq.words.reserve(tokens.size());
  seq.chars.reserve(tokens.size());
  for (const Token& t : tokens) {
    seq.words.push_back(words.id(t.text));
    std::vector<int> cs;
    for (char32_t cp : utf8::decode(t.text)) {
      if (cs.size() == kMaxWordChars) break;
      cs.push_back(chars.id(utf8::encode(cp)));
    }
    seq.chars.push_back(std::move(cs));
  }
  return seq;
}

EncodedDataset encode_dataset(const Dataset& dataset, const Vocabulary& words,
                              const Vocabulary& chars) {
  EncodedDataset out;
  out.language = dataset.language;
  out.examples.reserve(dataset.examples.size());
  for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
    const Example& ex = dataset.examples[i];
    if (ex.language != dataset.language) {
      throw ContractError("example " + ex.id + " has a different language than its dataset");
    }
    EncodedExample e;
    e.question = encode_sequence(ex.question_tokens, words, chars);
    e.document = encode_sequence(ex.document_tokens, words, chars);
    if (ex.answerable()) {
      e.y1 = ex.answer_spans.front().start;
      e.y2 = ex.answer_spans.front().end;
    }
    out.examples.push_back(std::move(e));
    out.source_index.push_back(i);
  }
  return out;
}

namespace {

PaddedBlock pad(const std::vector<const EncodedSequence*>& seqs) {
  PaddedBlock b;
  for (const EncodedSequence* s : seqs) {
    b.length = std::max(b.length, s->words.size());
    for (const auto& cs : s->chars) b.char_width = std::max(b.char_width, cs.size());
  }
  b.char_width = std::max<std::size_t>(b.char_width, 1);
  const std::size_t n = seqs.size();
  b.words.assign(n * b.length, Vocabulary::kPad);
  b.chars.assign(n * b.length * b.char_width, Vocabulary::kPad);
  b.char_lengths.assign(n * b.length, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const EncodedSequence& s = *seqs[r];
    ad::Mask mask(b.length, 0);
    for (std::size_t t = 0; t < s.words.size(); ++t) {
      b.words[r * b.length + t] = s.words[t];
      mask[t] = 1;
      const auto& cs = s.chars[t];
      b.char_lengths[r * b.length + t] = static_cast<int>(cs.size());
      std::copy(cs.begin(), cs.end(),
                b.chars.begin() + (r * b.length + t) * b.char_width);
    }
    b.masks.push_back(std::move(mask));
    b.lengths.push_back(s.words.size());
  }
  return b;
}

}  // namespace

Batch make_batch(const EncodedDataset& data, std::span<const std::size_t> indices) {
  Batch batch;
  batch.language = data.language;
  std::vector<const EncodedSequence*> qs, ds;
  for (std::size_t i : indices) {
    const EncodedExample& e = data.examples.at(i);
    qs.push_back(&e.question);
    ds.push_back(&e.document);
    batch.y1.push_back(e.y1);
    batch.y2.push_back(e.y2);
    batch.example_indices.push_back(i);
  }
  batch.question = pad(qs);
  batch.document = pad(ds);
  return batch;
}

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Fisher-Yates with explicit draws so the order does not depend on the
  // standard library's shuffle.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::vector<Batch> make_batches(const EncodedDataset& data, std::size_t batch_size,
                                std::uint64_t shuffle_seed) {
  if (batch_size < 1) throw ContractError("make_batches: batch size must be >= 1");
  const auto order = shuffled_order(data.examples.size(), shuffle_seed);
  std::vector<Batch> out;
  for (std::size_t b = 0; b < order.size(); b += batch_size) {
    const std::size_t e = std::min(order.size(), b + batch_size);
    out.push_back(make_batch(data, std::span<const std::size_t>(order).subspan(b, e - b)));
  }
  return out;
}

}  // namespace xlqa::text
