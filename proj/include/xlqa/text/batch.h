#ifndef XLQA_TEXT_BATCH_H_
#define XLQA_TEXT_BATCH_H_

#include <cstdint>
#include <vector>

#include "xlqa/autodiff/tensor.h"
#include "xlqa/text/example.h"
#include "xlqa/text/vocab.h"

namespace xlqa::text {

inline constexpr std::size_t kMaxWordChars = 16;

// One tokenized sequence in id space.
struct EncodedSequence {
  std::vector<int> words;
  // chars[i] holds at most kMaxWordChars ids of word i.
  std::vector<std::vector<int>> chars;
};

struct EncodedExample {
  EncodedSequence question;
  EncodedSequence document;
  int y1 = -1;  // first answer span, -1 when unanswerable
  int y2 = -1;
};

struct EncodedDataset {
  Language language = Language::kSrc;
  std::vector<EncodedExample> examples;
  // Index into the source Dataset, for reading answers back.
  std::vector<std::size_t> source_index;
};

EncodedSequence encode_sequence(const std::vector<Token>& tokens, const Vocabulary& words,
                                const Vocabulary& chars);
EncodedDataset encode_dataset(const Dataset& dataset, const Vocabulary& words,
                              const Vocabulary& chars);

// Padded block of one sequence kind (questions or documents) in a batch.
struct PaddedBlock {
  std::size_t length = 0;      // max tokens over the batch
  std::size_t char_width = 0;  // max chars per word over the batch
  std::vector<int> words;      // [B, length], pad id 0
  std::vector<int> chars;      // [B, length, char_width], pad id 0
  std::vector<int> char_lengths;  // [B, length]
  std::vector<ad::Mask> masks;    // B masks of `length` entries
  std::vector<std::size_t> lengths;
};

// All examples share one language tag.
struct Batch {
  Language language = Language::kSrc;
  PaddedBlock question;
  PaddedBlock document;
  std::vector<int> y1;
  std::vector<int> y2;
  std::vector<std::size_t> example_indices;  // into the EncodedDataset

  std::size_t size() const { return example_indices.size(); }
};

Batch make_batch(const EncodedDataset& data, std::span<const std::size_t> indices);

// Shuffled with `shuffle_seed`, partitioned into batches of `batch_size`
// (the last one may be short), padded per batch.
std::vector<Batch> make_batches(const EncodedDataset& data, std::size_t batch_size,
                                std::uint64_t shuffle_seed);

// Shuffled index order used by make_batches.
std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed);

}  // namespace xlqa::text

#endif  // XLQA_TEXT_BATCH_H_
