#ifndef XLQA_SYNTH_SYNTHBENCH_H_
#define XLQA_SYNTH_SYNTHBENCH_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "xlqa/text/embedding.h"
#include "xlqa/text/example.h"
#include "xlqa/xling/lexicon.h"
#include "xlqa/xling/pipeline.h"

// Paired-language toy reading-comprehension corpus. Documents are clauses
// of five tokens; some clauses carry a "key value" pair, the question names
// one key and the answer is its value. The target language renames every
// word through a secret permutation (each target word is two CJK
// characters, written without spaces) and may reverse every clause.
namespace xlqa::synth {

enum class WordOrder { kIdentity, kReverseClauses };

std::string_view word_order_name(WordOrder w);
WordOrder parse_word_order(std::string_view s);

inline constexpr std::size_t kClauseLength = 5;

struct SynthSpec {
  std::uint64_t seed = 1;
  std::size_t vocab_size = 400;
  std::size_t n_source = 5000;
  std::size_t n_target = 500;
  std::size_t n_dev = 300;
  std::size_t n_src_heldout = 200;
  std::size_t min_clauses = 4;
  std::size_t max_clauses = 6;
  std::size_t pairs_per_doc = 3;
  std::size_t templates = 4;
  std::size_t template_len = 2;
  std::uint64_t cipher_seed = 2;
  WordOrder word_order = WordOrder::kReverseClauses;
  std::size_t embedding_dim = 32;
  // Share of translation records whose answer is mistranslated (and so
  // cannot be recovered).
  double mt_noise = 0.1;

  // Throws ConfigError.
  void validate() const;
};

struct SynthCorpus {
  text::Dataset source;       // src language
  text::Dataset target;       // tgt language, training
  text::Dataset dev;          // tgt language
  text::Dataset src_heldout;  // src language, never trained on
  xling::BilingualLexicon lexicon;
  text::VectorMap tgt_vectors;
  std::size_t dim = 0;
  // Sentence-level translations of `source` into the target language.
  std::vector<xling::TranslationRecord> records;
  std::vector<std::string> tgt_words;
};

SynthCorpus generate(const SynthSpec& spec);

// Segmenter that reproduces the target tokenization exactly.
text::LongestMatchSegmenter target_segmenter(const SynthCorpus& corpus);

// Writes source.json, target.json, dev.json, src_heldout.json (SQuAD),
// lexicon.tsv, tgt_vectors.txt, records.jsonl and the target word list
// tgt_words.txt into `dir`.
void write_corpus(const SynthCorpus& corpus, const std::string& dir);

// Word strings for base word `id`.
std::string source_word(std::size_t id);
std::string target_word(std::size_t cipher_id);

}  // namespace xlqa::synth

#endif  // XLQA_SYNTH_SYNTHBENCH_H_
