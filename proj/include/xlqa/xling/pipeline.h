#ifndef XLQA_XLING_PIPELINE_H_
#define XLQA_XLING_PIPELINE_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xlqa/eval/evalkit.h"
#include "xlqa/text/embedding.h"
#include "xlqa/text/example.h"
#include "xlqa/text/tokenizer.h"
#include "xlqa/text/vocab.h"
#include "xlqa/xling/lexicon.h"

namespace xlqa::xling {

struct WbwResult {
  text::Example example;
  std::size_t oov = 0;
};

// Replaces every question and document token through the lexicon; unknown
// tokens are kept verbatim and counted. Multi-word images become several
// tokens and spans are re-indexed. The example's language must be the
// direction's input language.
WbwResult word_by_word_translate(const text::Example& example, const BilingualLexicon& lexicon,
                                 Direction direction);

struct RemapResult {
  text::EmbeddingTable table;
  std::size_t mapped = 0;
  double coverage = 1.0;  // mapped / non-special src vocabulary size
};

// Row of every src word = tgt vector of its lexicon image (zero when the
// word or its image has no vector).
RemapResult remap_shared_embeddings(const text::Vocabulary& src_vocab,
                                    const BilingualLexicon& lexicon,
                                    const text::VectorMap& tgt_vectors, std::size_t dim);

// Translated question/document/answer for one example id.
struct TranslationRecord {
  std::string id;
  std::string question;
  std::vector<std::string> sentences;
  std::string answer;
};

std::vector<TranslationRecord> parse_records_jsonl(const std::string& text,
                                                   const std::string& source_name = "<memory>");
std::vector<TranslationRecord> load_records_jsonl(const std::string& path);
void write_records_jsonl(const std::vector<TranslationRecord>& records, const std::string& path);

struct AssembledDocument {
  std::string text;
  // Code-point [begin, end) of each kept sentence inside `text`.
  std::vector<std::pair<std::size_t, std::size_t>> sentence_offsets;
};

// Joins the non-blank sentences with the joining rule of `lang`, the
// language the record's text is written in.
AssembledDocument assemble_translated_document(const TranslationRecord& record, Language lang);

// First span, ordered by (start, end), whose normalized joined text equals
// the normalized answer. Spans must start and end on tokens with nonempty
// normalization. nullopt when the answer normalizes to nothing.
std::optional<text::TokenSpan> recover_span(const std::vector<text::Token>& tokens,
                                            const std::string& answer, Language lang);

struct TranslationStats {
  std::size_t total = 0;
  std::size_t recovered = 0;
  std::size_t dropped = 0;
  std::size_t oov = 0;  // wbw only
};

struct TrainOnTarget {
  text::Dataset dataset;
  TranslationStats stats;
};

// Records mode: exactly one record per source example (id match both
// ways). The segmenter tokenizes the target-language text.
TrainOnTarget build_train_on_target(const text::Dataset& src, const std::vector<TranslationRecord>& records,
                                    const text::Segmenter* tgt_segmenter);
// Lexicon (word-by-word) mode.
TrainOnTarget build_train_on_target(const text::Dataset& src, const BilingualLexicon& lexicon);

struct TestOnSource {
  // Every target example translated; unrecoverable ones have no spans.
  text::Dataset full;
  // Only the recoverable ones.
  text::Dataset filtered;
  TranslationStats stats;
};

TestOnSource build_test_on_source(const text::Dataset& tgt, const std::vector<TranslationRecord>& records);

struct BackTranslatedScore {
  eval::EvalReport report;
  std::size_t missing_map_entries = 0;
};

// Maps source-language predictions through `back_translation` and scores
// them against the target-language gold. Unmapped predictions score as "".
BackTranslatedScore score_back_translated_predictions(
    const eval::Predictions& predictions, const std::map<std::string, std::string>& back_translation,
    const text::Dataset& gold);

// JSON object {source_text: target_text}.
std::map<std::string, std::string> load_back_translation_map(const std::string& path);

}  // namespace xlqa::xling

#endif  // XLQA_XLING_PIPELINE_H_
