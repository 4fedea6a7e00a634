#ifndef XLQA_TEXT_SQUAD_H_
#define XLQA_TEXT_SQUAD_H_

#include <optional>
#include <string>

#include "xlqa/text/example.h"
#include "xlqa/text/tokenizer.h"

namespace xlqa::text {

// Maps a code-point range [char_begin, char_end) to the covering tokens.
// Ranges that split a token expand to the whole token; nullopt when no
// token overlaps.
std::optional<TokenSpan> char_range_to_span(const std::vector<Token>& tokens,
                                            std::size_t char_begin, std::size_t char_end);

// SQuAD v1.1 JSON (data -> paragraphs -> context/qas -> question/id/answers
// -> text/answer_start). Answers that do not match the context at their
// offset are discarded; examples left without answers are dropped and
// counted in Dataset::dropped.
Dataset parse_squad_json(const std::string& json_text, Language lang,
                         const Segmenter* segmenter = nullptr,
                         const std::string& source_name = "<memory>");
Dataset load_squad_json(const std::string& path, Language lang,
                        const Segmenter* segmenter = nullptr);

// One paragraph per example; answer_start computed from the first span.
std::string to_squad_json(const Dataset& dataset);
void write_squad_json(const Dataset& dataset, const std::string& path);

Dataset filter_by_length(const Dataset& dataset, std::size_t max_doc_tokens);

// Re-tokenizes question and context of an already-built example.
Example make_example(std::string id, Language lang, std::string question, std::string context,
                     const std::vector<std::pair<std::string, std::size_t>>& answers,
                     const Segmenter* segmenter, bool* ok);

}  // namespace xlqa::text

#endif  // XLQA_TEXT_SQUAD_H_
