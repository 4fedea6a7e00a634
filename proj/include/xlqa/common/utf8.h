#ifndef XLQA_COMMON_UTF8_H_
#define XLQA_COMMON_UTF8_H_

#include <string>
#include <string_view>
#include <vector>

namespace xlqa::utf8 {

// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD one byte
// at a time so offsets stay well defined.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);
std::string encode(char32_t cp);

bool is_space(char32_t cp);
// ASCII punctuation as in Python's string.punctuation.
bool is_ascii_punct(char32_t cp);
// Unicode punctuation (general categories P*) over the blocks that matter
// for Latin and CJK text, plus CJK symbol punctuation.
bool is_unicode_punct(char32_t cp);

char32_t ascii_lower(char32_t cp);

}  // namespace xlqa::utf8

#endif  // XLQA_COMMON_UTF8_H_
