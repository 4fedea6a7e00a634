#ifndef XLQA_COMMON_LANGUAGE_H_
#define XLQA_COMMON_LANGUAGE_H_

#include <string>
#include <string_view>

namespace xlqa {

// kSrc is the whitespace-delimited, high-resource language; kTgt is the
// unsegmented, low-resource language.
enum class Language { kSrc, kTgt };

inline std::string_view language_name(Language lang) {
  return lang == Language::kSrc ? "src" : "tgt";
}

Language parse_language(std::string_view name);

inline Language other(Language lang) {
  return lang == Language::kSrc ? Language::kTgt : Language::kSrc;
}

}  // namespace xlqa

#endif  // XLQA_COMMON_LANGUAGE_H_
