#include "xlqa/common/language.h"

#include "xlqa/common/error.h"

namespace xlqa {

Language parse_language(std::string_view name) {
  if (name == "src") return Language::kSrc;
  if (name == "tgt") return Language::kTgt;
  throw ConfigError("unknown language '" + std::string(name) + "' (expected src or tgt)");
}

}  // namespace xlqa
