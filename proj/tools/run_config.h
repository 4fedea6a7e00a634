#ifndef XLQA_TOOLS_RUN_CONFIG_H_
#define XLQA_TOOLS_RUN_CONFIG_H_

#include <map>
#include <string>
#include <vector>

#include "xlqa/adversary/discriminator.h"
#include "xlqa/model/qanet.h"
#include "xlqa/synth/synthbench.h"
#include "xlqa/train/trainer.h"

namespace xlqa::cli {

// Everything a command may read. Paths left empty are unused.
struct RunConfig {
  std::string preset = "desk";
  train::TrainerConfig trainer;
  model::HyperParams hyper;
  adversary::DiscriminatorConfig discriminator;
  synth::SynthSpec synth;

  std::string src_train, tgt_train, tgt_dev, src_heldout;
  std::string tgt_vectors, lexicon, records, tgt_words;
  std::string out = "xlqa_out";
  std::size_t max_doc_tokens = 0;  // 0 keeps every example

  // Suite rows and the label-efficiency fractions of `repro`.
  std::string suite_rows = "target-only,dependent,gan-ch,gan-en,mt+gan-ch";
  std::string fractions = "0.2,0.4,0.6,0.8,1.0";
};

using KeyValues = std::map<std::string, std::string>;

// "key = value" lines; '#' starts a comment. Throws ConfigError.
KeyValues parse_key_values(const std::string& text, const std::string& source);
KeyValues read_key_values(const std::string& path);

// Preset defaults, then `values` in key order. `preset` is applied first.
// Unknown keys and malformed values throw ConfigError.
RunConfig resolve(const KeyValues& values);

// Every key with its resolved value, one "key = value" line each, sorted.
// Feeding the dump back to resolve() yields the same configuration.
std::string dump(const RunConfig& cfg);

// Throws ConfigError unless each named path is set and exists.
void require_files(const RunConfig& cfg, const std::vector<std::string>& keys);

std::vector<std::string> split_list(const std::string& s);

}  // namespace xlqa::cli

#endif  // XLQA_TOOLS_RUN_CONFIG_H_
