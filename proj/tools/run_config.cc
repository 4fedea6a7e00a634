#include "run_config.h"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "xlqa/common/error.h"
#include "xlqa/synth/suite.h"

namespace xlqa::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("bad value '" + v + "' for key '" + key + "'");
  }
  return out;
}

template <typename T>
std::string format_number(T v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("bad boolean '" + v + "' for key '" + key + "'");
}

struct Key {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string& key, const std::string&)> set;
};

template <typename T>
Key number(T RunConfig::*outer) {
  return {[outer](const RunConfig& c) { return format_number(c.*outer); },
          [outer](RunConfig& c, const std::string& k, const std::string& v) { c.*outer = parse_number<T>(k, v); }};
}

// Member of a nested struct.
template <typename S, typename T>
Key number(S RunConfig::*outer, T S::*inner) {
  return {[outer, inner](const RunConfig& c) { return format_number(c.*outer.*inner); },
          [outer, inner](RunConfig& c, const std::string& k, const std::string& v) {
            c.*outer.*inner = parse_number<T>(k, v);
          }};
}

template <typename S>
Key boolean(S RunConfig::*outer, bool S::*inner) {
  return {[outer, inner](const RunConfig& c) { return std::string(c.*outer.*inner ? "true" : "false"); },
          [outer, inner](RunConfig& c, const std::string& k, const std::string& v) {
            c.*outer.*inner = parse_bool(k, v);
          }};
}

Key text(std::string RunConfig::*member) {
  return {[member](const RunConfig& c) { return c.*member; },
          [member](RunConfig& c, const std::string&, const std::string& v) { c.*member = v; }};
}

template <typename E>
Key enumeration(std::function<E&(RunConfig&)> ref, std::function<std::string_view(E)> name,
                std::function<E(std::string_view)> parse) {
  return {[ref, name](const RunConfig& c) { return std::string(name(ref(const_cast<RunConfig&>(c)))); },
          [ref, parse](RunConfig& c, const std::string& k, const std::string& v) {
            try {
              ref(c) = parse(v);
            } catch (const std::exception& e) {
              throw ConfigError("bad value '" + v + "' for key '" + k + "': " + e.what());
            }
          }};
}

std::string_view cq_name(model::CqPlacement p) {
  return p == model::CqPlacement::kDependent ? "dependent" : "independent";
}

model::CqPlacement parse_cq(std::string_view s) {
  if (s == "dependent") return model::CqPlacement::kDependent;
  if (s == "independent") return model::CqPlacement::kIndependent;
  throw ConfigError("expected dependent or independent");
}

const std::map<std::string, Key>& keys() {
  using RC = RunConfig;
  using TC = train::TrainerConfig;
  using HP = model::HyperParams;
  using DC = adversary::DiscriminatorConfig;
  using SS = synth::SynthSpec;
  static const std::map<std::string, Key> table = {
      {"src_train", text(&RC::src_train)},
      {"tgt_train", text(&RC::tgt_train)},
      {"tgt_dev", text(&RC::tgt_dev)},
      {"src_heldout", text(&RC::src_heldout)},
      {"tgt_vectors", text(&RC::tgt_vectors)},
      {"lexicon", text(&RC::lexicon)},
      {"records", text(&RC::records)},
      {"tgt_words", text(&RC::tgt_words)},
      {"out", text(&RC::out)},
      {"max_doc_tokens", number(&RC::max_doc_tokens)},
      {"suite_rows", text(&RC::suite_rows)},
      {"fractions", text(&RC::fractions)},

      {"mode", enumeration<train::TrainMode>([](RC& c) -> train::TrainMode& { return c.trainer.mode; },
                                             train::mode_name, train::parse_mode)},
      {"variant", enumeration<train::Variant>([](RC& c) -> train::Variant& { return c.trainer.variant; },
                                              train::variant_name, train::parse_variant)},
      {"k", number(&RC::trainer, &TC::k)},
      {"batch_size", number(&RC::trainer, &TC::batch_size)},
      {"lr", number(&RC::trainer, &TC::lr)},
      {"d_lr", number(&RC::trainer, &TC::d_lr)},
      {"lambda_peak", {[](const RC& c) { return format_number(c.trainer.lambda.peak); },
                       [](RC& c, const std::string& k, const std::string& v) {
                         c.trainer.lambda.peak = parse_number<double>(k, v);
                       }}},
      {"lambda_ramp_steps", {[](const RC& c) { return format_number(c.trainer.lambda.ramp_steps); },
                             [](RC& c, const std::string& k, const std::string& v) {
                               c.trainer.lambda.ramp_steps = parse_number<long long>(k, v);
                             }}},
      {"lambda_shape",
       enumeration<train::RampShape>([](RC& c) -> train::RampShape& { return c.trainer.lambda.shape; },
                                     train::ramp_name, train::parse_ramp)},
      {"l2", number(&RC::trainer, &TC::l2)},
      {"clip_norm", number(&RC::trainer, &TC::clip_norm)},
      {"ema_decay", number(&RC::trainer, &TC::ema_decay)},
      {"max_steps", number(&RC::trainer, &TC::max_steps)},
      {"eval_every", number(&RC::trainer, &TC::eval_every)},
      {"patience", number(&RC::trainer, &TC::patience)},
      {"dacc_examples", number(&RC::trainer, &TC::dacc_examples)},
      {"seed", number(&RC::trainer, &TC::seed)},

      {"hidden", number(&RC::hyper, &HP::hidden)},
      {"heads", number(&RC::hyper, &HP::heads)},
      {"embedding_blocks", number(&RC::hyper, &HP::embedding_blocks)},
      {"model_blocks", number(&RC::hyper, &HP::model_blocks)},
      {"embedding_convs", number(&RC::hyper, &HP::embedding_convs)},
      {"model_convs", number(&RC::hyper, &HP::model_convs)},
      {"kernel", number(&RC::hyper, &HP::kernel)},
      {"char_dim", number(&RC::hyper, &HP::char_dim)},
      {"char_kernel", number(&RC::hyper, &HP::char_kernel)},
      {"max_answer_len", number(&RC::hyper, &HP::max_answer_len)},
      {"dropout", number(&RC::hyper, &HP::dropout)},
      {"char_dropout", number(&RC::hyper, &HP::char_dropout)},
      {"use_chars", boolean(&RC::hyper, &HP::use_chars)},
      {"cq_placement", enumeration<model::CqPlacement>(
                           [](RC& c) -> model::CqPlacement& { return c.hyper.cq_placement; }, cq_name, parse_cq)},

      {"d_filters", number(&RC::discriminator, &DC::filters)},
      {"d_blocks", number(&RC::discriminator, &DC::blocks)},
      {"d_kernel", number(&RC::discriminator, &DC::kernel)},
      {"d_leaky_slope", number(&RC::discriminator, &DC::leaky_slope)},

      {"synth.seed", number(&RC::synth, &SS::seed)},
      {"synth.vocab_size", number(&RC::synth, &SS::vocab_size)},
      {"synth.n_source", number(&RC::synth, &SS::n_source)},
      {"synth.n_target", number(&RC::synth, &SS::n_target)},
      {"synth.n_dev", number(&RC::synth, &SS::n_dev)},
      {"synth.n_src_heldout", number(&RC::synth, &SS::n_src_heldout)},
      {"synth.min_clauses", number(&RC::synth, &SS::min_clauses)},
      {"synth.max_clauses", number(&RC::synth, &SS::max_clauses)},
      {"synth.pairs_per_doc", number(&RC::synth, &SS::pairs_per_doc)},
      {"synth.templates", number(&RC::synth, &SS::templates)},
      {"synth.template_len", number(&RC::synth, &SS::template_len)},
      {"synth.cipher_seed", number(&RC::synth, &SS::cipher_seed)},
      {"synth.word_order", enumeration<synth::WordOrder>(
                               [](RC& c) -> synth::WordOrder& { return c.synth.word_order; },
                               synth::word_order_name, synth::parse_word_order)},
      {"synth.embedding_dim", number(&RC::synth, &SS::embedding_dim)},
      {"synth.mt_noise", number(&RC::synth, &SS::mt_noise)},
  };
  return table;
}

RunConfig preset(const std::string& name) {
  RunConfig c;
  c.preset = name;
  if (name == "desk") {
    const synth::SuiteConfig suite;
    c.trainer = suite.trainer;
    c.hyper = suite.hyper;
    c.discriminator = suite.discriminator;
  } else if (name == "full") {
    c.hyper = model::HyperParams::full();
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected desk or full)");
  }
  return c;
}

}  // namespace

KeyValues parse_key_values(const std::string& text, const std::string& source) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(n) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(n) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_key_values(os.str(), path);
}

RunConfig resolve(const KeyValues& values) {
  const auto p = values.find("preset");
  RunConfig c = preset(p == values.end() ? "desk" : p->second);
  for (const auto& [k, v] : values) {
    if (k == "preset") continue;
    const auto it = keys().find(k);
    if (it == keys().end()) throw ConfigError("unknown config key '" + k + "'");
    it->second.set(c, k, v);
  }
  c.trainer.validate();
  c.hyper.validate();
  c.synth.validate();
  if (c.discriminator.filters == 0 || c.discriminator.blocks == 0 || c.discriminator.kernel % 2 == 0) {
    throw ConfigError("discriminator needs filters, blocks >= 1 and an odd kernel");
  }
  if (c.out.empty()) throw ConfigError("out must not be empty");
  return c;
}

std::string dump(const RunConfig& cfg) {
  std::ostringstream os;
  os << "preset = " << cfg.preset << '\n';
  for (const auto& [k, key] : keys()) os << k << " = " << key.get(cfg) << '\n';
  return os.str();
}

void require_files(const RunConfig& cfg, const std::vector<std::string>& names) {
  for (const auto& n : names) {
    const std::string path = keys().at(n).get(cfg);
    if (path.empty()) throw ConfigError("config key '" + n + "' is required");
    if (!std::filesystem::exists(path)) throw ConfigError(n + ": no such file " + path);
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace xlqa::cli
