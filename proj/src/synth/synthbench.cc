#include "xlqa/synth/synthbench.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "xlqa/common/error.h"
#include "xlqa/common/utf8.h"
#include "xlqa/text/squad.h"
#include "xlqa/text/tokenizer.h"

namespace xlqa::synth {

using text::Dataset;
using text::Example;

std::string_view word_order_name(WordOrder w) {
  return w == WordOrder::kIdentity ? "identity" : "reverse-clauses";
}

WordOrder parse_word_order(std::string_view s) {
  if (s == "identity") return WordOrder::kIdentity;
  if (s == "reverse-clauses") return WordOrder::kReverseClauses;
  throw ConfigError("unknown word order '" + std::string(s) + "'");
}

void SynthSpec::validate() const {
  if (vocab_size < 20) throw ConfigError("synthbench vocabulary must have at least 20 words");
  if (vocab_size > 5000) throw ConfigError("synthbench vocabulary is limited to 5000 words");
  if (n_target > n_source) throw ConfigError("target example count must not exceed the source count");
  if (min_clauses < 1 || max_clauses < min_clauses) throw ConfigError("bad clause range");
  if (pairs_per_doc < 1 || pairs_per_doc > min_clauses) throw ConfigError("pairs per doc must be in [1, min_clauses]");
  if (templates < 1 || template_len < 1) throw ConfigError("need at least one template word");
  const std::size_t content = vocab_size - templates * template_len;
  if (templates * template_len >= vocab_size || content / 3 < pairs_per_doc) {
    throw ConfigError("vocabulary too small for the templates and planted pairs");
  }
  if (embedding_dim < 1) throw ConfigError("embedding dimension must be positive");
  if (!(mt_noise >= 0.0 && mt_noise <= 1.0)) throw ConfigError("mt_noise must be in [0,1]");
}

std::string source_word(std::size_t id) {
  static constexpr std::string_view kCons = "bdfghklmnprstvz";
  static constexpr std::string_view kVow = "aeiou";
  const std::size_t syl = kCons.size() * kVow.size();
  std::string w;
  std::size_t x = id;
  for (int i = 0; i < 2; ++i) {
    const std::size_t s = x % syl;
    x /= syl;
    w += kCons[s / kVow.size()];
    w += kVow[s % kVow.size()];
  }
  return w;
}

std::string target_word(std::size_t cipher_id) {
  const char32_t base = 0x4E00 + static_cast<char32_t>(2 * cipher_id);
  return utf8::encode(std::u32string{base, base + 1});
}

namespace {

struct BaseExample {
  std::vector<std::size_t> question;
  std::vector<std::size_t> document;
  std::size_t answer_pos = 0;
};

struct Pools {
  std::vector<std::vector<std::size_t>> templates;
  std::vector<std::size_t> keys, values, fillers;
};

Pools make_pools(const SynthSpec& spec, std::mt19937_64& rng) {
  Pools p;
  std::size_t next = 0;
  for (std::size_t t = 0; t < spec.templates; ++t) {
    std::vector<std::size_t> words;
    for (std::size_t i = 0; i < spec.template_len; ++i) words.push_back(next++);
    p.templates.push_back(words);
  }
  std::vector<std::size_t> rest(spec.vocab_size - next);
  std::iota(rest.begin(), rest.end(), next);
  std::shuffle(rest.begin(), rest.end(), rng);
  const std::size_t third = rest.size() / 3;
  p.keys.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(third));
  p.values.assign(rest.begin() + static_cast<std::ptrdiff_t>(third), rest.begin() + static_cast<std::ptrdiff_t>(2 * third));
  p.fillers.assign(rest.begin() + static_cast<std::ptrdiff_t>(2 * third), rest.end());
  return p;
}

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

std::vector<std::size_t> sample_distinct(const std::vector<std::size_t>& pool, std::size_t n,
                                         std::mt19937_64& rng) {
  std::vector<std::size_t> out;
  while (out.size() < n) {
    const std::size_t w = pool[uniform(rng, 0, pool.size() - 1)];
    if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
  }
  return out;
}

BaseExample make_base(const SynthSpec& spec, const Pools& pools, std::mt19937_64& rng) {
  BaseExample ex;
  const std::size_t clauses = uniform(rng, spec.min_clauses, spec.max_clauses);
  ex.document.resize(clauses * kClauseLength);
  for (auto& w : ex.document) w = pools.fillers[uniform(rng, 0, pools.fillers.size() - 1)];
  std::vector<std::size_t> clause_ids(clauses);
  std::iota(clause_ids.begin(), clause_ids.end(), 0);
  std::shuffle(clause_ids.begin(), clause_ids.end(), rng);
  const auto keys = sample_distinct(pools.keys, spec.pairs_per_doc, rng);
  const auto values = sample_distinct(pools.values, spec.pairs_per_doc, rng);
  const std::size_t asked = uniform(rng, 0, spec.pairs_per_doc - 1);
  for (std::size_t p = 0; p < spec.pairs_per_doc; ++p) {
    const std::size_t at = clause_ids[p] * kClauseLength + uniform(rng, 0, kClauseLength - 2);
    ex.document[at] = keys[p];
    ex.document[at + 1] = values[p];
    if (p == asked) ex.answer_pos = at + 1;
  }
  ex.question = pools.templates[uniform(rng, 0, pools.templates.size() - 1)];
  ex.question.push_back(keys[asked]);
  return ex;
}

// Position map of the word-order rule: out[i] = input position shown at i.
std::vector<std::size_t> reorder(std::size_t n, WordOrder order) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (order == WordOrder::kReverseClauses) {
    for (std::size_t b = 0; b < n; b += kClauseLength) {
      std::reverse(idx.begin() + static_cast<std::ptrdiff_t>(b),
                   idx.begin() + static_cast<std::ptrdiff_t>(std::min(n, b + kClauseLength)));
    }
  }
  return idx;
}

struct Renderer {
  std::vector<std::string> src;
  std::vector<std::string> tgt;
  WordOrder order;

  Example render(const BaseExample& b, const std::string& id, Language lang) const {
    const auto& names = lang == Language::kSrc ? src : tgt;
    const WordOrder wo = lang == Language::kSrc ? WordOrder::kIdentity : order;
    Example ex;
    ex.id = id;
    ex.language = lang;
    std::vector<std::string> qw, dw;
    for (std::size_t i : reorder(b.question.size(), wo)) qw.push_back(names[b.question[i]]);
    const auto didx = reorder(b.document.size(), wo);
    std::size_t answer_at = 0;
    for (std::size_t i = 0; i < didx.size(); ++i) {
      dw.push_back(names[b.document[didx[i]]]);
      if (didx[i] == b.answer_pos) answer_at = i;
    }
    ex.question_tokens = text::layout_tokens(qw, lang, &ex.question);
    ex.document_tokens = text::layout_tokens(dw, lang, &ex.context);
    ex.answer_texts = {dw[answer_at]};
    ex.answer_spans = {text::TokenSpan{static_cast<int>(answer_at), static_cast<int>(answer_at)}};
    return ex;
  }

  xling::TranslationRecord record(const BaseExample& b, const std::string& id, bool garble,
                                  const Pools& pools, std::mt19937_64& rng) const {
    xling::TranslationRecord r;
    r.id = id;
    std::vector<std::string> qw;
    for (std::size_t i : reorder(b.question.size(), order)) qw.push_back(tgt[b.question[i]]);
    r.question = text::join_tokens(qw, Language::kTgt);
    for (std::size_t c = 0; c < b.document.size(); c += kClauseLength) {
      std::vector<std::size_t> clause(b.document.begin() + static_cast<std::ptrdiff_t>(c),
                                      b.document.begin() + static_cast<std::ptrdiff_t>(c + kClauseLength));
      std::vector<std::string> words;
      for (std::size_t i : reorder(clause.size(), order)) words.push_back(tgt[clause[i]]);
      r.sentences.push_back(text::join_tokens(words, Language::kTgt));
    }
    std::size_t answer = b.document[b.answer_pos];
    if (garble) {
      // A value word that does not occur in this document.
      do {
        answer = pools.values[uniform(rng, 0, pools.values.size() - 1)];
      } while (std::find(b.document.begin(), b.document.end(), answer) != b.document.end());
    }
    r.answer = tgt[answer];
    return r;
  }
};

std::string make_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%06zu", prefix, i);
  return buf;
}

}  // namespace

SynthCorpus generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const Pools pools = make_pools(spec, rng);

  std::vector<std::size_t> cipher(spec.vocab_size);
  std::iota(cipher.begin(), cipher.end(), 0);
  std::mt19937_64 cipher_rng(spec.cipher_seed);
  std::shuffle(cipher.begin(), cipher.end(), cipher_rng);

  Renderer r;
  r.order = spec.word_order;
  SynthCorpus out;
  out.dim = spec.embedding_dim;
  for (std::size_t w = 0; w < spec.vocab_size; ++w) {
    r.src.push_back(source_word(w));
    r.tgt.push_back(target_word(cipher[w]));
    out.lexicon.add(r.src.back(), r.tgt.back());
  }
  out.tgt_words = r.tgt;

  std::mt19937_64 vec_rng(spec.seed ^ 0x5EEDF00Dull);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t w = 0; w < spec.vocab_size; ++w) {
    std::vector<ad::Real> v(spec.embedding_dim);
    for (auto& x : v) x = static_cast<ad::Real>(normal(vec_rng));
    out.tgt_vectors.emplace(r.tgt[w], std::move(v));
  }

  auto fill = [&](Dataset& d, Language lang, const char* prefix, std::size_t n, std::mt19937_64& g,
                  bool with_records) {
    d.language = lang;
    std::mt19937_64 noise_rng(g());
    std::bernoulli_distribution garble(spec.mt_noise);
    for (std::size_t i = 0; i < n; ++i) {
      const BaseExample b = make_base(spec, pools, g);
      const std::string id = make_id(prefix, i);
      d.examples.push_back(r.render(b, id, lang));
      if (with_records) out.records.push_back(r.record(b, id, garble(noise_rng), pools, noise_rng));
    }
  };
  // Independent generators per split keep each split stable when another
  // split's size changes.
  std::mt19937_64 g_src(rng()), g_tgt(rng()), g_dev(rng()), g_held(rng());
  fill(out.source, Language::kSrc, "src", spec.n_source, g_src, true);
  fill(out.target, Language::kTgt, "tgt", spec.n_target, g_tgt, false);
  fill(out.dev, Language::kTgt, "dev", spec.n_dev, g_dev, false);
  fill(out.src_heldout, Language::kSrc, "held", spec.n_src_heldout, g_held, false);
  return out;
}

text::LongestMatchSegmenter target_segmenter(const SynthCorpus& corpus) {
  return text::LongestMatchSegmenter(corpus.tgt_words);
}

void write_corpus(const SynthCorpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base(dir);
  text::write_squad_json(corpus.source, (base / "source.json").string());
  text::write_squad_json(corpus.target, (base / "target.json").string());
  text::write_squad_json(corpus.dev, (base / "dev.json").string());
  text::write_squad_json(corpus.src_heldout, (base / "src_heldout.json").string());
  corpus.lexicon.save_tsv((base / "lexicon.tsv").string());
  text::write_embedding_file(corpus.tgt_vectors, corpus.tgt_words, (base / "tgt_vectors.txt").string());
  xling::write_records_jsonl(corpus.records, (base / "records.jsonl").string());
  std::ofstream words(base / "tgt_words.txt", std::ios::binary);
  for (const auto& w : corpus.tgt_words) words << w << '\n';
  if (!words) throw ConfigError("cannot write " + (base / "tgt_words.txt").string());
}

}  // namespace xlqa::synth
