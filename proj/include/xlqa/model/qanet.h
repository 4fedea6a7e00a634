#ifndef XLQA_MODEL_QANET_H_
#define XLQA_MODEL_QANET_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xlqa/autodiff/params.h"
#include "xlqa/common/language.h"
#include "xlqa/model/layers.h"
#include "xlqa/text/batch.h"
#include "xlqa/text/embedding.h"

namespace xlqa::model {

enum class CqPlacement { kIndependent, kDependent };

struct HyperParams {
  std::size_t hidden = 96;
  std::size_t heads = 2;
  std::size_t embedding_blocks = 1;
  std::size_t model_blocks = 7;
  std::size_t embedding_convs = 4;
  std::size_t model_convs = 2;
  std::size_t kernel = 7;
  std::size_t char_dim = 64;
  std::size_t char_kernel = 5;
  std::size_t max_answer_len = 30;
  double dropout = 0.1;
  double char_dropout = 0.05;
  bool use_chars = true;
  CqPlacement cq_placement = CqPlacement::kIndependent;

  static HyperParams full();
  static HyperParams desk();
  // Throws ConfigError on inconsistent values.
  void validate() const;
};

// One tokenized sequence of one example, possibly padded. chars is
// [length * char_width] row-major.
struct SequenceView {
  std::span<const int> words;
  std::span<const int> chars;
  std::span<const int> char_lengths;
  std::size_t char_width = 0;
  Mask mask;

  std::size_t length() const { return words.size(); }
};

// Row `b` of a padded block; `trim` drops the padding.
SequenceView sequence_view(const text::PaddedBlock& block, std::size_t b, bool trim);

// Ψ(q), Ψ(d) of one example. With dependent CQ placement `document` is
// already query-aware.
struct DependentOutput {
  Tensor question;  // [Lq, H]
  Tensor document;  // [Ld, H]
  Mask question_mask;
  Mask document_mask;
};

struct LanguageResources {
  const text::EmbeddingTable* words = nullptr;
  std::size_t char_vocab_size = 0;
};

struct DependentStackParams {
  Tensor word_table;  // frozen
  Tensor char_table, char_conv, char_bias;
  std::vector<Tensor> hw_gate_w, hw_gate_b, hw_tr_w, hw_tr_b;
  Tensor proj;
  std::vector<EncoderBlockParams> blocks;
  std::optional<CqAttentionParams> cq;
  Tensor cq_proj;
};

// QA network with one dependent stack per language sharing one set of
// independent layers. Parameters live in the caller's ParameterStore.
class QANet {
 public:
  QANet(const HyperParams& hp, ad::ParameterStore& store, const LanguageResources& src,
        const LanguageResources& tgt, std::uint64_t init_seed);

  const HyperParams& hyper() const { return hp_; }
  ad::ParameterStore& store() { return *store_; }
  const DependentStackParams& stack(Language lang) const { return stacks_[static_cast<int>(lang)]; }

  Tensor embed(Language lang, const SequenceView& seq, const Context& ctx) const;
  DependentOutput dependent_forward(Language lang, const SequenceView& q, const SequenceView& d,
                                    const Context& ctx) const;
  SpanDistribution independent_forward(const DependentOutput& dep, const Context& ctx) const;
  SpanDistribution forward(Language lang, const SequenceView& q, const SequenceView& d,
                           const Context& ctx) const;

  // Predicted (start, end) for a distribution, using max_answer_len.
  std::pair<int, int> predict(const SpanDistribution& dist) const;

 private:
  void build_stack(Language lang, const LanguageResources& res, std::mt19937_64& rng,
                   std::mt19937_64& char_rng);

  HyperParams hp_;
  ad::ParameterStore* store_;
  std::array<DependentStackParams, 2> stacks_;
  std::optional<CqAttentionParams> cq_;
  Tensor cq_proj_;
  std::vector<EncoderBlockParams> model_blocks_;
  OutputParams out_;
};

ad::GroupId dependent_group(Language lang);

}  // namespace xlqa::model

#endif  // XLQA_MODEL_QANET_H_
