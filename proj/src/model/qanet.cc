#include "xlqa/model/qanet.h"

#include "xlqa/autodiff/ops.h"
#include "xlqa/common/error.h"

namespace xlqa::model {

using ad::Real;

HyperParams HyperParams::full() { return HyperParams{}; }

HyperParams HyperParams::desk() {
  HyperParams hp;
  hp.hidden = 32;
  hp.heads = 2;
  hp.embedding_blocks = 1;
  hp.model_blocks = 2;
  hp.char_dim = 16;
  return hp;
}

void HyperParams::validate() const {
  if (hidden == 0 || heads == 0 || hidden % heads != 0) {
    throw ConfigError("hidden size " + std::to_string(hidden) + " must be a positive multiple of heads " +
                      std::to_string(heads));
  }
  if (kernel % 2 == 0 || char_kernel % 2 == 0) throw ConfigError("convolution widths must be odd");
  if (embedding_blocks == 0 || model_blocks == 0) throw ConfigError("encoder block counts must be >= 1");
  if (max_answer_len == 0) throw ConfigError("max answer length must be >= 1");
  if (dropout < 0 || dropout >= 1 || char_dropout < 0 || char_dropout >= 1) {
    throw ConfigError("dropout rates must lie in [0, 1)");
  }
  if (use_chars && char_dim == 0) throw ConfigError("char_dim must be >= 1 when characters are used");
}

SequenceView sequence_view(const text::PaddedBlock& block, std::size_t b, bool trim) {
  const std::size_t len = trim ? block.lengths.at(b) : block.length;
  SequenceView v;
  v.words = std::span<const int>(block.words).subspan(b * block.length, len);
  v.char_width = block.char_width;
  v.chars = std::span<const int>(block.chars).subspan(b * block.length * block.char_width,
                                                     len * block.char_width);
  v.char_lengths = std::span<const int>(block.char_lengths).subspan(b * block.length, len);
  v.mask.assign(block.masks.at(b).begin(), block.masks.at(b).begin() + static_cast<std::ptrdiff_t>(len));
  return v;
}

ad::GroupId dependent_group(Language lang) {
  return lang == Language::kSrc ? ad::GroupId::kDepSrc : ad::GroupId::kDepTgt;
}

namespace {

Tensor& trainable(ad::ParameterGroup& g, const std::string& name, Tensor t) {
  t.set_requires_grad(true);
  return g.add(name, std::move(t));
}

Tensor highway(const Tensor& x, const Tensor& gw, const Tensor& gb, const Tensor& tw,
               const Tensor& tb, const Context& ctx) {
  const Tensor gate = ad::sigmoid(ad::add_row_vector(ad::matmul(x, gw), gb));
  const Tensor trans = ctx.drop(ad::relu(ad::add_row_vector(ad::matmul(x, tw), tb)));
  return ad::add(x, ad::mul(gate, ad::sub(trans, x)));
}

}  // namespace

QANet::QANet(const HyperParams& hp, ad::ParameterStore& store, const LanguageResources& src,
             const LanguageResources& tgt, std::uint64_t init_seed)
    : hp_(hp), store_(&store) {
  hp_.validate();
  // Separate generators keep each partition's initialization independent
  // of the other partitions' sizes. Both language stacks start from the same
  // draws, so they begin as one function of the (aligned) word vectors.
  for (Language lang : {Language::kSrc, Language::kTgt}) {
    std::mt19937_64 stack_rng(init_seed * 4 + 0), char_rng(init_seed * 4 + 1);
    build_stack(lang, lang == Language::kSrc ? src : tgt, stack_rng, char_rng);
  }
  std::mt19937_64 rng(init_seed * 4 + 2);

  ad::ParameterGroup& ind = store.group(ad::GroupId::kIndependent);
  const std::size_t h = hp_.hidden;
  if (hp_.cq_placement == CqPlacement::kIndependent) {
    cq_ = make_cq_attention(ind, "cq", h, rng);
    cq_proj_ = trainable(ind, "cq_proj", ad::glorot_uniform({4 * h, h}, 4 * h, h, rng));
  }
  for (std::size_t b = 0; b < hp_.model_blocks; ++b) {
    model_blocks_.push_back(
        make_encoder_block(ind, "model_enc" + std::to_string(b), h, hp_.model_convs, hp_.kernel, rng));
  }
  out_.w1 = trainable(ind, "out/w1", ad::glorot_uniform({2 * h, 1}, 2 * h, 1, rng));
  out_.w2 = trainable(ind, "out/w2", ad::glorot_uniform({2 * h, 1}, 2 * h, 1, rng));
}

void QANet::build_stack(Language lang, const LanguageResources& res, std::mt19937_64& rng,
                        std::mt19937_64& char_rng) {
  if (!res.words) throw ConfigError("no word embeddings for " + std::string(language_name(lang)));
  ad::ParameterGroup& g = store_->group(dependent_group(lang));
  DependentStackParams& s = stacks_[static_cast<int>(lang)];
  const std::size_t h = hp_.hidden;
  const std::size_t wd = res.words->dim();
  s.word_table = g.add("word_table", Tensor(res.words->matrix.shape(),
                                            std::vector<Real>(res.words->matrix.values().begin(),
                                                              res.words->matrix.values().end())),
                       true);
  std::size_t d = wd;
  if (hp_.use_chars) {
    const std::size_t cd = hp_.char_dim;
    const std::size_t cv = std::max<std::size_t>(res.char_vocab_size, 2);
    s.char_conv = trainable(g, "char_conv",
                            ad::glorot_uniform({hp_.char_kernel, cd, cd}, hp_.char_kernel * cd, cd, char_rng));
    // Drawn last: the table size differs between languages.
    s.char_table = trainable(g, "char_table", ad::normal_init({cv, cd}, 0.1, char_rng));
    s.char_bias = trainable(g, "char_bias", Tensor::zeros({cd}));
    d += cd;
  }
  for (int i = 0; i < 2; ++i) {
    const std::string p = "highway" + std::to_string(i) + "/";
    s.hw_gate_w.push_back(trainable(g, p + "gate_w", ad::glorot_uniform({d, d}, d, d, rng)));
    s.hw_gate_b.push_back(trainable(g, p + "gate_b", Tensor::zeros({d})));
    s.hw_tr_w.push_back(trainable(g, p + "tr_w", ad::glorot_uniform({d, d}, d, d, rng)));
    s.hw_tr_b.push_back(trainable(g, p + "tr_b", Tensor::zeros({d})));
  }
  s.proj = trainable(g, "proj", ad::glorot_uniform({d, h}, d, h, rng));
  for (std::size_t b = 0; b < hp_.embedding_blocks; ++b) {
    s.blocks.push_back(make_encoder_block(g, "emb_enc" + std::to_string(b), h, hp_.embedding_convs,
                                          hp_.kernel, rng));
  }
  if (hp_.cq_placement == CqPlacement::kDependent) {
    s.cq = make_cq_attention(g, "cq", h, rng);
    s.cq_proj = trainable(g, "cq_proj", ad::glorot_uniform({4 * h, h}, 4 * h, h, rng));
  }
}

Tensor QANet::embed(Language lang, const SequenceView& seq, const Context& ctx) const {
  const DependentStackParams& s = stack(lang);
  if (seq.length() == 0) throw ContractError("empty sequence");
  Tensor x = ctx.drop(ad::embedding_lookup(s.word_table, seq.words));
  if (hp_.use_chars) {
    if (seq.char_width == 0) throw ContractError("sequence without character ids");
    Tensor ch = ctx.drop(ad::embedding_lookup(s.char_table, seq.chars), hp_.char_dropout);
    ch = ad::char_conv_max(ch, seq.char_width, seq.char_lengths, s.char_conv, s.char_bias);
    const Tensor parts[] = {x, ch};
    x = ad::concat_cols(parts);
  }
  for (std::size_t i = 0; i < s.hw_gate_w.size(); ++i) {
    x = highway(x, s.hw_gate_w[i], s.hw_gate_b[i], s.hw_tr_w[i], s.hw_tr_b[i], ctx);
  }
  return ad::mask_rows(ad::matmul(x, s.proj), seq.mask);
}

DependentOutput QANet::dependent_forward(Language lang, const SequenceView& q, const SequenceView& d,
                                         const Context& ctx) const {
  const DependentStackParams& s = stack(lang);
  DependentOutput out;
  out.question_mask = q.mask;
  out.document_mask = d.mask;
  Tensor xq = embed(lang, q, ctx);
  Tensor xd = embed(lang, d, ctx);
  for (const auto& block : s.blocks) {
    xq = encoder_block(xq, block, hp_.heads, q.mask, ctx);
    xd = encoder_block(xd, block, hp_.heads, d.mask, ctx);
  }
  if (s.cq) {
    const Tensor att = context_query_attention(xd, xq, d.mask, q.mask, *s.cq);
    xd = ad::mask_rows(ad::matmul(att, s.cq_proj), d.mask);
  }
  out.question = xq;
  out.document = xd;
  return out;
}

SpanDistribution QANet::independent_forward(const DependentOutput& dep, const Context& ctx) const {
  const Mask& mask = dep.document_mask;
  Tensor x = dep.document;
  if (cq_) {
    const Tensor att = context_query_attention(dep.document, dep.question, mask, dep.question_mask, *cq_);
    x = ad::mask_rows(ad::matmul(att, cq_proj_), mask);
  }
  std::array<Tensor, 3> m;
  for (int pass = 0; pass < 3; ++pass) {
    x = ctx.drop(x);
    for (const auto& block : model_blocks_) x = encoder_block(x, block, hp_.heads, mask, ctx);
    m[pass] = x;
  }
  return output_layer(m[0], m[1], m[2], mask, out_);
}

SpanDistribution QANet::forward(Language lang, const SequenceView& q, const SequenceView& d,
                                const Context& ctx) const {
  return independent_forward(dependent_forward(lang, q, d, ctx), ctx);
}

std::pair<int, int> QANet::predict(const SpanDistribution& dist) const {
  return predict_span(dist.p1(), dist.p2(), hp_.max_answer_len);
}

}  // namespace xlqa::model
