#include "xlqa/adversary/discriminator.h"

#include <cmath>

#include "xlqa/autodiff/ops.h"
#include "xlqa/common/error.h"

namespace xlqa::adversary {

using ad::Real;

namespace {

Tensor& trainable(ad::ParameterGroup& g, const std::string& name, Tensor t) {
  t.set_requires_grad(true);
  return g.add(name, std::move(t));
}

const Real kLogLo = static_cast<Real>(std::log(kScoreEpsilon));
const Real kLogHi = static_cast<Real>(std::log1p(-kScoreEpsilon));

}  // namespace

Discriminator::Discriminator(const DiscriminatorConfig& cfg, ad::ParameterStore& store,
                             std::uint64_t init_seed)
    : cfg_(cfg) {
  if (cfg.input_dim == 0 || cfg.filters == 0 || cfg.blocks == 0) {
    throw ConfigError("discriminator sizes must be positive");
  }
  if (cfg.kernel % 2 == 0) throw ConfigError("discriminator kernel width must be odd");
  std::mt19937_64 rng(init_seed);
  ad::ParameterGroup& g = store.group(ad::GroupId::kDiscriminator);
  const std::size_t f = cfg.filters, k = cfg.kernel;
  if (cfg.input_dim != f) {
    in_proj_ = trainable(g, "in_proj", ad::glorot_uniform({cfg.input_dim, f}, cfg.input_dim, f, rng));
  }
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    const std::string p = "res" + std::to_string(b) + "/";
    Block blk;
    blk.w1 = trainable(g, p + "w1", ad::glorot_uniform({k, f, f}, k * f, k * f, rng));
    blk.b1 = trainable(g, p + "b1", Tensor::zeros({f}));
    blk.w2 = trainable(g, p + "w2", ad::glorot_uniform({k, f, f}, k * f, k * f, rng));
    blk.b2 = trainable(g, p + "b2", Tensor::zeros({f}));
    blocks_.push_back(blk);
  }
  out_w_ = trainable(g, "out_w", ad::glorot_uniform({f, 1}, f, 1, rng));
  out_b_ = trainable(g, "out_b", Tensor::zeros({1}));
}

Tensor Discriminator::logit(const Tensor& seq, const Mask& mask) const {
  if (seq.rank() != 2 || seq.rows() == 0) throw ContractError("discriminator: empty sequence");
  if (seq.cols() != cfg_.input_dim) {
    throw ContractError("discriminator: input width " + std::to_string(seq.cols()) + ", expected " +
                        std::to_string(cfg_.input_dim));
  }
  if (mask.size() != seq.rows()) throw ContractError("discriminator: mask length mismatch");
  const Real slope = static_cast<Real>(cfg_.leaky_slope);
  Tensor x = ad::mask_rows(in_proj_ ? ad::matmul(seq, *in_proj_) : seq, mask);
  for (const Block& b : blocks_) {
    Tensor y = ad::mask_rows(ad::leaky_relu(ad::add_row_vector(ad::conv1d(x, b.w1), b.b1), slope), mask);
    y = ad::add_row_vector(ad::conv1d(y, b.w2), b.b2);
    x = ad::mask_rows(ad::leaky_relu(ad::add(x, y), slope), mask);
  }
  const Tensor pooled = ad::reshape(ad::masked_mean_rows(x, mask), {1, cfg_.filters});
  return ad::add(ad::reshape(ad::matmul(pooled, out_w_), {1}), out_b_);
}

double Discriminator::score(const Tensor& seq, const Mask& mask) const {
  ad::NoGradGuard guard;
  const double z = static_cast<double>(logit(seq, mask).item());
  return 1.0 / (1.0 + std::exp(-z));
}

Tensor log_score(const Tensor& logit) { return ad::clamp(ad::log_sigmoid(logit), kLogLo, kLogHi); }

Tensor log_one_minus_score(const Tensor& logit) {
  return ad::clamp(ad::log_sigmoid(ad::scale(logit, Real(-1))), kLogLo, kLogHi);
}

Tensor discriminator_loss_terms(const std::vector<Tensor>& logits, bool target) {
  if (logits.empty()) throw ContractError("discriminator loss over an empty batch");
  std::vector<Tensor> terms;
  terms.reserve(logits.size());
  for (const Tensor& z : logits) terms.push_back(target ? log_score(z) : log_one_minus_score(z));
  return ad::add_n(terms);
}

Tensor discriminator_loss(const std::vector<Tensor>& tgt_logits, const std::vector<Tensor>& src_logits) {
  if (tgt_logits.size() != src_logits.size()) {
    throw ContractError("discriminator loss: batch sizes differ (" + std::to_string(tgt_logits.size()) +
                        " vs " + std::to_string(src_logits.size()) + ")");
  }
  return ad::add(discriminator_loss_terms(tgt_logits, true), discriminator_loss_terms(src_logits, false));
}

Tensor adversarial_generator_loss(const Tensor& l_qa, const Tensor& l_dis, double lambda_g) {
  if (!(lambda_g >= 0.0)) throw ContractError("lambda_g must be non-negative");
  return ad::sub(l_qa, ad::scale(l_dis, static_cast<Real>(lambda_g)));
}

}  // namespace xlqa::adversary
