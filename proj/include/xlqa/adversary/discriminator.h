#ifndef XLQA_ADVERSARY_DISCRIMINATOR_H_
#define XLQA_ADVERSARY_DISCRIMINATOR_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "xlqa/autodiff/params.h"
#include "xlqa/autodiff/tensor.h"

// Language discriminator D and the adversarial objectives. D(x) is the
// probability that a feature sequence came from the source stack.
namespace xlqa::adversary {

using ad::Mask;
using ad::Tensor;

struct DiscriminatorConfig {
  std::size_t input_dim = 96;
  std::size_t filters = 96;
  std::size_t blocks = 5;
  std::size_t kernel = 5;
  double leaky_slope = 0.2;
};

inline constexpr double kScoreEpsilon = 1e-7;

class Discriminator {
 public:
  struct Block {
    Tensor w1, b1, w2, b2;
  };

  // Parameters are registered in the store's discriminator group.
  Discriminator(const DiscriminatorConfig& cfg, ad::ParameterStore& store, std::uint64_t init_seed);

  const DiscriminatorConfig& config() const { return cfg_; }

  // Pre-sigmoid score of one sequence [L, input_dim].
  Tensor logit(const Tensor& seq, const Mask& mask) const;
  // sigmoid(logit), strictly inside (0, 1).
  double score(const Tensor& seq, const Mask& mask) const;

  std::vector<Block>& blocks() { return blocks_; }
  Tensor& out_w() { return out_w_; }
  Tensor& out_b() { return out_b_; }

 private:
  DiscriminatorConfig cfg_;
  std::optional<Tensor> in_proj_;
  std::vector<Block> blocks_;
  Tensor out_w_, out_b_;
};

// log D and log(1 - D) from a logit, clamped to [log eps, log(1 - eps)].
Tensor log_score(const Tensor& logit);
Tensor log_one_minus_score(const Tensor& logit);

// Σ_tgt log D + Σ_src log(1 - D) over the q and d logits of each language.
// The two batches must have the same number of sequences.
Tensor discriminator_loss(const std::vector<Tensor>& tgt_logits, const std::vector<Tensor>& src_logits);

// Σ of the terms of one language only (the part that reaches one stack).
Tensor discriminator_loss_terms(const std::vector<Tensor>& logits, bool target);

// L_pri = L_qa - λ·L_dis.
Tensor adversarial_generator_loss(const Tensor& l_qa, const Tensor& l_dis, double lambda_g);

}  // namespace xlqa::adversary

#endif  // XLQA_ADVERSARY_DISCRIMINATOR_H_
