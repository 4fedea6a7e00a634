#ifndef XLQA_MODEL_LAYERS_H_
#define XLQA_MODEL_LAYERS_H_

#include <random>
#include <string>
#include <vector>

#include "xlqa/autodiff/params.h"
#include "xlqa/autodiff/tensor.h"

// Building blocks of the QA network. Every sequence is [length, channels]
// for a single example; masks mark real positions.
namespace xlqa::model {

using ad::Mask;
using ad::Tensor;

// Train/eval switch and the dropout generator of the current step.
struct Context {
  bool training = false;
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;

  Tensor drop(const Tensor& x, double rate) const;
  Tensor drop(const Tensor& x) const { return drop(x, dropout); }
};

// Fixed sinusoidal position signal, [length, channels].
Tensor positional_encoding(std::size_t length, std::size_t channels);

struct ConvSublayer {
  Tensor ln_gain, ln_bias, depth, point, bias;
};

struct EncoderBlockParams {
  std::vector<ConvSublayer> convs;
  Tensor att_ln_gain, att_ln_bias, wq, wk, wv, wo;
  Tensor ffn_ln_gain, ffn_ln_bias, w1, b1, w2, b2;
};

EncoderBlockParams make_encoder_block(ad::ParameterGroup& group, const std::string& prefix,
                                      std::size_t hidden, std::size_t convs, std::size_t kernel,
                                      std::mt19937_64& rng);

// Scaled dot-product attention per head over unmasked keys, heads
// concatenated and projected by wo.
Tensor multi_head_self_attention(const Tensor& x, const Tensor& wq, const Tensor& wk,
                                 const Tensor& wv, const Tensor& wo, std::size_t heads,
                                 const Mask& mask);

// x + PE, then residual conv sublayers, self-attention and feed-forward,
// each applied to layer_norm of its input. Padded rows of the result are 0.
Tensor encoder_block(const Tensor& x, const EncoderBlockParams& p, std::size_t heads,
                     const Mask& mask, const Context& ctx);

struct CqAttentionParams {
  Tensor w_c, w_q, w_cq;  // [H,1], [H,1], [H]
};

CqAttentionParams make_cq_attention(ad::ParameterGroup& group, const std::string& prefix,
                                    std::size_t hidden, std::mt19937_64& rng);

// Trilinear similarity S[i,j] = w_c.c_i + w_q.q_j + w_cq.(c_i*q_j).
Tensor cq_similarity(const Tensor& c, const Tensor& q, const CqAttentionParams& p);

// [c; A; c*A; c*B] with A = softmax_j(S) Q and B = softmax_j(S) softmax_i(S)^T C.
Tensor context_query_attention(const Tensor& c, const Tensor& q, const Mask& c_mask,
                               const Mask& q_mask, const CqAttentionParams& p);

struct OutputParams {
  Tensor w1, w2;  // [2H,1]
};

// Log-probabilities of start and end over document positions (masked
// positions are -inf).
struct SpanDistribution {
  Tensor log_p1, log_p2;  // [L]
  Mask mask;

  std::vector<double> p1() const;
  std::vector<double> p2() const;
};

SpanDistribution output_layer(const Tensor& m0, const Tensor& m1, const Tensor& m2,
                              const Mask& mask, const OutputParams& p);

// -(log p1[y1] + log p2[y2]) for one example.
Tensor span_nll(const SpanDistribution& dist, int y1, int y2);

// Mean of span_nll over a batch of distributions.
Tensor qa_loss(const std::vector<SpanDistribution>& dists, const std::vector<int>& y1,
               const std::vector<int>& y2);

// argmax over i <= j <= i + max_len - 1 of p1[i] * p2[j]; ties go to the
// smaller i, then the smaller j.
std::pair<int, int> predict_span(const std::vector<double>& p1, const std::vector<double>& p2,
                                 std::size_t max_len);

}  // namespace xlqa::model

#endif  // XLQA_MODEL_LAYERS_H_
