#include "xlqa/model/layers.h"

#include <cmath>
#include <map>
#include <mutex>

#include "xlqa/autodiff/ops.h"
#include "xlqa/common/error.h"

namespace xlqa::model {

using ad::Real;

Tensor Context::drop(const Tensor& x, double rate) const {
  if (!training || rate <= 0.0) return x;
  if (!rng) throw ContractError("training context without a dropout generator");
  return ad::dropout(x, static_cast<Real>(rate), *rng, true);
}

Tensor positional_encoding(std::size_t length, std::size_t channels) {
  static std::mutex mu;
  static std::map<std::pair<std::size_t, std::size_t>, Tensor> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(length, channels);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<Real> v(length * channels);
  const std::size_t half = channels / 2;
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < channels; ++i) {
      const std::size_t k = i < half ? i : i - half;
      const double denom = half > 1 ? static_cast<double>(half - 1) : 1.0;
      const double timescale = std::pow(1.0e4, static_cast<double>(k) / denom);
      const double angle = static_cast<double>(pos) / timescale;
      v[pos * channels + i] = static_cast<Real>(i < half ? std::sin(angle) : std::cos(angle));
    }
  }
  Tensor pe({length, channels}, std::move(v));
  cache.emplace(key, pe);
  return pe;
}

namespace {

Tensor ones(std::size_t n) { return Tensor::filled({n}, Real(1), true); }
Tensor zeros(std::size_t n) { return Tensor::zeros({n}, true); }

Tensor& add_param(ad::ParameterGroup& g, const std::string& name, Tensor t) {
  t.set_requires_grad(true);
  return g.add(name, std::move(t));
}

}  // namespace

EncoderBlockParams make_encoder_block(ad::ParameterGroup& group, const std::string& prefix,
                                      std::size_t hidden, std::size_t convs, std::size_t kernel,
                                      std::mt19937_64& rng) {
  EncoderBlockParams p;
  for (std::size_t c = 0; c < convs; ++c) {
    const std::string cp = prefix + "/conv" + std::to_string(c) + "/";
    ConvSublayer s;
    s.ln_gain = add_param(group, cp + "ln_gain", ones(hidden));
    s.ln_bias = add_param(group, cp + "ln_bias", zeros(hidden));
    s.depth = add_param(group, cp + "depth", ad::glorot_uniform({hidden, kernel}, kernel, kernel, rng));
    s.point = add_param(group, cp + "point", ad::glorot_uniform({hidden, hidden}, hidden, hidden, rng));
    s.bias = add_param(group, cp + "bias", zeros(hidden));
    p.convs.push_back(s);
  }
  const std::string ap = prefix + "/att/";
  p.att_ln_gain = add_param(group, ap + "ln_gain", ones(hidden));
  p.att_ln_bias = add_param(group, ap + "ln_bias", zeros(hidden));
  p.wq = add_param(group, ap + "wq", ad::glorot_uniform({hidden, hidden}, hidden, hidden, rng));
  p.wk = add_param(group, ap + "wk", ad::glorot_uniform({hidden, hidden}, hidden, hidden, rng));
  p.wv = add_param(group, ap + "wv", ad::glorot_uniform({hidden, hidden}, hidden, hidden, rng));
  p.wo = add_param(group, ap + "wo", ad::glorot_uniform({hidden, hidden}, hidden, hidden, rng));
  const std::string fp = prefix + "/ffn/";
  p.ffn_ln_gain = add_param(group, fp + "ln_gain", ones(hidden));
  p.ffn_ln_bias = add_param(group, fp + "ln_bias", zeros(hidden));
  p.w1 = add_param(group, fp + "w1", ad::glorot_uniform({hidden, hidden}, hidden, hidden, rng));
  p.b1 = add_param(group, fp + "b1", zeros(hidden));
  p.w2 = add_param(group, fp + "w2", ad::glorot_uniform({hidden, hidden}, hidden, hidden, rng));
  p.b2 = add_param(group, fp + "b2", zeros(hidden));
  return p;
}

Tensor multi_head_self_attention(const Tensor& x, const Tensor& wq, const Tensor& wk,
                                 const Tensor& wv, const Tensor& wo, std::size_t heads,
                                 const Mask& mask) {
  const std::size_t d = x.cols();
  if (heads == 0 || d % heads != 0) {
    throw ContractError("attention width " + std::to_string(d) + " not divisible by " +
                        std::to_string(heads) + " heads");
  }
  const std::size_t dh = d / heads;
  const Real scale = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(dh)));
  const Tensor q = ad::matmul(x, wq);
  const Tensor k = ad::matmul(x, wk);
  const Tensor v = ad::matmul(x, wv);
  std::vector<Tensor> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor qh = heads == 1 ? q : ad::slice_cols(q, h * dh, dh);
    const Tensor kh = heads == 1 ? k : ad::slice_cols(k, h * dh, dh);
    const Tensor vh = heads == 1 ? v : ad::slice_cols(v, h * dh, dh);
    const Tensor scores = ad::scale(ad::matmul_nt(qh, kh), scale);
    outs.push_back(ad::matmul(ad::masked_softmax(scores, 1, mask), vh));
  }
  const Tensor joined = heads == 1 ? outs[0] : ad::concat_cols(outs);
  return ad::matmul(joined, wo);
}

Tensor encoder_block(const Tensor& x_in, const EncoderBlockParams& p, std::size_t heads,
                     const Mask& mask, const Context& ctx) {
  if (x_in.rank() != 2 || mask.size() != x_in.rows()) {
    throw ContractError("encoder block: input " + ad::shape_string(x_in.shape()) +
                        " does not match mask of " + std::to_string(mask.size()));
  }
  const std::size_t hidden = x_in.cols();
  if (p.wq.rows() != hidden) {
    throw ContractError("encoder block: input width " + std::to_string(hidden) +
                        " does not match parameters of width " + std::to_string(p.wq.rows()));
  }
  Tensor x = ad::mask_rows(ad::add(x_in, positional_encoding(x_in.rows(), hidden)), mask);
  for (std::size_t i = 0; i < p.convs.size(); ++i) {
    const ConvSublayer& c = p.convs[i];
    Tensor y = ad::mask_rows(ad::layer_norm(x, c.ln_gain, c.ln_bias), mask);
    if (i % 2 == 0) y = ctx.drop(y);
    y = ad::add_row_vector(ad::depthwise_separable_conv1d(y, c.depth, c.point), c.bias);
    y = ad::mask_rows(ad::relu(y), mask);
    x = ad::add(x, y);
  }
  {
    Tensor y = ctx.drop(ad::layer_norm(x, p.att_ln_gain, p.att_ln_bias));
    y = multi_head_self_attention(y, p.wq, p.wk, p.wv, p.wo, heads, mask);
    x = ad::add(x, y);
  }
  {
    Tensor y = ctx.drop(ad::layer_norm(x, p.ffn_ln_gain, p.ffn_ln_bias));
    y = ad::relu(ad::add_row_vector(ad::matmul(y, p.w1), p.b1));
    y = ad::add_row_vector(ad::matmul(y, p.w2), p.b2);
    x = ad::add(x, y);
  }
  return ad::mask_rows(x, mask);
}

CqAttentionParams make_cq_attention(ad::ParameterGroup& group, const std::string& prefix,
                                    std::size_t hidden, std::mt19937_64& rng) {
  CqAttentionParams p;
  const std::size_t fan = 3 * hidden;
  p.w_c = add_param(group, prefix + "/w_c", ad::glorot_uniform({hidden, 1}, fan, 1, rng));
  p.w_q = add_param(group, prefix + "/w_q", ad::glorot_uniform({hidden, 1}, fan, 1, rng));
  p.w_cq = add_param(group, prefix + "/w_cq", ad::glorot_uniform({hidden}, fan, 1, rng));
  return p;
}

Tensor cq_similarity(const Tensor& c, const Tensor& q, const CqAttentionParams& p) {
  const Tensor sc = ad::matmul(c, p.w_c);
  const Tensor sq = ad::matmul(q, p.w_q);
  return ad::add(ad::outer_add(sc, sq), ad::matmul_nt(ad::mul_row_vector(c, p.w_cq), q));
}

Tensor context_query_attention(const Tensor& c, const Tensor& q, const Mask& c_mask,
                               const Mask& q_mask, const CqAttentionParams& p) {
  if (c.cols() != q.cols()) throw ContractError("context/query width mismatch");
  const Tensor s = cq_similarity(c, q, p);
  const Tensor s_row = ad::masked_softmax(s, 1, q_mask);  // over query positions
  const Tensor s_col = ad::masked_softmax(s, 0, c_mask);  // over context positions
  const Tensor a = ad::matmul(s_row, q);
  const Tensor b = ad::matmul(ad::matmul_nt(s_row, s_col), c);
  const Tensor parts[] = {c, a, ad::mul(c, a), ad::mul(c, b)};
  return ad::mask_rows(ad::concat_cols(parts), c_mask);
}

std::vector<double> SpanDistribution::p1() const {
  std::vector<double> out(log_p1.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask[i] ? std::exp(static_cast<double>(log_p1.at(i))) : 0.0;
  return out;
}

std::vector<double> SpanDistribution::p2() const {
  std::vector<double> out(log_p2.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask[i] ? std::exp(static_cast<double>(log_p2.at(i))) : 0.0;
  return out;
}

SpanDistribution output_layer(const Tensor& m0, const Tensor& m1, const Tensor& m2,
                              const Mask& mask, const OutputParams& p) {
  if (m0.shape() != m1.shape() || m0.shape() != m2.shape()) {
    throw ContractError("output layer: encoder outputs differ in shape");
  }
  const std::size_t len = m0.rows();
  const Tensor a[] = {m0, m1};
  const Tensor b[] = {m0, m2};
  SpanDistribution d;
  d.mask = mask;
  d.log_p1 = ad::masked_log_softmax(ad::reshape(ad::matmul(ad::concat_cols(a), p.w1), {len}), mask);
  d.log_p2 = ad::masked_log_softmax(ad::reshape(ad::matmul(ad::concat_cols(b), p.w2), {len}), mask);
  return d;
}

Tensor span_nll(const SpanDistribution& dist, int y1, int y2) {
  const auto n = static_cast<int>(dist.mask.size());
  if (y1 < 0 || y2 < 0 || y1 >= n || y2 >= n || !dist.mask[y1] || !dist.mask[y2]) {
    throw ContractError("span label (" + std::to_string(y1) + "," + std::to_string(y2) +
                        ") on a masked or missing position");
  }
  return ad::scale(ad::add(ad::pick(dist.log_p1, y1), ad::pick(dist.log_p2, y2)), Real(-1));
}

Tensor qa_loss(const std::vector<SpanDistribution>& dists, const std::vector<int>& y1,
               const std::vector<int>& y2) {
  if (dists.empty() || dists.size() != y1.size() || dists.size() != y2.size()) {
    throw ContractError("qa_loss: batch and label counts differ");
  }
  std::vector<Tensor> terms;
  terms.reserve(dists.size());
  for (std::size_t i = 0; i < dists.size(); ++i) terms.push_back(span_nll(dists[i], y1[i], y2[i]));
  return ad::scale(ad::add_n(terms), Real(1) / static_cast<Real>(dists.size()));
}

std::pair<int, int> predict_span(const std::vector<double>& p1, const std::vector<double>& p2,
                                 std::size_t max_len) {
  if (max_len == 0) throw ContractError("predict_span: max_len must be >= 1");
  if (p1.empty() || p1.size() != p2.size()) throw ContractError("predict_span: bad distributions");
  const std::size_t n = p1.size();
  double best = -1.0;
  std::pair<int, int> arg{0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t last = std::min(n - 1, i + max_len - 1);
    for (std::size_t j = i; j <= last; ++j) {
      const double v = p1[i] * p2[j];
      if (v > best) {
        best = v;
        arg = {static_cast<int>(i), static_cast<int>(j)};
      }
    }
  }
  return arg;
}

}  // namespace xlqa::model
