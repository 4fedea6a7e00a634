#ifndef XLQA_AUTODIFF_OPS_H_
#define XLQA_AUTODIFF_OPS_H_

#include <random>
#include <span>
#include <vector>

#include "xlqa/autodiff/tensor.h"

// Differentiable operations. Matrices are row-major [rows, cols]; sequence
// tensors are [length, channels].
namespace xlqa::ad {

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, Real s);
Tensor add_n(std::span<const Tensor> terms);

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, Real slope);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
// log(sigmoid(x)) computed without cancellation.
Tensor log_sigmoid(const Tensor& x);
// Zero gradient outside [lo, hi].
Tensor clamp(const Tensor& x, Real lo, Real hi);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Element at flat index as a scalar.
Tensor pick(const Tensor& x, std::size_t index);
Tensor reshape(const Tensor& x, Shape shape);
Tensor transpose(const Tensor& x);

// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// [m,k] x [n,k]^T -> [m,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);

// x: [r,c]; v: [c]. Adds / multiplies v into every row.
Tensor add_row_vector(const Tensor& x, const Tensor& v);
Tensor mul_row_vector(const Tensor& x, const Tensor& v);
// a: [m] or [m,1]; b: [n] or [n,1] -> [m,n] with out[i,j] = a[i] + b[j].
Tensor outer_add(const Tensor& a, const Tensor& b);
// Zeroes rows whose mask entry is 0. mask.size() == rows.
Tensor mask_rows(const Tensor& x, const Mask& mask);

Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);

// Softmax along `axis` (rank 1: axis 0; rank 2: axis 0 or 1), stabilized by
// max subtraction. NaN input is rejected.
Tensor softmax(const Tensor& x, int axis);
// As softmax, with entries along `axis` whose mask is 0 excluded (output 0).
// The mask length equals the extent of `axis`.
Tensor masked_softmax(const Tensor& x, int axis, const Mask& mask);
// Rank-1 log-softmax over unmasked entries; masked entries are -inf.
Tensor masked_log_softmax(const Tensor& x, const Mask& mask);

// x: [L,C]; per-row normalization over the last axis, eps = 1e-6.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  Real eps = Real(1e-6));

// x: [L,C]; kernel: [C,k], k odd, zero "same" padding.
Tensor depthwise_conv1d(const Tensor& x, const Tensor& kernel);
// Depthwise pass followed by pointwise mixing. point: [C,Cout].
Tensor depthwise_separable_conv1d(const Tensor& x, const Tensor& depth_kernel,
                                  const Tensor& point_kernel);
// x: [L,Cin]; weight: [k,Cin,Cout], k odd, zero "same" padding.
Tensor conv1d(const Tensor& x, const Tensor& weight);

// table: [V,d]. Gradient scatters into looked-up rows.
Tensor embedding_lookup(const Tensor& table, std::span<const int> ids);

// Inverted dropout. Identity when !training or rate == 0.
Tensor dropout(const Tensor& x, Real rate, std::mt19937_64& rng, bool training);

// x: [L,C] -> [C], mean over rows with nonzero mask. Empty mask is an error.
Tensor masked_mean_rows(const Tensor& x, const Mask& mask);

// Character CNN over words. chars: [words*width, Cin] (row-major per word);
// weight: [k,Cin,F]; bias: [F]. For each word, "same" convolution over its
// first lengths[w] characters, then relu(max over those positions).
// Words of length 0 produce zeros. Result: [words, F].
Tensor char_conv_max(const Tensor& chars, std::size_t width,
                     std::span<const int> lengths, const Tensor& weight,
                     const Tensor& bias);

}  // namespace xlqa::ad

#endif  // XLQA_AUTODIFF_OPS_H_
