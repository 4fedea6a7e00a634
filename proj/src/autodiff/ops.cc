#include "xlqa/autodiff/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xlqa/common/error.h"

namespace xlqa::ad {

namespace {

using detail::Node;

Node* raw(const Tensor& t) { return t.node().get(); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ContractError(std::string(op) + ": shape mismatch " +
                        shape_string(a.shape()) + " vs " +
                        shape_string(b.shape()));
  }
}

void require_rank2(const Tensor& x, const char* op) {
  if (x.rank() != 2) {
    throw ContractError(std::string(op) + ": expected rank-2 tensor, got " +
                        shape_string(x.shape()));
  }
}

// Elementwise unary op given f(x) and f'(x, y).
template <typename F, typename D>
Tensor unary(const Tensor& x, F f, D df) {
  std::vector<Real> out(x.size());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  return make_op_result(x.shape(), std::move(out), {x},
                        [px = raw(x), df](Node& self) {
                          if (!px->requires_grad) return;
                          auto& g = px->grad_storage();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            g[i] += self.grad[i] * df(px->value[i], self.value[i]);
                          }
                        });
}

// c[m,n] += a[m,k] * b[k,n]
void gemm_nn(const Real* a, const Real* b, Real* c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    Real* ci = c + i * n;
    const Real* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Real aip = ai[p];
      if (aip == Real(0)) continue;
      const Real* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// c[m,n] += a[m,k] * b[n,k]^T
void gemm_nt(const Real* a, const Real* b, Real* c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const Real* ai = a + i * k;
    Real* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const Real* bj = b + j * k;
      Real s = 0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] += s;
    }
  }
}

// c[k,n] += a[m,k]^T * b[m,n]
void gemm_tn(const Real* a, const Real* b, Real* c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const Real* ai = a + i * k;
    const Real* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real aip = ai[p];
      if (aip == Real(0)) continue;
      Real* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += aip * bi[j];
    }
  }
}

void check_finite(const Tensor& x, const char* op) {
  for (Real v : x.values()) {
    if (std::isnan(v)) throw ContractError(std::string(op) + ": NaN input");
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<Real> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_op_result(a.shape(), std::move(out), {a, b},
                        [pa = raw(a), pb = raw(b)](Node& self) {
                          for (Node* p : {pa, pb}) {
                            if (!p->requires_grad) continue;
                            auto& g = p->grad_storage();
                            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                          }
                        });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<Real> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return make_op_result(a.shape(), std::move(out), {a, b},
                        [pa = raw(a), pb = raw(b)](Node& self) {
                          if (pa->requires_grad) {
                            auto& g = pa->grad_storage();
                            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                          }
                          if (pb->requires_grad) {
                            auto& g = pb->grad_storage();
                            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
                          }
                        });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<Real> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_op_result(a.shape(), std::move(out), {a, b},
                        [pa = raw(a), pb = raw(b)](Node& self) {
                          if (pa->requires_grad) {
                            auto& g = pa->grad_storage();
                            for (std::size_t i = 0; i < g.size(); ++i)
                              g[i] += self.grad[i] * pb->value[i];
                          }
                          if (pb->requires_grad) {
                            auto& g = pb->grad_storage();
                            for (std::size_t i = 0; i < g.size(); ++i)
                              g[i] += self.grad[i] * pa->value[i];
                          }
                        });
}

Tensor scale(const Tensor& x, Real s) {
  std::vector<Real> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.values()[i] * s;
  return make_op_result(x.shape(), std::move(out), {x},
                        [px = raw(x), s](Node& self) {
                          if (!px->requires_grad) return;
                          auto& g = px->grad_storage();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * s;
                        });
}

Tensor add_n(std::span<const Tensor> terms) {
  if (terms.empty()) throw ContractError("add_n: no terms");
  for (const Tensor& t : terms) require_same_shape(terms[0], t, "add_n");
  std::vector<Real> out(terms[0].size(), Real(0));
  for (const Tensor& t : terms) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += t.values()[i];
  }
  std::vector<Tensor> parents(terms.begin(), terms.end());
  std::vector<Node*> ps;
  for (const Tensor& t : terms) ps.push_back(raw(t));
  return make_op_result(terms[0].shape(), std::move(out), std::move(parents),
                        [ps](Node& self) {
                          for (Node* p : ps) {
                            if (!p->requires_grad) continue;
                            auto& g = p->grad_storage();
                            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                          }
                        });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](Real v) { return v > 0 ? v : Real(0); },
      [](Real v, Real) { return v > 0 ? Real(1) : Real(0); });
}

Tensor leaky_relu(const Tensor& x, Real slope) {
  return unary(
      x, [slope](Real v) { return v > 0 ? v : slope * v; },
      [slope](Real v, Real) { return v > 0 ? Real(1) : slope; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x,
      [](Real v) {
        if (v >= 0) return Real(1) / (Real(1) + std::exp(-v));
        const Real e = std::exp(v);
        return e / (Real(1) + e);
      },
      [](Real, Real y) { return y * (Real(1) - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(
      x, [](Real v) { return std::tanh(v); },
      [](Real, Real y) { return Real(1) - y * y; });
}

Tensor exp(const Tensor& x) {
  return unary(
      x, [](Real v) { return std::exp(v); }, [](Real, Real y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary(
      x, [](Real v) { return std::log(v); }, [](Real v, Real) { return Real(1) / v; });
}

Tensor log_sigmoid(const Tensor& x) {
  // log s(v) = -softplus(-v); d/dv = 1 - s(v) = s(-v).
  return unary(
      x,
      [](Real v) {
        return v >= 0 ? -std::log1p(std::exp(-v)) : v - std::log1p(std::exp(v));
      },
      [](Real v, Real) {
        if (v >= 0) {
          const Real e = std::exp(-v);
          return e / (Real(1) + e);
        }
        return Real(1) / (Real(1) + std::exp(v));
      });
}

Tensor clamp(const Tensor& x, Real lo, Real hi) {
  if (lo > hi) throw ContractError("clamp: lo > hi");
  return unary(
      x, [lo, hi](Real v) { return std::min(std::max(v, lo), hi); },
      [lo, hi](Real v, Real) { return (v >= lo && v <= hi) ? Real(1) : Real(0); });
}

Tensor sum(const Tensor& x) {
  Real s = 0;
  for (Real v : x.values()) s += v;
  return make_op_result({1}, {s}, {x}, [px = raw(x)](Node& self) {
    if (!px->requires_grad) return;
    auto& g = px->grad_storage();
    for (Real& gi : g) gi += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  return scale(sum(x), Real(1) / static_cast<Real>(x.size()));
}

Tensor pick(const Tensor& x, std::size_t index) {
  if (index >= x.size()) throw ContractError("pick: index out of range");
  return make_op_result({1}, {x.values()[index]}, {x},
                        [px = raw(x), index](Node& self) {
                          if (!px->requires_grad) return;
                          px->grad_storage()[index] += self.grad[0];
                        });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw ContractError("reshape: " + shape_string(x.shape()) + " -> " +
                        shape_string(shape));
  }
  std::vector<Real> out(x.values().begin(), x.values().end());
  return make_op_result(std::move(shape), std::move(out), {x},
                        [px = raw(x)](Node& self) {
                          if (!px->requires_grad) return;
                          auto& g = px->grad_storage();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                        });
}

Tensor transpose(const Tensor& x) {
  require_rank2(x, "transpose");
  const std::size_t r = x.dim(0), c = x.dim(1);
  std::vector<Real> out(x.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x.values()[i * c + j];
  return make_op_result({c, r}, std::move(out), {x}, [px = raw(x), r, c](Node& self) {
    if (!px->requires_grad) return;
    auto& g = px->grad_storage();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ContractError("matmul: inner dimensions differ " +
                        shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  std::vector<Real> out(m * n, Real(0));
  gemm_nn(a.values().data(), b.values().data(), out.data(), m, k, n);
  return make_op_result({m, n}, std::move(out), {a, b},
                        [pa = raw(a), pb = raw(b), m, k, n](Node& self) {
                          if (pa->requires_grad) {
                            gemm_nt(self.grad.data(), pb->value.data(),
                                    pa->grad_storage().data(), m, n, k);
                          }
                          if (pb->requires_grad) {
                            gemm_tn(pa->value.data(), self.grad.data(),
                                    pb->grad_storage().data(), m, k, n);
                          }
                        });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) {
    throw ContractError("matmul_nt: inner dimensions differ " +
                        shape_string(a.shape()) + " x " + shape_string(b.shape()) + "^T");
  }
  std::vector<Real> out(m * n, Real(0));
  gemm_nt(a.values().data(), b.values().data(), out.data(), m, k, n);
  return make_op_result({m, n}, std::move(out), {a, b},
                        [pa = raw(a), pb = raw(b), m, k, n](Node& self) {
                          // dA = dC B ; dB = dC^T A
                          if (pa->requires_grad) {
                            gemm_nn(self.grad.data(), pb->value.data(),
                                    pa->grad_storage().data(), m, n, k);
                          }
                          if (pb->requires_grad) {
                            gemm_tn(self.grad.data(), pa->value.data(),
                                    pb->grad_storage().data(), m, n, k);
                          }
                        });
}

Tensor add_row_vector(const Tensor& x, const Tensor& v) {
  const std::size_t r = x.rows(), c = x.cols();
  if (v.size() != c) throw ContractError("add_row_vector: width mismatch");
  std::vector<Real> out(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += v.values()[j];
  return make_op_result(x.shape(), std::move(out), {x, v},
                        [px = raw(x), pv = raw(v), r, c](Node& self) {
                          if (px->requires_grad) {
                            auto& g = px->grad_storage();
                            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                          }
                          if (pv->requires_grad) {
                            auto& g = pv->grad_storage();
                            for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[i * c + j];
                          }
                        });
}

Tensor mul_row_vector(const Tensor& x, const Tensor& v) {
  const std::size_t r = x.rows(), c = x.cols();
  if (v.size() != c) throw ContractError("mul_row_vector: width mismatch");
  std::vector<Real> out(x.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out[i * c + j] = x.values()[i * c + j] * v.values()[j];
  return make_op_result(x.shape(), std::move(out), {x, v},
                        [px = raw(x), pv = raw(v), r, c](Node& self) {
                          if (px->requires_grad) {
                            auto& g = px->grad_storage();
                            for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < c; ++j)
                                g[i * c + j] += self.grad[i * c + j] * pv->value[j];
                          }
                          if (pv->requires_grad) {
                            auto& g = pv->grad_storage();
                            for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < c; ++j)
                                g[j] += self.grad[i * c + j] * px->value[i * c + j];
                          }
                        });
}

Tensor outer_add(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.size(), n = b.size();
  if ((a.rank() == 2 && a.dim(1) != 1) || (b.rank() == 2 && b.dim(1) != 1) ||
      a.rank() > 2 || b.rank() > 2) {
    throw ContractError("outer_add: expected vectors or column matrices");
  }
  std::vector<Real> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a.values()[i] + b.values()[j];
  return make_op_result({m, n}, std::move(out), {a, b},
                        [pa = raw(a), pb = raw(b), m, n](Node& self) {
                          if (pa->requires_grad) {
                            auto& g = pa->grad_storage();
                            for (std::size_t i = 0; i < m; ++i) {
                              Real s = 0;
                              for (std::size_t j = 0; j < n; ++j) s += self.grad[i * n + j];
                              g[i] += s;
                            }
                          }
                          if (pb->requires_grad) {
                            auto& g = pb->grad_storage();
                            for (std::size_t i = 0; i < m; ++i)
                              for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
                          }
                        });
}

Tensor mask_rows(const Tensor& x, const Mask& mask) {
  const std::size_t r = x.rows(), c = x.cols();
  if (mask.size() != r) throw ContractError("mask_rows: mask length mismatch");
  std::vector<Real> out(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < r; ++i)
    if (!mask[i]) std::fill_n(out.begin() + i * c, c, Real(0));
  return make_op_result(x.shape(), std::move(out), {x},
                        [px = raw(x), mask, c](Node& self) {
                          if (!px->requires_grad) return;
                          auto& g = px->grad_storage();
                          for (std::size_t i = 0; i < mask.size(); ++i) {
                            if (!mask[i]) continue;
                            for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[i * c + j];
                          }
                        });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no parts");
  const std::size_t r = parts[0].rows();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const Tensor& p : parts) {
    if (p.rows() != r) throw ContractError("concat_cols: row count mismatch");
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<Real> out(r * total);
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t w = widths[k];
    const auto v = parts[k].values();
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(v.begin() + i * w, w, out.begin() + i * total + off);
    off += w;
  }
  std::vector<Node*> ps;
  for (const Tensor& p : parts) ps.push_back(raw(p));
  return make_op_result({r, total}, std::move(out),
                        std::vector<Tensor>(parts.begin(), parts.end()),
                        [ps, widths, r, total](Node& self) {
                          std::size_t off = 0;
                          for (std::size_t k = 0; k < ps.size(); ++k) {
                            const std::size_t w = widths[k];
                            if (ps[k]->requires_grad) {
                              auto& g = ps[k]->grad_storage();
                              for (std::size_t i = 0; i < r; ++i)
                                for (std::size_t j = 0; j < w; ++j)
                                  g[i * w + j] += self.grad[i * total + off + j];
                            }
                            off += w;
                          }
                        });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  const std::size_t r = x.rows(), c = x.cols();
  if (count == 0 || begin + count > c) throw ContractError("slice_cols: out of range");
  std::vector<Real> out(r * count);
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(x.values().begin() + i * c + begin, count, out.begin() + i * count);
  return make_op_result({r, count}, std::move(out), {x},
                        [px = raw(x), r, c, begin, count](Node& self) {
                          if (!px->requires_grad) return;
                          auto& g = px->grad_storage();
                          for (std::size_t i = 0; i < r; ++i)
                            for (std::size_t j = 0; j < count; ++j)
                              g[i * c + begin + j] += self.grad[i * count + j];
                        });
}

namespace {

// Shared by softmax and masked_softmax. `mask` may be empty (all valid).
Tensor softmax_impl(const Tensor& x, int axis, const Mask* mask) {
  check_finite(x, "softmax");
  std::size_t outer, inner, stride_outer, stride_inner;
  if (x.rank() == 1) {
    if (axis != 0) throw ContractError("softmax: bad axis for rank 1");
    outer = 1;
    inner = x.size();
    stride_outer = 0;
    stride_inner = 1;
  } else if (x.rank() == 2) {
    const std::size_t r = x.dim(0), c = x.dim(1);
    if (axis == 1) {
      outer = r; inner = c; stride_outer = c; stride_inner = 1;
    } else if (axis == 0) {
      outer = c; inner = r; stride_outer = 1; stride_inner = c;
    } else {
      throw ContractError("softmax: bad axis for rank 2");
    }
  } else {
    throw ContractError("softmax: rank must be 1 or 2");
  }
  if (mask && mask->size() != inner) {
    throw ContractError("masked_softmax: mask length mismatch");
  }
  const auto xv = x.values();
  std::vector<Real> out(x.size(), Real(0));
  for (std::size_t o = 0; o < outer; ++o) {
    Real mx = -std::numeric_limits<Real>::infinity();
    for (std::size_t i = 0; i < inner; ++i) {
      if (mask && !(*mask)[i]) continue;
      mx = std::max(mx, xv[o * stride_outer + i * stride_inner]);
    }
    if (mx == -std::numeric_limits<Real>::infinity()) continue;
    Real z = 0;
    for (std::size_t i = 0; i < inner; ++i) {
      if (mask && !(*mask)[i]) continue;
      const std::size_t idx = o * stride_outer + i * stride_inner;
      out[idx] = std::exp(xv[idx] - mx);
      z += out[idx];
    }
    for (std::size_t i = 0; i < inner; ++i) out[o * stride_outer + i * stride_inner] /= z;
  }
  return make_op_result(x.shape(), std::move(out), {x},
                        [px = raw(x), outer, inner, stride_outer, stride_inner](Node& self) {
                          if (!px->requires_grad) return;
                          auto& g = px->grad_storage();
                          for (std::size_t o = 0; o < outer; ++o) {
                            Real dot = 0;
                            for (std::size_t i = 0; i < inner; ++i) {
                              const std::size_t idx = o * stride_outer + i * stride_inner;
                              dot += self.grad[idx] * self.value[idx];
                            }
                            for (std::size_t i = 0; i < inner; ++i) {
                              const std::size_t idx = o * stride_outer + i * stride_inner;
                              g[idx] += self.value[idx] * (self.grad[idx] - dot);
                            }
                          }
                        });
}

}  // namespace

Tensor softmax(const Tensor& x, int axis) { return softmax_impl(x, axis, nullptr); }

Tensor masked_softmax(const Tensor& x, int axis, const Mask& mask) {
  return softmax_impl(x, axis, &mask);
}

Tensor masked_log_softmax(const Tensor& x, const Mask& mask) {
  check_finite(x, "masked_log_softmax");
  const std::size_t n = x.size();
  if (mask.size() != n) throw ContractError("masked_log_softmax: mask length mismatch");
  const auto xv = x.values();
  Real mx = -std::numeric_limits<Real>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (mask[i]) mx = std::max(mx, xv[i]);
  if (mx == -std::numeric_limits<Real>::infinity()) {
    throw ContractError("masked_log_softmax: every position is masked");
  }
  Real z = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (mask[i]) z += std::exp(xv[i] - mx);
  const Real log_z = mx + std::log(z);
  std::vector<Real> out(n, -std::numeric_limits<Real>::infinity());
  for (std::size_t i = 0; i < n; ++i)
    if (mask[i]) out[i] = xv[i] - log_z;
  return make_op_result(x.shape(), std::move(out), {x}, [px = raw(x), mask](Node& self) {
    if (!px->requires_grad) return;
    auto& g = px->grad_storage();
    Real gsum = 0;
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) gsum += self.grad[i];
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (!mask[i]) continue;
      g[i] += self.grad[i] - std::exp(self.value[i]) * gsum;
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, Real eps) {
  const std::size_t r = x.rows(), c = x.cols();
  if (gain.size() != c || bias.size() != c) {
    throw ContractError("layer_norm: gain/bias width mismatch");
  }
  const auto xv = x.values();
  std::vector<Real> xhat(x.size()), inv_std(r), out(x.size());
  for (std::size_t i = 0; i < r; ++i) {
    const Real* row = xv.data() + i * c;
    Real mu = 0;
    for (std::size_t j = 0; j < c; ++j) mu += row[j];
    mu /= static_cast<Real>(c);
    Real var = 0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<Real>(c);
    inv_std[i] = Real(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      xhat[i * c + j] = (row[j] - mu) * inv_std[i];
      out[i * c + j] = xhat[i * c + j] * gain.values()[j] + bias.values()[j];
    }
  }
  return make_op_result(
      x.shape(), std::move(out), {x, gain, bias},
      [px = raw(x), pg = raw(gain), pb = raw(bias), xhat = std::move(xhat),
       inv_std = std::move(inv_std), r, c](Node& self) {
        if (pg->requires_grad) {
          auto& g = pg->grad_storage();
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[i * c + j] * xhat[i * c + j];
        }
        if (pb->requires_grad) {
          auto& g = pb->grad_storage();
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[i * c + j];
        }
        if (px->requires_grad) {
          auto& g = px->grad_storage();
          const Real inv_c = Real(1) / static_cast<Real>(c);
          for (std::size_t i = 0; i < r; ++i) {
            Real s1 = 0, s2 = 0;
            for (std::size_t j = 0; j < c; ++j) {
              const Real d = self.grad[i * c + j] * pg->value[j];
              s1 += d;
              s2 += d * xhat[i * c + j];
            }
            for (std::size_t j = 0; j < c; ++j) {
              const Real d = self.grad[i * c + j] * pg->value[j];
              g[i * c + j] += inv_std[i] * (d - inv_c * s1 - xhat[i * c + j] * inv_c * s2);
            }
          }
        }
      });
}

Tensor depthwise_conv1d(const Tensor& x, const Tensor& kernel) {
  require_rank2(x, "depthwise_conv1d");
  require_rank2(kernel, "depthwise_conv1d");
  const std::size_t len = x.dim(0), ch = x.dim(1), k = kernel.dim(1);
  if (kernel.dim(0) != ch) throw ContractError("depthwise_conv1d: channel mismatch");
  if (k % 2 == 0) throw ContractError("depthwise_conv1d: kernel width must be odd");
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
  const auto xv = x.values();
  const auto kv = kernel.values();
  std::vector<Real> out(len * ch, Real(0));
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(j) - half;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
      const Real* xr = xv.data() + src * ch;
      Real* o = out.data() + t * ch;
      for (std::size_t c = 0; c < ch; ++c) o[c] += kv[c * k + j] * xr[c];
    }
  }
  return make_op_result(
      x.shape(), std::move(out), {x, kernel},
      [px = raw(x), pk = raw(kernel), len, ch, k, half](Node& self) {
        Real* gx = px->requires_grad ? px->grad_storage().data() : nullptr;
        Real* gk = pk->requires_grad ? pk->grad_storage().data() : nullptr;
        for (std::size_t t = 0; t < len; ++t) {
          const Real* go = self.grad.data() + t * ch;
          for (std::size_t j = 0; j < k; ++j) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(j) - half;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
            const Real* xr = px->value.data() + src * ch;
            if (gx) {
              Real* g = gx + src * ch;
              for (std::size_t c = 0; c < ch; ++c) g[c] += pk->value[c * k + j] * go[c];
            }
            if (gk) {
              for (std::size_t c = 0; c < ch; ++c) gk[c * k + j] += xr[c] * go[c];
            }
          }
        }
      });
}

Tensor depthwise_separable_conv1d(const Tensor& x, const Tensor& depth_kernel,
                                  const Tensor& point_kernel) {
  return matmul(depthwise_conv1d(x, depth_kernel), point_kernel);
}

Tensor conv1d(const Tensor& x, const Tensor& weight) {
  require_rank2(x, "conv1d");
  if (weight.rank() != 3) throw ContractError("conv1d: weight must be [k,Cin,Cout]");
  const std::size_t len = x.dim(0), cin = x.dim(1);
  const std::size_t k = weight.dim(0), cout = weight.dim(2);
  if (weight.dim(1) != cin) throw ContractError("conv1d: input channel mismatch");
  if (k % 2 == 0) throw ContractError("conv1d: kernel width must be odd");
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
  const std::ptrdiff_t slen = static_cast<std::ptrdiff_t>(len);
  std::vector<Real> out(len * cout, Real(0));
  const Real* xv = x.values().data();
  const Real* wv = weight.values().data();
  for (std::size_t j = 0; j < k; ++j) {
    const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - half;
    const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -shift);
    const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(slen, slen - shift);
    if (t1 <= t0) continue;
    gemm_nn(xv + (t0 + shift) * cin, wv + j * cin * cout, out.data() + t0 * cout,
            static_cast<std::size_t>(t1 - t0), cin, cout);
  }
  return make_op_result(
      {len, cout}, std::move(out), {x, weight},
      [px = raw(x), pw = raw(weight), len, cin, cout, k, half](Node& self) {
        const std::ptrdiff_t slen = static_cast<std::ptrdiff_t>(len);
        for (std::size_t j = 0; j < k; ++j) {
          const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - half;
          const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -shift);
          const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(slen, slen - shift);
          if (t1 <= t0) continue;
          const std::size_t rows = static_cast<std::size_t>(t1 - t0);
          if (px->requires_grad) {
            gemm_nt(self.grad.data() + t0 * cout, pw->value.data() + j * cin * cout,
                    px->grad_storage().data() + (t0 + shift) * cin, rows, cout, cin);
          }
          if (pw->requires_grad) {
            gemm_tn(px->value.data() + (t0 + shift) * cin, self.grad.data() + t0 * cout,
                    pw->grad_storage().data() + j * cin * cout, rows, cin, cout);
          }
        }
      });
}

Tensor embedding_lookup(const Tensor& table, std::span<const int> ids) {
  require_rank2(table, "embedding_lookup");
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  if (ids.empty()) throw ContractError("embedding_lookup: no ids");
  std::vector<int> idv(ids.begin(), ids.end());
  std::vector<Real> out(idv.size() * d);
  for (std::size_t i = 0; i < idv.size(); ++i) {
    if (idv[i] < 0 || static_cast<std::size_t>(idv[i]) >= vocab) {
      throw ContractError("embedding_lookup: id " + std::to_string(idv[i]) +
                          " outside [0," + std::to_string(vocab) + ")");
    }
    std::copy_n(table.values().begin() + idv[i] * d, d, out.begin() + i * d);
  }
  const std::size_t n = idv.size();
  return make_op_result({n, d}, std::move(out), {table},
                        [pt = raw(table), idv = std::move(idv), d](Node& self) {
                          if (!pt->requires_grad) return;
                          auto& g = pt->grad_storage();
                          for (std::size_t i = 0; i < idv.size(); ++i)
                            for (std::size_t j = 0; j < d; ++j)
                              g[idv[i] * d + j] += self.grad[i * d + j];
                        });
}

Tensor dropout(const Tensor& x, Real rate, std::mt19937_64& rng, bool training) {
  if (rate < 0 || rate >= 1) throw ContractError("dropout: rate must be in [0,1)");
  if (!training || rate == 0) return x;
  const Real keep_scale = Real(1) / (Real(1) - rate);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Real> keep(x.size());
  for (Real& k : keep) k = unif(rng) < rate ? Real(0) : keep_scale;
  std::vector<Real> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.values()[i] * keep[i];
  return make_op_result(x.shape(), std::move(out), {x},
                        [px = raw(x), keep = std::move(keep)](Node& self) {
                          if (!px->requires_grad) return;
                          auto& g = px->grad_storage();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * keep[i];
                        });
}

Tensor masked_mean_rows(const Tensor& x, const Mask& mask) {
  const std::size_t r = x.rows(), c = x.cols();
  if (mask.size() != r) throw ContractError("masked_mean_rows: mask length mismatch");
  std::size_t count = 0;
  for (auto m : mask) count += m ? 1 : 0;
  if (count == 0) throw ContractError("masked_mean_rows: no unmasked rows");
  const Real inv = Real(1) / static_cast<Real>(count);
  std::vector<Real> out(c, Real(0));
  for (std::size_t i = 0; i < r; ++i) {
    if (!mask[i]) continue;
    for (std::size_t j = 0; j < c; ++j) out[j] += x.values()[i * c + j];
  }
  for (Real& v : out) v *= inv;
  return make_op_result({c}, std::move(out), {x}, [px = raw(x), mask, c, inv](Node& self) {
    if (!px->requires_grad) return;
    auto& g = px->grad_storage();
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (!mask[i]) continue;
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j] * inv;
    }
  });
}

Tensor char_conv_max(const Tensor& chars, std::size_t width, std::span<const int> lengths,
                     const Tensor& weight, const Tensor& bias) {
  require_rank2(chars, "char_conv_max");
  if (weight.rank() != 3) throw ContractError("char_conv_max: weight must be [k,Cin,F]");
  const std::size_t words = lengths.size();
  const std::size_t cin = chars.dim(1);
  const std::size_t k = weight.dim(0), f = weight.dim(2);
  if (chars.dim(0) != words * width) throw ContractError("char_conv_max: row count mismatch");
  if (weight.dim(1) != cin || bias.size() != f) {
    throw ContractError("char_conv_max: weight/bias shape mismatch");
  }
  if (k % 2 == 0) throw ContractError("char_conv_max: kernel width must be odd");
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
  const Real* cv = chars.values().data();
  const Real* wv = weight.values().data();
  std::vector<Real> out(words * f, Real(0));
  // argmax char position per (word, filter); -1 when the output is zero.
  std::vector<int> arg(words * f, -1);
  std::vector<Real> pre;
  for (std::size_t w = 0; w < words; ++w) {
    const std::ptrdiff_t len = std::min<std::ptrdiff_t>(lengths[w], static_cast<std::ptrdiff_t>(width));
    if (len <= 0) continue;
    pre.assign(static_cast<std::size_t>(len) * f, Real(0));
    const Real* base = cv + w * width * cin;
    for (std::size_t j = 0; j < k; ++j) {
      const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - half;
      const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -shift);
      const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(len, len - shift);
      if (t1 <= t0) continue;
      gemm_nn(base + (t0 + shift) * cin, wv + j * cin * f, pre.data() + t0 * f,
              static_cast<std::size_t>(t1 - t0), cin, f);
    }
    for (std::size_t o = 0; o < f; ++o) {
      Real best = pre[o];
      int best_t = 0;
      for (std::ptrdiff_t t = 1; t < len; ++t) {
        if (pre[t * f + o] > best) {
          best = pre[t * f + o];
          best_t = static_cast<int>(t);
        }
      }
      const Real z = best + bias.values()[o];
      if (z > 0) {
        out[w * f + o] = z;
        arg[w * f + o] = best_t;
      }
    }
  }
  std::vector<int> lens(lengths.begin(), lengths.end());
  return make_op_result(
      {words, f}, std::move(out), {chars, weight, bias},
      [pc = raw(chars), pw = raw(weight), pb = raw(bias), arg = std::move(arg),
       lens = std::move(lens), width, cin, k, f, half](Node& self) {
        Real* gc = pc->requires_grad ? pc->grad_storage().data() : nullptr;
        Real* gw = pw->requires_grad ? pw->grad_storage().data() : nullptr;
        Real* gb = pb->requires_grad ? pb->grad_storage().data() : nullptr;
        for (std::size_t w = 0; w < lens.size(); ++w) {
          const std::ptrdiff_t len = std::min<std::ptrdiff_t>(lens[w], static_cast<std::ptrdiff_t>(width));
          for (std::size_t o = 0; o < f; ++o) {
            const int t = arg[w * f + o];
            if (t < 0) continue;
            const Real g = self.grad[w * f + o];
            if (gb) gb[o] += g;
            for (std::size_t j = 0; j < k; ++j) {
              const std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(j) - half;
              if (src < 0 || src >= len) continue;
              const std::size_t row = w * width + static_cast<std::size_t>(src);
              for (std::size_t i = 0; i < cin; ++i) {
                if (gw) gw[(j * cin + i) * f + o] += g * pc->value[row * cin + i];
                if (gc) gc[row * cin + i] += g * pw->value[(j * cin + i) * f + o];
              }
            }
          }
        }
      });
}

}  // namespace xlqa::ad
