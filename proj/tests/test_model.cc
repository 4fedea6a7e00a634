#include <cmath>
#include <random>

#include "doctest.h"
#include "support/op_registry.h"
#include "support/oracles.h"
#include "support/tiny_model.h"
#include "xlqa/common/error.h"
#include "xlqa/model/layers.h"
#include "xlqa/train/optim.h"

using namespace xlqa;
using namespace xlqa::model;
using ad::Mask;
using ad::Real;
using ad::Tensor;

namespace {

std::vector<double> row_softmax(std::vector<double> v, const Mask& m) {
  double mx = -1e300;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (m[i]) mx = std::max(mx, v[i]);
  double z = 0;
  for (std::size_t i = 0; i < v.size(); ++i) z += m[i] ? std::exp(v[i] - mx) : 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = m[i] ? std::exp(v[i] - mx) / z : 0.0;
  return v;
}

}  // namespace

TEST_CASE("attention with a single position returns the value projection") {
  std::mt19937_64 rng(1);
  Tensor x = testing::random_tensor({1, 4}, rng);
  Tensor wq = testing::random_tensor({4, 4}, rng), wk = testing::random_tensor({4, 4}, rng);
  Tensor wv = testing::random_tensor({4, 4}, rng), wo = testing::random_tensor({4, 4}, rng);
  const Tensor y = multi_head_self_attention(x, wq, wk, wv, wo, 2, Mask{1});
  const Tensor want = ad::matmul(ad::matmul(x, wv), wo);
  for (std::size_t i = 0; i < 4; ++i) CHECK(y.at(i) == doctest::Approx(want.at(i)).epsilon(1e-14));
}

TEST_CASE("zero queries and keys attend uniformly over unmasked positions") {
  std::mt19937_64 rng(2);
  Tensor x = testing::random_tensor({4, 4}, rng);
  Tensor zero = Tensor::zeros({4, 4});
  Tensor eye({4, 4}, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
  const Mask m{1, 0, 1, 1};
  const Tensor y = multi_head_self_attention(x, zero, zero, eye, eye, 2, m);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      const double mean = (x.at(0, c) + x.at(2, c) + x.at(3, c)) / 3.0;
      CHECK(y.at(r, c) == doctest::Approx(mean).epsilon(1e-13));
    }
}

TEST_CASE("attention matches a per-head matrix oracle") {
  std::mt19937_64 rng(3);
  const std::size_t L = 4, d = 8, heads = 2, dh = 4;
  Tensor x = testing::random_tensor({L, d}, rng);
  Tensor wq = testing::random_tensor({d, d}, rng), wk = testing::random_tensor({d, d}, rng);
  Tensor wv = testing::random_tensor({d, d}, rng), wo = testing::random_tensor({d, d}, rng);
  const Mask m{1, 1, 0, 1};
  const Tensor y = multi_head_self_attention(x, wq, wk, wv, wo, heads, m);
  auto proj = [&](const Tensor& w, std::size_t r, std::size_t c) {
    double s = 0;
    for (std::size_t k = 0; k < d; ++k) s += x.at(r, k) * w.at(k, c);
    return s;
  };
  std::vector<double> joined(L * d, 0.0);
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < L; ++i) {
      std::vector<double> sc(L);
      for (std::size_t j = 0; j < L; ++j) {
        double dot = 0;
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) dot += proj(wq, i, c) * proj(wk, j, c);
        sc[j] = dot / std::sqrt(static_cast<double>(dh));
      }
      const auto p = row_softmax(sc, m);
      for (std::size_t c = h * dh; c < (h + 1) * dh; ++c)
        for (std::size_t j = 0; j < L; ++j) joined[i * d + c] += p[j] * proj(wv, j, c);
    }
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t o = 0; o < d; ++o) {
      double want = 0;
      for (std::size_t c = 0; c < d; ++c) want += joined[i * d + c] * wo.at(c, o);
      CHECK(std::abs(y.at(i, o) - want) < 1e-10);
    }
}

TEST_CASE("context-query attention") {
  std::mt19937_64 rng(4);
  SUBCASE("zero weights average the query") {
    Tensor c = testing::random_tensor({3, 4}, rng), q = testing::random_tensor({5, 4}, rng);
    CqAttentionParams p{Tensor::zeros({4, 1}), Tensor::zeros({4, 1}), Tensor::zeros({4})};
    const Mask qm{1, 1, 1, 0, 1};
    const Tensor out = context_query_attention(c, q, Mask(3, 1), qm, p);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < 4; ++k) {
        const double mean = (q.at(0, k) + q.at(1, k) + q.at(2, k) + q.at(4, k)) / 4.0;
        CHECK(out.at(i, 4 + k) == doctest::Approx(mean).epsilon(1e-13));
      }
  }
  SUBCASE("explicit similarity-matrix oracle") {
    const std::size_t n = 3, m = 4, h = 4;
    Tensor c = testing::random_tensor({n, h}, rng), q = testing::random_tensor({m, h}, rng);
    CqAttentionParams p{testing::random_tensor({h, 1}, rng), testing::random_tensor({h, 1}, rng),
                        testing::random_tensor({h}, rng)};
    const Mask cm{1, 1, 0}, qm{1, 0, 1, 1};
    std::vector<double> s(n * m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        double v = 0;
        for (std::size_t k = 0; k < h; ++k)
          v += p.w_c.at(k) * c.at(i, k) + p.w_q.at(k) * q.at(j, k) + p.w_cq.at(k) * c.at(i, k) * q.at(j, k);
        s[i * m + j] = v;
      }
    const Tensor sim = cq_similarity(c, q, p);
    for (std::size_t i = 0; i < n * m; ++i) CHECK(std::abs(sim.at(i) - s[i]) < 1e-10);
    std::vector<std::vector<double>> srow(n), scol(m);
    for (std::size_t i = 0; i < n; ++i) srow[i] = row_softmax({s.begin() + i * m, s.begin() + (i + 1) * m}, qm);
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<double> col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = s[i * m + j];
      scol[j] = row_softmax(col, cm);
    }
    const Tensor out = context_query_attention(c, q, cm, qm, p);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < h; ++k) {
        double a = 0, b = 0;
        for (std::size_t j = 0; j < m; ++j) a += srow[i][j] * q.at(j, k);
        for (std::size_t t = 0; t < n; ++t) {
          double st = 0;
          for (std::size_t j = 0; j < m; ++j) st += srow[i][j] * scol[j][t];
          b += st * c.at(t, k);
        }
        const double keep = cm[i] ? 1.0 : 0.0;
        CHECK(std::abs(out.at(i, k) - keep * c.at(i, k)) < 1e-10);
        CHECK(std::abs(out.at(i, h + k) - keep * a) < 1e-10);
        CHECK(std::abs(out.at(i, 2 * h + k) - keep * c.at(i, k) * a) < 1e-10);
        CHECK(std::abs(out.at(i, 3 * h + k) - keep * c.at(i, k) * b) < 1e-10);
      }
    }
  }
}

TEST_CASE("output layer") {
  std::mt19937_64 rng(5);
  Tensor m0 = testing::random_tensor({5, 4}, rng), m1 = testing::random_tensor({5, 4}, rng),
         m2 = testing::random_tensor({5, 4}, rng);
  SUBCASE("zero weights give uniform distributions") {
    const Mask mask{1, 1, 0, 1, 1};
    const auto d = output_layer(m0, m1, m2, mask, OutputParams{Tensor::zeros({8, 1}), Tensor::zeros({8, 1})});
    const auto p1 = d.p1(), p2 = d.p2();
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(p1[i] == doctest::Approx(mask[i] ? 0.25 : 0.0));
      CHECK(p2[i] == doctest::Approx(mask[i] ? 0.25 : 0.0));
    }
  }
  SUBCASE("one visible position is one-hot") {
    const auto d = output_layer(m0, m1, m2, Mask{0, 0, 1, 0, 0},
                                OutputParams{testing::random_tensor({8, 1}, rng), testing::random_tensor({8, 1}, rng)});
    CHECK(d.p1()[2] == 1.0);
    CHECK(d.p2()[2] == 1.0);
    CHECK(d.p1()[0] == 0.0);
  }
}

TEST_CASE("span loss") {
  SpanDistribution u;
  u.mask = Mask(4, 1);
  u.log_p1 = Tensor::filled({4}, static_cast<Real>(-std::log(4.0)));
  u.log_p2 = u.log_p1;
  CHECK(std::abs(qa_loss({u}, {0}, {3}).item() - 2 * std::log(4.0)) < 1e-12);
  SpanDistribution sure;
  sure.mask = Mask(3, 1);
  sure.log_p1 = Tensor({3}, {0, -INFINITY, -INFINITY});
  sure.log_p2 = Tensor({3}, {-INFINITY, 0, -INFINITY});
  CHECK(span_nll(sure, 0, 1).item() == 0.0);
  const double a = span_nll(u, 1, 2).item();
  SpanDistribution w;
  w.mask = Mask(4, 1);
  w.log_p1 = Tensor({4}, {std::log(0.1), std::log(0.2), std::log(0.3), std::log(0.4)});
  w.log_p2 = w.log_p1;
  const double b = span_nll(w, 0, 3).item();
  CHECK(qa_loss({u, w}, {1, 0}, {2, 3}).item() == doctest::Approx((a + b) / 2).epsilon(1e-14));
  SpanDistribution masked = u;
  masked.mask = Mask{1, 0, 1, 1};
  CHECK_THROWS_AS(span_nll(masked, 1, 2), ContractError);
  CHECK_THROWS_AS(span_nll(u, 0, 4), ContractError);
}

TEST_CASE("span prediction") {
  std::vector<double> p1(8, 0.0), p2(8, 0.0);
  p1[2] = 1;
  p2[5] = 1;
  CHECK(predict_span(p1, p2, 4) == std::pair<int, int>{2, 5});
  std::vector<double> a{0.0, 0.0, 0.0, 0.9, 0.1}, b{0.8, 0.1, 0.0, 0.0, 0.1};
  const auto r = predict_span(a, b, 30);
  CHECK(r.first <= r.second);
  CHECK(r == std::pair<int, int>{3, 4});
}

TEST_CASE("span prediction agrees with exhaustive pair enumeration") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = i < 500 ? 12 : 1 + rng() % 15;
    const auto p1 = testing::random_distribution(n, rng), p2 = testing::random_distribution(n, rng);
    const std::size_t ml = 1 + rng() % 6;
    CHECK(predict_span(p1, p2, ml) == testing::predict_span_oracle(p1, p2, ml));
  }
}

TEST_CASE("stack output shape") {
  auto hp = HyperParams::desk();
  testing::TinyModel tm(hp);
  std::mt19937_64 rng(6);
  const auto q = testing::random_sequence(13, 0, tm.vocab, tm.chars, rng);
  const Tensor e = tm.net->embed(Language::kTgt, q.view(), Context{});
  CHECK(e.rows() == 13);
  CHECK(e.cols() == hp.hidden);
  const auto d = testing::random_sequence(20, 0, tm.vocab, tm.chars, rng);
  const auto dep = tm.net->dependent_forward(Language::kTgt, q.view(), d.view(), Context{});
  CHECK(dep.question.rows() == 13);
  CHECK(dep.document.rows() == 20);
  CHECK(dep.document.cols() == hp.hidden);
}

TEST_CASE("padding does not change outputs at real positions") {
  for (bool chars : {true, false}) {
    auto hp = HyperParams::desk();
    hp.use_chars = chars;
    testing::TinyModel tm(hp, 3);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 3; ++trial) {
      const auto q = testing::random_sequence(4, 3, tm.vocab, tm.chars, rng);
      const auto d = testing::random_sequence(9, 5, tm.vocab, tm.chars, rng);
      for (Language lang : {Language::kSrc, Language::kTgt}) {
        const auto padded = tm.net->forward(lang, q.view(), d.view(), Context{});
        const auto plain = tm.net->forward(lang, q.trimmed(4).view(), d.trimmed(9).view(), Context{});
        for (std::size_t i = 0; i < 9; ++i) {
          CHECK(std::abs(padded.log_p1.at(i) - plain.log_p1.at(i)) < 1e-9);
          CHECK(std::abs(padded.log_p2.at(i) - plain.log_p2.at(i)) < 1e-9);
        }
        for (std::size_t i = 9; i < 14; ++i) CHECK(padded.p1()[i] == 0.0);
      }
    }
  }
}

TEST_CASE("forward is independent of other examples and repeatable") {
  testing::TinyModel tm(HyperParams::desk(), 4);
  std::mt19937_64 rng(8);
  const auto q = testing::random_sequence(3, 0, tm.vocab, tm.chars, rng);
  const auto d = testing::random_sequence(8, 0, tm.vocab, tm.chars, rng);
  const auto other_q = testing::random_sequence(5, 0, tm.vocab, tm.chars, rng);
  const auto other_d = testing::random_sequence(11, 0, tm.vocab, tm.chars, rng);
  const auto first = tm.net->forward(Language::kTgt, q.view(), d.view(), Context{});
  tm.net->forward(Language::kTgt, other_q.view(), other_d.view(), Context{});
  const auto again = tm.net->forward(Language::kTgt, q.view(), d.view(), Context{});
  for (std::size_t i = 0; i < 8; ++i) CHECK(first.log_p1.at(i) == again.log_p1.at(i));
}

TEST_CASE("parameter partitions") {
  testing::TinyModel tm(HyperParams::desk(), 5);
  auto& src = tm.store.group(ad::GroupId::kDepSrc);
  auto& tgt = tm.store.group(ad::GroupId::kDepTgt);
  auto& ind = tm.store.group(ad::GroupId::kIndependent);
  CHECK(src.is_frozen("word_table"));
  CHECK(tgt.is_frozen("word_table"));
  CHECK(src.entries().size() == tgt.entries().size());
  CHECK(ind.contains("cq/w_c"));
  CHECK(ind.contains("out/w1"));
  for (const auto& [name, e] : src.entries()) CHECK(e.tensor.id() != tgt.get(name).id());
  CHECK(tm.store.group(ad::GroupId::kDiscriminator).entries().empty());
}

TEST_CASE("the full desk model passes a sampled gradient check") {
  auto hp = HyperParams::desk();
  hp.dropout = 0;
  for (std::uint64_t seed = 1; seed <= 2; ++seed) {
    auto c = testing::full_model_case(seed, hp, 6);
    CHECK(testing::run_case(c) < 1e-4);
  }
}

TEST_CASE("overfitting a handful of examples drives the loss down") {
  auto hp = testing::tiny_hyper();
  testing::TinyModel tm(hp, 9);
  std::mt19937_64 rng(10);
  struct Ex {
    testing::TinySequence q, d;
    int y1, y2;
  };
  std::vector<Ex> data;
  for (int i = 0; i < 4; ++i) {
    Ex e{testing::random_sequence(3, 0, tm.vocab, tm.chars, rng), testing::random_sequence(10, 0, tm.vocab, tm.chars, rng), 0, 0};
    e.y1 = static_cast<int>(rng() % 9);
    e.y2 = e.y1 + 1;
    data.push_back(e);
  }
  std::vector<train::NamedParam> params;
  for (auto g : {ad::GroupId::kDepTgt, ad::GroupId::kIndependent})
    for (const auto& [name, e] : tm.store.group(g).entries())
      if (!e.frozen) params.push_back({name + std::to_string(static_cast<int>(g)), &tm.store.group(g).get(name)});
  train::Adam adam(train::AdamConfig{.lr = 3e-3});
  auto loss_now = [&] {
    ad::NoGradGuard g;
    double s = 0;
    for (const auto& e : data) s += span_nll(tm.net->forward(Language::kTgt, e.q.view(), e.d.view(), Context{}), e.y1, e.y2).item();
    return s / data.size();
  };
  const double start = loss_now();
  double prev = start;
  int increases = 0;
  for (int step = 0; step < 60; ++step) {
    tm.store.zero_grad();
    for (const auto& e : data)
      ad::backward(ad::scale(span_nll(tm.net->forward(Language::kTgt, e.q.view(), e.d.view(), Context{}), e.y1, e.y2),
                             Real(1.0 / data.size())));
    adam.step(params);
    const double now = loss_now();
    increases += now > prev;
    prev = now;
  }
  CHECK(prev < 0.05 * start);
  CHECK(increases <= 6);
}

TEST_CASE("hyperparameter validation") {
  auto hp = HyperParams::desk();
  hp.heads = 3;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp = HyperParams::desk();
  hp.kernel = 4;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  CHECK_NOTHROW(HyperParams::full().validate());
}
