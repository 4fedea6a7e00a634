#include <cmath>
#include <random>

#include "doctest.h"
#include "support/op_registry.h"
#include "xlqa/adversary/discriminator.h"
#include "xlqa/common/error.h"
#include "xlqa/train/optim.h"

using namespace xlqa;
using namespace xlqa::adversary;
using ad::Mask;
using ad::Real;
using ad::Tensor;

namespace {

DiscriminatorConfig small_config(std::size_t in = 16, std::size_t filters = 16) {
  DiscriminatorConfig c;
  c.input_dim = in;
  c.filters = filters;
  return c;
}

void zero_all(ad::ParameterStore& store) {
  for (const auto& [name, e] : store.group(ad::GroupId::kDiscriminator).entries()) {
    auto& t = store.group(ad::GroupId::kDiscriminator).get(name);
    for (auto& v : t.mutable_values()) v = 0;
  }
}

std::vector<train::NamedParam> d_params(ad::ParameterStore& store) {
  std::vector<train::NamedParam> out;
  auto& g = store.group(ad::GroupId::kDiscriminator);
  for (const auto& [name, e] : g.entries()) out.push_back({name, &g.get(name)});
  return out;
}

}  // namespace

TEST_CASE("zero weights score exactly one half") {
  for (std::size_t in : {16u, 12u}) {
    ad::ParameterStore store;
    Discriminator d(small_config(in), store, 3);
    zero_all(store);
    std::mt19937_64 rng(1);
    const Tensor x = testing::random_tensor({7, in}, rng);
    CHECK(d.score(x, Mask(7, 1)) == 0.5);
    CHECK(d.logit(x, Mask(7, 1)).item() == 0.0);
  }
}

TEST_CASE("errors") {
  ad::ParameterStore store;
  Discriminator d(small_config(), store, 1);
  std::mt19937_64 rng(2);
  CHECK_THROWS_AS(d.logit(testing::random_tensor({4, 8}, rng), Mask(4, 1)), ContractError);
  CHECK_THROWS_AS(d.logit(testing::random_tensor({4, 16}, rng), Mask(3, 1)), ContractError);
  CHECK_THROWS_AS(discriminator_loss({Tensor::scalar(0)}, {}), ContractError);
  CHECK_THROWS_AS(adversarial_generator_loss(Tensor::scalar(1), Tensor::scalar(1), -0.1), ContractError);
  auto bad = small_config();
  bad.kernel = 4;
  ad::ParameterStore s2;
  CHECK_THROWS_AS(Discriminator(bad, s2, 1), ConfigError);
}

TEST_CASE("padding does not change the score") {
  ad::ParameterStore store;
  Discriminator d(small_config(), store, 4);
  std::mt19937_64 rng(3);
  const Tensor x = testing::random_tensor({9, 16}, rng);
  std::vector<Real> head(x.values().begin(), x.values().begin() + 6 * 16);
  const Tensor short_x({6, 16}, head);
  const Mask padded{1, 1, 1, 1, 1, 1, 0, 0, 0};
  CHECK(std::abs(d.score(x, padded) - d.score(short_x, Mask(6, 1))) < 1e-12);
}

TEST_CASE("loss at one half and the generator combination") {
  const Tensor z = Tensor::scalar(0);
  for (std::size_t b : {1u, 3u}) {
    std::vector<Tensor> t(2 * b, z), s(2 * b, z);
    CHECK(std::abs(discriminator_loss(t, s).item() - 4.0 * b * std::log(0.5)) < 1e-12);
  }
  CHECK(adversarial_generator_loss(Tensor::scalar(2.0), Tensor::scalar(-3.0), 0.0).item() == 2.0);
  CHECK(adversarial_generator_loss(Tensor::scalar(2.0), Tensor::scalar(-3.0), 0.001).item() ==
        doctest::Approx(2.003).epsilon(1e-15));
}

TEST_CASE("confident correct scores push the loss to its clamped floor") {
  const Tensor tgt = Tensor::scalar(-40), src = Tensor::scalar(40);
  const double floor = 2 * std::log(kScoreEpsilon);
  CHECK(discriminator_loss({tgt}, {src}).item() == doctest::Approx(floor).epsilon(1e-9));
  const Tensor wrong = discriminator_loss({Tensor::scalar(40)}, {Tensor::scalar(-40)});
  CHECK(wrong.item() == doctest::Approx(2 * std::log1p(-kScoreEpsilon)).epsilon(1e-9));
  // Moving toward correct lowers the loss.
  CHECK(discriminator_loss({Tensor::scalar(-1)}, {Tensor::scalar(1)}).item() <
        discriminator_loss({Tensor::scalar(0)}, {Tensor::scalar(0)}).item());
}

TEST_CASE("log score terms match their definitions") {
  for (double z : {-5.0, -0.3, 0.0, 2.0, 9.0}) {
    const double d = 1.0 / (1.0 + std::exp(-z));
    CHECK(log_score(Tensor::scalar(z)).item() == doctest::Approx(std::log(d)).epsilon(1e-12));
    CHECK(log_one_minus_score(Tensor::scalar(z)).item() == doctest::Approx(std::log(1 - d)).epsilon(1e-12));
  }
}

TEST_CASE("the discriminator separates disjoint constant features") {
  ad::ParameterStore store;
  auto cfg = small_config(8, 8);
  Discriminator d(cfg, store, 5);
  std::mt19937_64 rng(6);
  auto sample = [&](bool src) {
    const std::size_t len = 3 + rng() % 8;
    std::vector<Real> v(len * 8);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = src ? Real(0.5) : Real(-0.5);
    return std::pair{Tensor({len, 8}, v), Mask(len, 1)};
  };
  train::Adam adam(train::AdamConfig{.lr = 1e-3});
  auto params = d_params(store);
  for (int step = 0; step < 200; ++step) {
    store.zero_grad();
    std::vector<Tensor> t, s;
    for (int i = 0; i < 4; ++i) {
      auto [xt, mt] = sample(false);
      auto [xs, ms] = sample(true);
      t.push_back(d.logit(xt, mt));
      s.push_back(d.logit(xs, ms));
    }
    ad::backward(discriminator_loss(t, s));
    adam.step(params);
  }
  int correct = 0;
  for (int i = 0; i < 100; ++i) {
    const bool src = i % 2 == 0;
    auto [x, m] = sample(src);
    correct += (d.score(x, m) > 0.5) == src;
  }
  CHECK(correct == 100);
}

TEST_CASE("discriminator gradients") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto c = testing::op_registry().back().make(seed);
    CHECK(testing::run_case(c) < 1e-4);
  }
}
