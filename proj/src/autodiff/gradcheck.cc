#include "xlqa/autodiff/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "xlqa/common/error.h"

namespace xlqa::ad {

double check_gradients(const ScalarProgram& f, std::span<Tensor> inputs,
                       const GradCheckOptions& options) {
  for (Tensor& in : inputs) {
    if (!in.requires_grad()) throw ContractError("check_gradients: input without grad");
    in.zero_grad();
  }
  {
    const Tensor loss = f(std::span<const Tensor>(inputs.data(), inputs.size()));
    if (loss.size() != 1) throw ContractError("check_gradients: program is not scalar");
    backward(loss);
  }
  std::vector<std::vector<Real>> analytic;
  for (Tensor& in : inputs) {
    if (in.has_grad()) {
      analytic.emplace_back(in.grad().begin(), in.grad().end());
    } else {
      analytic.emplace_back(in.size(), Real(0));
    }
    in.zero_grad();
  }

  NoGradGuard no_grad;
  std::mt19937_64 rng(options.seed);
  auto eval = [&] {
    return static_cast<double>(
        f(std::span<const Tensor>(inputs.data(), inputs.size())).item());
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto values = inputs[k].mutable_values();
    std::vector<std::size_t> coords(values.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_input > 0 && coords.size() > options.max_coords_per_input) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_input);
    }
    for (std::size_t i : coords) {
      const Real saved = values[i];
      values[i] = saved + static_cast<Real>(options.eps);
      const double plus = eval();
      values[i] = saved - static_cast<Real>(options.eps);
      const double minus = eval();
      values[i] = saved;
      const double fd = (plus - minus) / (2.0 * options.eps);
      const double err = std::abs(static_cast<double>(analytic[k][i]) - fd) /
                         std::max(1.0, std::abs(fd));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

double check_gradients(const ScalarProgram& f, std::span<Tensor> inputs, double eps) {
  GradCheckOptions options;
  options.eps = eps;
  return check_gradients(f, inputs, options);
}

}  // namespace xlqa::ad
