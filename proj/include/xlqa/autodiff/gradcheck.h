#ifndef XLQA_AUTODIFF_GRADCHECK_H_
#define XLQA_AUTODIFF_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <span>

#include "xlqa/autodiff/tensor.h"

namespace xlqa::ad {

using ScalarProgram = std::function<Tensor(std::span<const Tensor>)>;

struct GradCheckOptions {
  double eps = 1e-5;
  // 0 checks every coordinate; otherwise a seeded sample per input.
  std::size_t max_coords_per_input = 0;
  std::uint64_t seed = 0;
};

// Compares backward() against central finite differences of `f` around
// `inputs` (which must require grad). Returns the max over checked
// coordinates of |g_ad - g_fd| / max(1, |g_fd|). Input grads are left zeroed.
double check_gradients(const ScalarProgram& f, std::span<Tensor> inputs,
                       const GradCheckOptions& options = {});
double check_gradients(const ScalarProgram& f, std::span<Tensor> inputs, double eps);

}  // namespace xlqa::ad

#endif  // XLQA_AUTODIFF_GRADCHECK_H_
