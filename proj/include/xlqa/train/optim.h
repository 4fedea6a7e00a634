#ifndef XLQA_TRAIN_OPTIM_H_
#define XLQA_TRAIN_OPTIM_H_

#include <map>
#include <string>
#include <vector>

#include "xlqa/autodiff/tensor.h"

namespace xlqa::train {

using ad::Real;
using ad::Tensor;

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-7;
  double clip_norm = 0.0;  // global norm; 0 disables
  double l2 = 0.0;         // added to the gradient as l2 * param
};

struct AdamMoments {
  std::vector<Real> m, v;
};

// A named parameter taking part in one optimizer step.
struct NamedParam {
  std::string name;
  Tensor* tensor;
};

class Adam {
 public:
  explicit Adam(const AdamConfig& cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

  // One update of every listed parameter from its current grad (missing
  // grad storage reads as zero). Clipping uses the global norm over the
  // listed grads before L2. Throws on non-finite gradients.
  // Returns the pre-clip global gradient norm.
  double step(const std::vector<NamedParam>& params);

  long long steps() const { return t_; }
  void set_steps(long long t) { t_ = t; }
  std::map<std::string, AdamMoments>& moments() { return moments_; }
  const std::map<std::string, AdamMoments>& moments() const { return moments_; }

 private:
  AdamConfig cfg_;
  long long t_ = 0;
  std::map<std::string, AdamMoments> moments_;
};

// shadow <- decay * shadow + (1 - decay) * params, elementwise.
void ema_update(std::vector<Real>& shadow, std::span<const Real> params, double decay);

// Decay used by the trainer at update number n: min(decay, (1+n)/(10+n)).
double ema_warmup_decay(double decay, long long n);

class Ema {
 public:
  // Shadows start equal to the current parameter values.
  void track(const std::vector<NamedParam>& params);
  void update(const std::vector<NamedParam>& params, double decay);
  // Swaps shadow values into the parameters; calling it again restores.
  void swap_into(const std::vector<NamedParam>& params);

  std::map<std::string, std::vector<Real>>& shadows() { return shadows_; }
  const std::map<std::string, std::vector<Real>>& shadows() const { return shadows_; }

 private:
  std::map<std::string, std::vector<Real>> shadows_;
};

enum class RampShape { kLinear, kCosine };

struct LambdaSchedule {
  double peak = 0.001;
  long long ramp_steps = 30000;
  RampShape shape = RampShape::kLinear;

  // 0 at step 0, peak from ramp_steps on, monotone in between.
  double operator()(long long step) const;
};

}  // namespace xlqa::train

#endif  // XLQA_TRAIN_OPTIM_H_
