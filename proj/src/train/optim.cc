#include "xlqa/train/optim.h"

#include <algorithm>
#include <cmath>

#include "xlqa/common/error.h"

namespace xlqa::train {

double Adam::step(const std::vector<NamedParam>& params) {
  double sq = 0.0;
  for (const NamedParam& p : params) {
    if (!p.tensor->has_grad()) continue;
    for (Real g : p.tensor->grad()) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw StateError("non-finite gradient in parameter '" + p.name + "'");
      }
      sq += static_cast<double>(g) * static_cast<double>(g);
    }
  }
  const double norm = std::sqrt(sq);
  const double clip = (cfg_.clip_norm > 0.0 && norm > cfg_.clip_norm) ? cfg_.clip_norm / norm : 1.0;

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double step_size = cfg_.lr / bc1;
  for (const NamedParam& p : params) {
    auto values = p.tensor->mutable_values();
    AdamMoments& mom = moments_[p.name];
    if (mom.m.empty()) {
      mom.m.assign(values.size(), Real(0));
      mom.v.assign(values.size(), Real(0));
    }
    const bool has = p.tensor->has_grad();
    const auto grad = p.tensor->grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      double g = has ? static_cast<double>(grad[i]) * clip : 0.0;
      g += cfg_.l2 * static_cast<double>(values[i]);
      const double m = cfg_.beta1 * static_cast<double>(mom.m[i]) + (1.0 - cfg_.beta1) * g;
      const double v = cfg_.beta2 * static_cast<double>(mom.v[i]) + (1.0 - cfg_.beta2) * g * g;
      mom.m[i] = static_cast<Real>(m);
      mom.v[i] = static_cast<Real>(v);
      values[i] = static_cast<Real>(static_cast<double>(values[i]) -
                                    step_size * m / (std::sqrt(v / bc2) + cfg_.eps));
    }
  }
  return norm;
}

void ema_update(std::vector<Real>& shadow, std::span<const Real> params, double decay) {
  if (shadow.size() != params.size()) throw ContractError("ema_update: size mismatch");
  if (!(decay >= 0.0 && decay < 1.0)) throw ContractError("ema_update: decay must be in [0,1)");
  for (std::size_t i = 0; i < shadow.size(); ++i) {
    shadow[i] = static_cast<Real>(decay * static_cast<double>(shadow[i]) +
                                  (1.0 - decay) * static_cast<double>(params[i]));
  }
}

double ema_warmup_decay(double decay, long long n) {
  return std::min(decay, (1.0 + static_cast<double>(n)) / (10.0 + static_cast<double>(n)));
}

void Ema::track(const std::vector<NamedParam>& params) {
  for (const NamedParam& p : params) {
    const auto v = p.tensor->values();
    shadows_[p.name].assign(v.begin(), v.end());
  }
}

void Ema::update(const std::vector<NamedParam>& params, double decay) {
  for (const NamedParam& p : params) {
    auto it = shadows_.find(p.name);
    if (it == shadows_.end()) throw ContractError("EMA does not track '" + p.name + "'");
    ema_update(it->second, p.tensor->values(), decay);
  }
}

void Ema::swap_into(const std::vector<NamedParam>& params) {
  for (const NamedParam& p : params) {
    auto it = shadows_.find(p.name);
    if (it == shadows_.end()) throw ContractError("EMA does not track '" + p.name + "'");
    auto values = p.tensor->mutable_values();
    std::swap_ranges(values.begin(), values.end(), it->second.begin());
  }
}

double LambdaSchedule::operator()(long long step) const {
  if (step <= 0) return 0.0;
  if (step >= ramp_steps) return peak;
  const double frac = static_cast<double>(step) / static_cast<double>(ramp_steps);
  if (shape == RampShape::kCosine) return peak * 0.5 * (1.0 - std::cos(frac * 3.14159265358979323846));
  return peak * frac;
}

}  // namespace xlqa::train
