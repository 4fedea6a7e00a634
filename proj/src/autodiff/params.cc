#include "xlqa/autodiff/params.h"

#include <cmath>

#include "xlqa/common/error.h"

namespace xlqa::ad {

std::string_view group_name(GroupId id) {
  switch (id) {
    case GroupId::kDepSrc: return "dep_src";
    case GroupId::kDepTgt: return "dep_tgt";
    case GroupId::kIndependent: return "independent";
    case GroupId::kDiscriminator: return "discriminator";
  }
  return "?";
}

GroupId group_from_name(std::string_view name) {
  for (GroupId id : kAllGroups) {
    if (group_name(id) == name) return id;
  }
  throw ContractError("unknown parameter group '" + std::string(name) + "'");
}

Tensor& ParameterGroup::add(const std::string& name, Tensor tensor, bool frozen) {
  if (entries_.count(name)) {
    throw ContractError("duplicate parameter '" + name + "' in group " +
                        std::string(this->name()));
  }
  tensor.set_requires_grad(!frozen && trainable_);
  auto [it, ok] = entries_.emplace(name, Entry{std::move(tensor), frozen});
  return it->second.tensor;
}

const Tensor& ParameterGroup::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw ContractError("no parameter '" + name + "' in group " + std::string(this->name()));
  }
  return it->second.tensor;
}

Tensor& ParameterGroup::get(const std::string& name) {
  return const_cast<Tensor&>(std::as_const(*this).get(name));
}

bool ParameterGroup::is_frozen(const std::string& name) const {
  auto it = entries_.find(name);
  return it != entries_.end() && it->second.frozen;
}

void ParameterGroup::set_trainable(bool on) {
  trainable_ = on;
  for (auto& [name, e] : entries_) e.tensor.set_requires_grad(on && !e.frozen);
}

void ParameterGroup::zero_grad() {
  for (auto& [name, e] : entries_) e.tensor.zero_grad();
}

void ParameterGroup::drop_grad() {
  for (auto& [name, e] : entries_) e.tensor.drop_grad();
}

std::size_t ParameterGroup::parameter_count(bool include_frozen) const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) {
    if (include_frozen || !e.frozen) n += e.tensor.size();
  }
  return n;
}

ParameterStore::ParameterStore()
    : groups_{ParameterGroup(GroupId::kDepSrc), ParameterGroup(GroupId::kDepTgt),
              ParameterGroup(GroupId::kIndependent),
              ParameterGroup(GroupId::kDiscriminator)} {}

const Tensor& ParameterStore::find(const std::string& qualified) const {
  const auto slash = qualified.find('/');
  if (slash == std::string::npos) {
    throw ContractError("parameter name '" + qualified + "' lacks a group prefix");
  }
  return group(group_from_name(qualified.substr(0, slash))).get(qualified.substr(slash + 1));
}

Tensor& ParameterStore::find(const std::string& qualified) {
  return const_cast<Tensor&>(std::as_const(*this).find(qualified));
}

void ParameterStore::for_each(
    const std::function<void(const std::string&, Tensor&, bool)>& fn) {
  for (ParameterGroup& g : groups_) {
    for (const auto& [name, e] : g.entries()) {
      fn(std::string(g.name()) + "/" + name, const_cast<Tensor&>(e.tensor), e.frozen);
    }
  }
}

void ParameterStore::for_each(
    const std::function<void(const std::string&, const Tensor&, bool)>& fn) const {
  for (const ParameterGroup& g : groups_) {
    for (const auto& [name, e] : g.entries()) {
      fn(std::string(g.name()) + "/" + name, e.tensor, e.frozen);
    }
  }
}

void ParameterStore::zero_grad() {
  for (ParameterGroup& g : groups_) g.zero_grad();
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out,
                      std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<Real> v(shape_size(shape));
  for (Real& x : v) x = static_cast<Real>(dist(rng));
  return Tensor(std::move(shape), std::move(v));
}

Tensor normal_init(Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<Real> v(shape_size(shape));
  for (Real& x : v) x = static_cast<Real>(dist(rng));
  return Tensor(std::move(shape), std::move(v));
}

}  // namespace xlqa::ad
