#ifndef XLQA_AUTODIFF_PARAMS_H_
#define XLQA_AUTODIFF_PARAMS_H_

#include <array>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "xlqa/autodiff/tensor.h"

namespace xlqa::ad {

enum class GroupId { kDepSrc = 0, kDepTgt = 1, kIndependent = 2, kDiscriminator = 3 };

inline constexpr std::array<GroupId, 4> kAllGroups = {
    GroupId::kDepSrc, GroupId::kDepTgt, GroupId::kIndependent, GroupId::kDiscriminator};

std::string_view group_name(GroupId id);
GroupId group_from_name(std::string_view name);

// Named parameters of one partition. Frozen entries (pretrained embedding
// tables) live here too but never carry grad storage.
class ParameterGroup {
 public:
  struct Entry {
    Tensor tensor;
    bool frozen = false;
  };

  ParameterGroup() = default;
  explicit ParameterGroup(GroupId id) : id_(id) {}

  GroupId id() const { return id_; }
  std::string_view name() const { return group_name(id_); }

  // Names must be unique within the group.
  Tensor& add(const std::string& name, Tensor tensor, bool frozen = false);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  bool is_frozen(const std::string& name) const;

  const std::map<std::string, Entry>& entries() const { return entries_; }

  bool trainable() const { return trainable_; }
  // Toggles graph recording for every non-frozen entry.
  void set_trainable(bool on);

  void zero_grad();
  void drop_grad();
  std::size_t parameter_count(bool include_frozen = false) const;

 private:
  GroupId id_ = GroupId::kIndependent;
  bool trainable_ = true;
  std::map<std::string, Entry> entries_;
};

// The four partitions of the model: dependent stacks per language, the
// shared independent layers, and the language discriminator.
class ParameterStore {
 public:
  ParameterStore();

  ParameterGroup& group(GroupId id) { return groups_[static_cast<int>(id)]; }
  const ParameterGroup& group(GroupId id) const { return groups_[static_cast<int>(id)]; }

  // "<group>/<name>" addressing used by checkpoints.
  const Tensor& find(const std::string& qualified) const;
  Tensor& find(const std::string& qualified);

  void for_each(const std::function<void(const std::string& qualified, Tensor&, bool frozen)>& fn);
  void for_each(const std::function<void(const std::string& qualified, const Tensor&, bool frozen)>& fn) const;

  void zero_grad();

 private:
  std::array<ParameterGroup, 4> groups_;
};

// Parameter initializers (deterministic given the generator state).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out,
                      std::mt19937_64& rng);
Tensor normal_init(Shape shape, double stddev, std::mt19937_64& rng);

}  // namespace xlqa::ad

#endif  // XLQA_AUTODIFF_PARAMS_H_
