#ifndef XLQA_TRAIN_CHECKPOINT_H_
#define XLQA_TRAIN_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <vector>

namespace xlqa::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Named float64 arrays. File layout: "XLQACKPT", version (u32), entry count
// (u64), then per entry: name length (u32), UTF-8 name, rank (u32), dims
// (u64 each), values (f64 each). All integers and floats little-endian.
struct Checkpoint {
  struct Entry {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<double> values;
  };

  std::uint32_t version = kCheckpointVersion;
  std::vector<Entry> entries;

  void add(std::string name, std::vector<std::uint64_t> dims, std::vector<double> values);
  void add_scalar(std::string name, double value) { add(std::move(name), {1}, {value}); }
  // Text stored one code unit per value.
  void add_text(std::string name, const std::string& text);

  const Entry* find(const std::string& name) const;
  // Throw StateError when absent.
  const Entry& get(const std::string& name) const;
  double scalar(const std::string& name) const;
  std::string text(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
// Throws StateError on a bad magic, unsupported version or truncation.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace xlqa::train

#endif  // XLQA_TRAIN_CHECKPOINT_H_
