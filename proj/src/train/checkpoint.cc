#include "xlqa/train/checkpoint.h"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "xlqa/common/error.h"

namespace xlqa::train {

namespace {

constexpr char kMagic[8] = {'X', 'L', 'Q', 'A', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T take(std::istream& in, const std::string& path) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw StateError(path + ": truncated checkpoint");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void Checkpoint::add(std::string name, std::vector<std::uint64_t> dims, std::vector<double> values) {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  if (n != values.size()) throw ContractError("checkpoint entry '" + name + "' size mismatch");
  entries.push_back({std::move(name), std::move(dims), std::move(values)});
}

void Checkpoint::add_text(std::string name, const std::string& text) {
  std::vector<double> v(text.begin(), text.end());
  for (std::size_t i = 0; i < text.size(); ++i) v[i] = static_cast<unsigned char>(text[i]);
  if (v.empty()) v.push_back(-1.0);  // marks empty text, dims must be positive
  const auto n = static_cast<std::uint64_t>(v.size());
  add(std::move(name), {n}, std::move(v));
}

const Checkpoint::Entry* Checkpoint::find(const std::string& name) const {
  for (const Entry& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

const Checkpoint::Entry& Checkpoint::get(const std::string& name) const {
  const Entry* e = find(name);
  if (!e) throw StateError("checkpoint has no entry '" + name + "'");
  return *e;
}

double Checkpoint::scalar(const std::string& name) const {
  const Entry& e = get(name);
  if (e.values.size() != 1) throw StateError("checkpoint entry '" + name + "' is not a scalar");
  return e.values[0];
}

std::string Checkpoint::text(const std::string& name) const {
  const Entry& e = get(name);
  std::string out;
  for (double v : e.values) {
    if (v < 0) continue;
    out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  }
  return out;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StateError("cannot write checkpoint " + path);
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, ckpt.version);
    put<std::uint64_t>(out, ckpt.entries.size());
    for (const auto& e : ckpt.entries) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
      out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
      put<std::uint32_t>(out, static_cast<std::uint32_t>(e.dims.size()));
      for (auto d : e.dims) put<std::uint64_t>(out, d);
      for (double v : e.values) put<double>(out, v);
    }
    if (!out) throw StateError("failed writing checkpoint " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw StateError("cannot move checkpoint into " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StateError("cannot open checkpoint " + path);
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw StateError(path + ": not a checkpoint file");
  }
  Checkpoint ckpt;
  ckpt.version = take<std::uint32_t>(in, path);
  if (ckpt.version != kCheckpointVersion) {
    throw StateError(path + ": unsupported checkpoint version " + std::to_string(ckpt.version));
  }
  const auto count = take<std::uint64_t>(in, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    Checkpoint::Entry e;
    const auto len = take<std::uint32_t>(in, path);
    e.name.resize(len);
    if (!in.read(e.name.data(), len)) throw StateError(path + ": truncated checkpoint");
    const auto rank = take<std::uint32_t>(in, path);
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      e.dims.push_back(take<std::uint64_t>(in, path));
      n *= e.dims.back();
    }
    if (n > (1ull << 34)) throw StateError(path + ": implausible entry size");
    e.values.resize(n);
    for (auto& v : e.values) v = take<double>(in, path);
    ckpt.entries.push_back(std::move(e));
  }
  return ckpt;
}

}  // namespace xlqa::train
