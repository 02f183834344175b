#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "heterseed/binary_io.hpp"
#include "heterseed/error.hpp"
#include "heterseed/nn/tensor.hpp"

namespace heterseed::nn {

/// Ordered, named parameter list. Order defines the checkpoint layout and the
/// optimizer state layout.
template <class T>
class ParamStore {
 public:
  void add(std::string name, Var<T> param) {
    names_.push_back(std::move(name));
    params_.push_back(std::move(param));
  }

  std::size_t size() const { return params_.size(); }
  const std::vector<Var<T>>& params() const { return params_; }
  const std::vector<std::string>& names() const { return names_; }

  Var<T> find(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return params_[i];
    return nullptr;
  }

  void zero_grad() const {
    for (const auto& p : params_) p->clear_grad();
  }

 private:
  std::vector<std::string> names_;
  std::vector<Var<T>> params_;
};

inline constexpr std::uint32_t kCheckpointMagic = 0x4B435348;  // "HSCK"
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout: u32 magic, u32 version, u64 count, then per tensor
/// u64 name length, name bytes, u64 rank, rank x u64 dims, f32 payload (little-endian).
template <class T>
void save_checkpoint(const ParamStore<T>& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, path.string());
  detail::write_le(out, kCheckpointMagic);
  detail::write_le(out, kCheckpointVersion);
  detail::write_le<std::uint64_t>(out, store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& name = store.names()[i];
    const auto& t = *store.params()[i];
    detail::write_le<std::uint64_t>(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_le<std::uint64_t>(out, t.shape.size());
    for (std::size_t d : t.shape) detail::write_le<std::uint64_t>(out, d);
    for (T v : t.values) detail::write_le(out, static_cast<float>(v));
  }
  if (!out) fail(ErrorCode::IoFailure, path.string());
}

struct CheckpointEntry {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

inline std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFile, path.string());
  std::uint32_t magic = 0, version = 0;
  std::uint64_t count = 0;
  if (!detail::read_le(in, magic) || magic != kCheckpointMagic) fail(ErrorCode::BadCheckpoint, path.string() + ": bad magic");
  if (!detail::read_le(in, version) || version != kCheckpointVersion)
    fail(ErrorCode::BadCheckpoint, path.string() + ": unsupported version");
  if (!detail::read_le(in, count)) fail(ErrorCode::BadCheckpoint, path.string() + ": truncated");
  std::vector<CheckpointEntry> out;
  for (std::uint64_t k = 0; k < count; ++k) {
    CheckpointEntry e;
    std::uint64_t len = 0, rank = 0;
    if (!detail::read_le(in, len) || len > (1u << 20)) fail(ErrorCode::BadCheckpoint, path.string() + ": bad name");
    e.name.resize(len);
    if (!in.read(e.name.data(), static_cast<std::streamsize>(len)) || !detail::read_le(in, rank) || rank > 8)
      fail(ErrorCode::BadCheckpoint, path.string() + ": truncated");
    for (std::uint64_t r = 0; r < rank; ++r) {
      std::uint64_t d = 0;
      if (!detail::read_le(in, d)) fail(ErrorCode::BadCheckpoint, path.string() + ": truncated");
      e.shape.push_back(d);
    }
    e.values.resize(shape_size(e.shape));
    for (auto& v : e.values)
      if (!detail::read_le(in, v)) fail(ErrorCode::BadCheckpoint, path.string() + ": truncated payload");
    out.push_back(std::move(e));
  }
  return out;
}

/// Copies checkpoint values into a store with identical names and shapes.
template <class T>
void load_checkpoint(ParamStore<T>& store, const std::filesystem::path& path) {
  auto entries = read_checkpoint(path);
  if (entries.size() != store.size())
    fail(ErrorCode::BadCheckpoint, "checkpoint has " + std::to_string(entries.size()) + " tensors, model has " +
                                       std::to_string(store.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& t = *store.params()[i];
    if (entries[i].name != store.names()[i] || entries[i].shape != t.shape)
      fail(ErrorCode::BadCheckpoint, "tensor '" + entries[i].name + "' does not match model parameter '" +
                                         store.names()[i] + "'");
    for (std::size_t j = 0; j < t.size(); ++j) t.values[j] = static_cast<T>(entries[i].values[j]);
  }
}

}  // namespace heterseed::nn
