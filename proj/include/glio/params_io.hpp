#pragma once

// Versioned binary container for named float32 tensors plus a JSON metadata
// block. Used for model checkpoints and pretrained backbone weight artifacts.
//
// Layout (all integers little-endian):
//   bytes 0..7    magic "GLIOTNSR"
//   u32           container version (currently 1)
//   u64           metadata length; that many bytes of UTF-8 JSON
//   u32           tensor count
//   per tensor:   u32 name length, name bytes,
//                 u32 ndim, u32 dims[ndim],
//                 u64 payload bytes, float32 data
//   u64           FNV-1a checksum of every preceding byte
// Full byte-level description in docs/checkpoint_format.md.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "glio/error.hpp"
#include "glio/hash.hpp"
#include "glio/tensor.hpp"

namespace glio {

inline constexpr char kContainerMagic[8] = {'G', 'L', 'I', 'O', 'T', 'N', 'S', 'R'};
inline constexpr uint32_t kContainerVersion = 1;

struct TensorContainer {
  nlohmann::json meta;
  std::vector<std::pair<std::string, Tensor>> tensors;  // insertion-ordered

  const Tensor* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }
};

namespace detail {

struct HashingWriter {
  std::ofstream f;
  uint64_t hash = 0xcbf29ce484222325ULL;

  void write(const void* data, size_t len) {
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    hash = fnv1a64(data, len, hash);
  }
  template <typename T>
  void write_pod(T v) {
    write(&v, sizeof(T));
  }
};

struct HashingReader {
  std::ifstream f;
  uint64_t hash = 0xcbf29ce484222325ULL;
  std::string path;

  void read(void* data, size_t len) {
    f.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
    if (!f) throw_data("tensor container: truncated file: " + path);
    hash = fnv1a64(data, len, hash);
  }
  template <typename T>
  T read_pod() {
    T v;
    read(&v, sizeof(T));
    return v;
  }
};

}  // namespace detail

inline void write_tensor_container(const std::filesystem::path& path, const TensorContainer& c) {
  detail::HashingWriter w;
  w.f.open(path, std::ios::binary | std::ios::trunc);
  if (!w.f) throw_data("tensor container: cannot open for write: " + path.string());
  w.write(kContainerMagic, 8);
  w.write_pod<uint32_t>(kContainerVersion);
  const std::string meta = c.meta.dump();
  w.write_pod<uint64_t>(meta.size());
  w.write(meta.data(), meta.size());
  w.write_pod<uint32_t>(static_cast<uint32_t>(c.tensors.size()));
  for (const auto& [name, t] : c.tensors) {
    w.write_pod<uint32_t>(static_cast<uint32_t>(name.size()));
    w.write(name.data(), name.size());
    w.write_pod<uint32_t>(static_cast<uint32_t>(t.ndim()));
    for (size_t d = 0; d < t.ndim(); ++d) w.write_pod<uint32_t>(static_cast<uint32_t>(t.dim(d)));
    const uint64_t bytes = static_cast<uint64_t>(t.numel()) * sizeof(float);
    w.write_pod<uint64_t>(bytes);
    w.write(t.data(), bytes);
  }
  const uint64_t h = w.hash;
  w.f.write(reinterpret_cast<const char*>(&h), sizeof(h));
  if (!w.f) throw_data("tensor container: write failed: " + path.string());
}

inline TensorContainer read_tensor_container(const std::filesystem::path& path) {
  detail::HashingReader r;
  r.path = path.string();
  r.f.open(path, std::ios::binary);
  if (!r.f) throw_data("tensor container: cannot open: " + path.string());

  char magic[8];
  r.read(magic, 8);
  if (std::memcmp(magic, kContainerMagic, 8) != 0)
    throw_data("tensor container: bad magic (not a container file): " + path.string());
  const uint32_t version = r.read_pod<uint32_t>();
  if (version != kContainerVersion)
    throw_data("tensor container: unsupported version " + std::to_string(version) + ": " +
               path.string());

  const uint64_t meta_len = r.read_pod<uint64_t>();
  if (meta_len > (1ull << 30)) throw_data("tensor container: implausible metadata size: " + path.string());
  std::string meta(meta_len, '\0');
  r.read(meta.data(), meta_len);

  TensorContainer c;
  try {
    c.meta = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw_data("tensor container: corrupt metadata JSON: " + path.string());
  }

  const uint32_t count = r.read_pod<uint32_t>();
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = r.read_pod<uint32_t>();
    std::string name(name_len, '\0');
    r.read(name.data(), name_len);
    const uint32_t ndim = r.read_pod<uint32_t>();
    if (ndim > 8) throw_data("tensor container: implausible rank: " + path.string());
    std::vector<int64_t> shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) shape[d] = r.read_pod<uint32_t>();
    const uint64_t bytes = r.read_pod<uint64_t>();
    Tensor t(shape);
    if (bytes != static_cast<uint64_t>(t.numel()) * sizeof(float))
      throw_data("tensor container: payload size mismatch for '" + name + "': " + path.string());
    r.read(t.data(), bytes);
    c.tensors.emplace_back(std::move(name), std::move(t));
  }

  const uint64_t computed = r.hash;
  uint64_t stored;
  r.f.read(reinterpret_cast<char*>(&stored), sizeof(stored));
  if (!r.f) throw_data("tensor container: missing checksum: " + path.string());
  if (stored != computed)
    throw_data("tensor container: checksum mismatch (corrupt file): " + path.string());
  return c;
}

}  // namespace glio
