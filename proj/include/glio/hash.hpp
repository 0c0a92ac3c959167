#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace glio {

// FNV-1a 64-bit. Used for config hashes and checkpoint integrity checks;
// stable across platforms and runs.
inline uint64_t fnv1a64(const void* data, size_t len, uint64_t state = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    state ^= p[i];
    state *= 0x100000001b3ULL;
  }
  return state;
}

inline uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

inline std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

}  // namespace glio
