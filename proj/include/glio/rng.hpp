#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace glio {

namespace detail {

// splitmix64; used to mix seeds and derive independent streams.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Deterministic random source. std::mt19937_64 output is fully specified by
// the standard; the distribution transforms below are hand-rolled because the
// std:: distributions are implementation-defined and would break bit-stable
// artifacts across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Independent stream addressed by (seed, ids...). Streams derived from the
  // same seed but different ids never share state, which keeps per-patient /
  // per-fold parallelism equal to the serial schedule.
  static Rng derive(uint64_t seed, std::initializer_list<uint64_t> ids) {
    uint64_t state = seed ^ 0xd1b54a32d192ed03ULL;
    uint64_t mixed = detail::splitmix64(state);
    for (uint64_t id : ids) {
      state ^= id + 0x9e3779b97f4a7c15ULL + (state << 6) + (state >> 2);
      mixed = detail::splitmix64(state);
    }
    return Rng(mixed);
  }

  uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive integer range via rejection sampling (unbiased).
  int64_t uniform_int(int64_t lo, int64_t hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<int64_t>(next_u64());  // full 64-bit range
    uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return lo + static_cast<int64_t>(x % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; the second value is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stdev) { return mean + stdev * normal(); }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace glio
