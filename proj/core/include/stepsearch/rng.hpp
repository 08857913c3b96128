#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

namespace stepsearch {

// 64-bit FNV-1a. Used for platform-stable seed derivation and content keys.
constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  // splitmix64 finalizer over the xor of both streams.
  std::uint64_t z = base ^ (salt + 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  return mix_seed(base, fnv1a(tag));
}

/// Deterministic RNG wrapper. std::mt19937_64 output is pinned by the
/// standard, but the std distributions are not, so bounded draws are
/// implemented here to keep byte-identical results across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Unbiased integer in [0, n). n must be >= 1.
  int uniform_int(int n) {
    if (n < 1) throw std::invalid_argument("uniform_int bound must be >= 1");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return static_cast<int>(x % bound);
  }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace stepsearch
