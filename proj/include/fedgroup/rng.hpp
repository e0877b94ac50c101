#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "fedgroup/errors.hpp"

namespace fedgroup {

// Deterministic seeded randomness. One master seed fans out into named
// streams (init, partition, per-round selection, per-device shuffling) so
// that results cannot depend on thread scheduling or call order. All
// distributions are implemented on top of mt19937_64, whose output is fixed
// by the standard, instead of std::*_distribution, whose output is not.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
  // FNV-1a, folded through splitmix64 for diffusion.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h);
}

inline std::uint64_t derive_seed(std::uint64_t seed) { return splitmix64(seed); }

template <typename Tag, typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, Tag tag, Rest... rest) {
  std::uint64_t t;
  if constexpr (std::is_convertible_v<Tag, std::string_view>) {
    t = hash_tag(std::string_view(tag));
  } else {
    t = splitmix64(static_cast<std::uint64_t>(tag));
  }
  return derive_seed(splitmix64(seed ^ t), rest...);
}

class RngStream {
public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  template <typename... Tags>
  static RngStream derived(std::uint64_t seed, Tags... tags) {
    return RngStream(derive_seed(seed, tags...));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection keeps the draw unbiased.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw ContractError("uniform_int: n must be positive");
    const std::uint64_t limit = n * (UINT64_MAX / n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller. u1 is kept strictly positive.
  double normal() {
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace fedgroup
