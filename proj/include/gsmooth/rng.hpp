#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>

namespace gsmooth {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Combines a base seed with a stream identifier into an independent seed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return mix64(base ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

/// Counter-based generator: the n-th draw is a pure function of (seed, n),
/// so any draw can be reproduced or computed out of order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0) noexcept
      : key_(mix64(seed)), counter_(counter) {}

  static std::uint64_t at(std::uint64_t seed, std::uint64_t counter) noexcept {
    return mix64(mix64(seed) ^ mix64(counter));
  }

  std::uint64_t next_u64() noexcept { return mix64(key_ ^ mix64(counter_++)); }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (cosine branch only, two draws per call).
  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n). Unbiased (Lemire's multiply-shift with rejection).
  std::size_t index(std::size_t n) noexcept {
    const std::uint64_t range = n;
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
      const std::uint64_t threshold = (0 - range) % range;
      while (low < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * range;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Standard normal keyed by (seed, index); identical to the value a
/// CounterRng(seed, 2 * index) would produce with normal().
inline double keyed_normal(std::uint64_t seed, std::uint64_t index) noexcept {
  CounterRng rng(seed, 2 * index);
  return rng.normal();
}

}  // namespace gsmooth
