#pragma once

#include <cstdint>
#include <initializer_list>

namespace rtnq {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Hash a seed together with an ordered list of integer keys.
/// Used to derive independent substreams, e.g. (seed, fluctuator, trajectory).
constexpr std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = mix64(seed ^ 0x5851f42d4c957f2dULL);
  for (std::uint64_t k : keys) {
    h = mix64(h + 0x9e3779b97f4a7c15ULL + mix64(k + 0x632be59bd9b4e019ULL));
  }
  return h;
}

/// Counter-based SplitMix64 stream. Deterministic given its key, cheap to
/// construct, so every trajectory can own one.
class RandomStream {
 public:
  explicit constexpr RandomStream(std::uint64_t key) noexcept : state_(key) {}

  static constexpr RandomStream derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept {
    return RandomStream(derive_key(seed, keys));
  }

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  constexpr double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// +1 or -1 with equal probability.
  constexpr int sign() noexcept { return (next() >> 63) ? 1 : -1; }

 private:
  std::uint64_t state_;
};

}  // namespace rtnq
