#pragma once

#include <cstdint>

namespace linkreg {

// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// SplitMix64 generator. Small state, so one stream per record is cheap.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  // Uniform on [0, 1) with 53 random bits.
  constexpr double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  constexpr int bernoulli(double prob) noexcept { return uniform() < prob ? 1 : 0; }

  // Uniform index in [0, n); n > 0.
  constexpr std::uint64_t below(std::uint64_t n) noexcept {
    const auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

 private:
  std::uint64_t state_;
};

/// Independent stream for item `index` under `seed`. Depends only on (seed, index),
/// so draws do not depend on the order in which items are processed.
constexpr SplitMix64 stream_for(std::uint64_t seed, std::uint64_t index) noexcept {
  return SplitMix64(mix64(mix64(seed) + (index + 1) * 0xD1B54A32D192ED03ULL));
}

}  // namespace linkreg
