#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace pdmpv {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based 64-bit generator.
///
/// Output i of a stream is mix64(key + i * golden), so the whole stream is a
/// pure function of (key, counter). Streams for parallel work are derived
/// from (master seed, stream index) with `split`, which makes ensemble
/// results independent of how paths are scheduled onto workers.
///
/// Satisfies UniformRandomBitGenerator, so it also plugs into <random>.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  constexpr explicit CounterRng(std::uint64_t seed = 0) noexcept
      : key_(mix64(seed ^ 0x6A09E667F3BCC909ULL)) {}

  /// Independent stream `index` of the master seed.
  static constexpr CounterRng split(std::uint64_t master_seed,
                                    std::uint64_t index) noexcept {
    CounterRng rng;
    rng.key_ = mix64(mix64(master_seed ^ 0x6A09E667F3BCC909ULL) ^
                     mix64(index + 0xBB67AE8584CAA73BULL));
    return rng;
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Exponential(1) by inversion; never returns +inf.
  double exponential() noexcept { return -std::log1p(-uniform()); }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace pdmpv
