#pragma once

/**
 * Deterministic 64-bit PRNG primitives shared by the split generator and
 * the token sampler.
 *
 * Everything downstream (green/red splits, sampling, synthetic pmfs) must be
 * reproducible bit-for-bit across platforms and languages, so no platform
 * hash or std::mt19937 is used anywhere. The building blocks are:
 *
 *   mix64      - the SplitMix64 output scrambler (Steele/Lea/Flood constants
 *                0xBF58476D1CE4E5B9, 0x94D049BB133111EB, shifts 30/27/31)
 *   SplitMix64 - stream generator: state += 0x9E3779B97F4A7C15; out = mix64(state)
 *   mix_pair   - seed derivation: mix64(mix64(a) ^ (b + 0x9E3779B97F4A7C15))
 *
 * Bounded draws use rejection below the largest multiple of n, so they are
 * exactly uniform. Unit doubles take the top 53 bits of one output.
 */

#include <cstdint>

namespace wmark {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

/// SplitMix64 finalizer. Full-avalanche mixing of a 64-bit value.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Combines two 64-bit values into one well-mixed seed.
constexpr std::uint64_t mix_pair(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ (b + kGolden));
}

/// SplitMix64 stream generator.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() { return mix64(state_ += kGolden); }

  /// Uniform draw from [0, n). Rejection sampling, exactly unbiased.
  std::uint64_t bounded(std::uint64_t n) {
    // threshold = 2^64 mod n; values below it would over-represent small
    // residues under plain modulo.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  /// Uniform double in [0, 1), 53 bits of randomness.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double next_unit_open() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

}  // namespace wmark
