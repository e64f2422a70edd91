#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sigroute {

/// Platform-stable random stream: mt19937_64 plus explicit conversions
/// (std:: distributions are implementation-defined).
class Rng {
public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::initializer_list<std::uint32_t> words) {
    std::seed_seq seq(words);
    engine_.seed(seq);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t next() { return engine_(); }

  friend bool operator==(const Rng&, const Rng&) = default;

private:
  std::mt19937_64 engine_;
};

/// Splits a 64-bit seed into seed_seq words, tagged by stream purpose.
inline Rng make_stream(std::uint64_t seed, std::uint32_t tag, std::uint32_t index = 0) {
  return Rng{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag, index};
}

}  // namespace sigroute
