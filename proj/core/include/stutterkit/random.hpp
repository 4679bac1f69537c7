#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace stutterkit {

/// mt19937_64 with distribution code kept local so sequences do not depend on
/// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r = engine_();
    while (r >= limit) r = engine_();
    return r % n;
  }

  /// Standard normal via Box-Muller.
  double normal();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Stable 64-bit FNV-1a, for deriving sub-seeds from names.
std::uint64_t fnv1a64(std::string_view text);

/// Mixes a base seed with a stream label.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

}  // namespace stutterkit
