#ifndef OTPQKD_RANDOM_HPP
#define OTPQKD_RANDOM_HPP

#include <cstdint>
#include <random>

namespace otpqkd {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer, used to turn structured seeds into well-mixed ones.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Independent stream seed for `(seed, stream)`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(seed + kGoldenGamma * (stream + 1));
}

/// Seeded 64-bit generator. Only the raw engine output is used so streams are
/// reproducible across standard libraries (distribution objects are not).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), bound > 0, by rejection.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
  }

  bool bit() { return (next() >> 63) != 0; }

private:
  std::mt19937_64 engine_;
};

}  // namespace otpqkd

#endif
