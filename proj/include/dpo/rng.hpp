#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dpo {

/// SplitMix64: a counter stepped by the golden-ratio increment and passed
/// through a 64-bit finalizer. See https://prng.di.unimi.it.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t operator()() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t min() noexcept { return 0; }
  static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Uniform integer on [0, n), n > 0, by rejection of the short top range.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = (*this)();
      if (x >= threshold) return x % n;
    }
  }

 private:
  std::uint64_t state_;
};

/// Standard normal deviates by the Box-Muller transform. Both outputs of a
/// transform are used: the cosine branch first, then the sine branch.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) noexcept : engine_(seed) {}

  double operator()() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // 1 - U lies in (0, 1], so the logarithm is finite.
    const double u1 = 1.0 - engine_.uniform();
    const double u2 = engine_.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

 private:
  SplitMix64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dpo
