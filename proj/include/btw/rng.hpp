#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace btw {

/// Counter-based generator "btw-splitmix64-ctr/1".
///
/// Draw i of stream `seed` is splitmix64_finalize(seed + (i + 1) * 0x9E3779B97F4A7C15),
/// where splitmix64_finalize is the standard SplitMix64 output mix
/// (xor-shift 30, *0xBF58476D1CE4E5B9, xor-shift 27, *0x94D049BB133111EB,
/// xor-shift 31). Any draw can be computed independently of the others, so
/// generated coefficients are reproducible across languages and thread
/// layouts.
class CounterRng {
 public:
  static constexpr std::string_view kName = "btw-splitmix64-ctr/1";

  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t at(std::uint64_t index) const {
    return mix(seed_ + (index + 1) * 0x9E3779B97F4A7C15ULL);
  }
  std::uint64_t next() { return at(counter_++); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi] (inclusive); multiply-shift reduction.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<unsigned __int128>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>((static_cast<unsigned __int128>(next()) * span) >> 64);
  }

  /// e(theta) with theta uniform in [0,1).
  std::complex<double> unimodular() {
    const double angle = 2.0 * std::numbers::pi * uniform();
    return {std::cos(angle), std::sin(angle)};
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace btw
