#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace statsel {

/// Counter-based generator: output i is a pure function of (key, i), so any
/// stream position can be reproduced without replaying earlier draws.
/// split() derives an independent child stream, which is how per-user and
/// per-sample randomness is keyed.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc908ULL)) {}

  CounterRng split(std::uint64_t stream) const {
    return CounterRng(Raw{}, mix(key_ ^ mix(stream + 0xbb67ae8584caa73bULL)));
  }

  std::uint64_t next() { return mix(key_ + kGolden * ++counter_); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  /// Exponential with unit mean.
  double exponential() { return -std::log(uniform_pos()); }

  /// Circularly-symmetric complex Gaussian with unit variance.
  std::complex<double> complex_normal() {
    const double r = std::sqrt(-std::log(uniform_pos()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire-style rejection keeps the draw unbiased.
    const std::uint64_t limit = (~std::uint64_t{0} - n + 1) % n;
    std::uint64_t x = next();
    while (x < limit) x = next();
    return x % n;
  }

  std::uint64_t key() const { return key_; }

 private:
  struct Raw {};
  CounterRng(Raw, std::uint64_t key) : key_(key) {}

  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace statsel
