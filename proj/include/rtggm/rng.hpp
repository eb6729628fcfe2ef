#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rtggm {

// Deterministic random stream. The core generator is std::mt19937_64 (whose
// output sequence is fixed by the standard); all real-valued transforms are
// implemented here rather than with std::*_distribution so that draws are
// bit-identical across compilers and platforms.
//
// child(i) derives an independent substream keyed by (stream key, i) via
// SplitMix64 mixing. Per-chain / per-datum substreams make parallel execution
// produce the same draws as serial execution.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(seed), eng_(mix_(seed)) {}

  // Independent substream for slot `idx`, reproducible from (key, idx) only.
  RngStream child(std::uint64_t idx) const {
    return RngStream(mix_(key_ + 0x9E3779B97F4A7C15ull * (idx + 1)));
  }

  std::uint64_t bits() { return eng_(); }

  // Uniform on [0, 1): 53-bit mantissa, can return 0, never 1.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]: safe as a log() argument.
  double uniform_pos() {
    return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second draw of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Standard exponential (rate 1).
  double exponential() { return -std::log(uniform_pos()); }

  // Unbiased integer in [0, n) by rejection on the top bits.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

 private:
  static std::uint64_t mix_(std::uint64_t z) {
    // SplitMix64 finalizer.
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rtggm
