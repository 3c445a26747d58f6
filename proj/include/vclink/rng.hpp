#pragma once

// Reproducible random streams: xoshiro256** seeded through SplitMix64.
//
// Substream rule: stream(seed, index) is seeded with splitmix64 applied to
// mix(seed, index) = splitmix64(seed) ^ splitmix64(index + 0x9E3779B97F4A7C15).
// Every sampler below is written out in full so draws are identical on all platforms
// (std:: distributions are implementation-defined).

#include <array>
#include <cstdint>
#include <limits>

namespace vclink {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Deterministic 64-bit hash of (seed, index) used to derive substreams and per-task seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed) noexcept;
  RngStream(std::uint64_t seed, std::uint64_t index) noexcept : RngStream(derive_seed(seed, index)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  result_type operator()() noexcept { return next(); }

  std::uint64_t next() noexcept;
  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  // Uniform on {0, ..., n-1}; n >= 1.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;
  // Standard normal (Marsaglia polar method, one cached spare).
  double normal() noexcept;
  // Gamma(shape, 1) by Marsaglia-Tsang; shape > 0.
  double gamma(double shape) noexcept;
  double chi_square(double df) noexcept { return 2.0 * gamma(0.5 * df); }

 private:
  std::array<std::uint64_t, 4> s_{};
  bool hasSpare_ = false;
  double spare_ = 0.0;
};

}  // namespace vclink
