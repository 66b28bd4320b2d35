#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace prolearn {

// Every consumer of randomness draws from its own tagged stream so that, e.g.,
// tie-breaking never perturbs data generation.
enum class StreamTag : std::uint64_t {
  data = 1,
  tiebreak = 2,
  init = 3,
  shuffle = 4,
  explore = 5,
  cell = 6,
};

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Combine two words into a seed; order matters.
constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a + 0x9e3779b97f4a7c15ULL + mix64(b ^ 0x632be59bd9b4e019ULL));
}

/// SplitMix64 generator. Small, fast and with a well-defined output sequence,
/// so results do not depend on the standard library implementation.
class Rng {
 public:
  using result_type = std::uint64_t;

  constexpr explicit Rng(std::uint64_t state = 0) noexcept : state_(state) {}

  /// Independent stream keyed by (seed, tag, index).
  static constexpr Rng stream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) noexcept {
    return Rng(hash_combine(hash_combine(seed, static_cast<std::uint64_t>(tag)), index));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Uniform on {0, ..., n-1}; n > 0.
  int uniform_int(int n) noexcept {
    auto wide = static_cast<unsigned __int128>((*this)()) * static_cast<unsigned>(n);
    return static_cast<int>(wide >> 64);
  }

  // Box-Muller, one variate per call.
  double normal() noexcept {
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace prolearn
