#pragma once

// Self-contained seedable RNG so that simulation results are reproducible
// bit-for-bit across runs and platforms. xoshiro256** for the stream,
// splitmix64 for seeding and for deriving per-replica seeds.

#include <array>
#include <cmath>
#include <cstdint>

#include "fogsim/errors.hpp"

namespace fogsim {

// splitmix64 output function (Vigna). Fixed constants, do not change:
// derived seeds are part of the reproducibility contract.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

// Replica i draws the i-th point of the splitmix64 gamma stream from base.
inline constexpr std::uint64_t derive_seed(std::uint64_t base_seed,
                                           std::uint64_t replica_index) {
  return mix64(base_seed + 0x9E3779B97F4A7C15ull * (replica_index + 1));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) {
      sm += 0x9E3779B97F4A7C15ull;
      word = mix64(sm);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0,1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    if (!(hi > lo)) throw ParamError("Rng::uniform: need lo < hi");
    return lo + (hi - lo) * next_double();
  }

  // Uniform in [0,n). Fixed-point multiply; bias is < 2^-64 per draw.
  std::uint64_t next_below(std::uint64_t n) {
    const auto wide = static_cast<__uint128_t>(next_u64()) * static_cast<__uint128_t>(n);
    return static_cast<std::uint64_t>(wide >> 64);
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Unit-mean exponential unless scaled; used for Rayleigh fading power.
  double exponential(double mean = 1.0) { return -mean * std::log1p(-next_double()); }

  // Box-Muller, one value per call so the draw count stays predictable.
  double normal(double mean, double stddev) {
    const double u1 = 1.0 - next_double();  // (0,1]
    const double u2 = next_double();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    return mean + stddev * z;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace fogsim
