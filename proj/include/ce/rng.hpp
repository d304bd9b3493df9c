// Counter-based pseudo-random generation (SplitMix64 in counter mode).
//
// Every draw is mix64(key + counter * GAMMA): a pure function of (key,
// counter), so streams can be split by deriving a child key and replayed
// independently of call order or thread scheduling.  Replicate r of any
// resampling loop uses split(r); results are bit-identical for a given seed
// whether replicates run serially or in parallel.
#pragma once

#include <cmath>
#include <cstdint>

namespace ce {

// Finalizer of the SplitMix64 sequence; a bijective 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix64(seed ^ 0x5851f42d4c957f2dULL)) {}

  // Child stream k: key derived from (key, k), counter restarted.
  Rng split(std::uint64_t k) const { return Rng(key_ ^ mix64(k + 0x9e3779b97f4a7c15ULL), 0); }

  std::uint64_t next_u64() { return mix64(key_ + ++counter_ * 0x9e3779b97f4a7c15ULL); }

  // Uniform on [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on [a, b).
  double uniform(double a, double b) { return a + (b - a) * next_double(); }

  // Uniform integer in [0, n) by rejection; exact and compiler-independent.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Standard normal via Box-Muller (one value per pair; partner discarded).
  double normal() {
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  Rng(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ce
