#pragma once

#include <cmath>
#include <cstdint>

#include "tlsecho/constants.hpp"

namespace tlsecho {

// SplitMix64: a tiny 64-bit mixer-based generator. Substreams derived from
// (seed, index) let every Monte Carlo history own an independent stream, so
// results depend only on the seed and the history index, never on thread
// scheduling.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool coin() { return (next() >> 63) != 0; }

  // Exponential waiting time for a Poisson process of the given rate.
  double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

  // Standard normal via Box-Muller; one deviate per two uniforms.
  double normal() {
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(phys::two_pi * u2);
  }

 private:
  std::uint64_t state_;
};

// Independent substream for (seed, index). One extra mix round separates
// adjacent indices.
inline SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 g(seed ^ (0xD1B54A32D192ED03ull * (index + 1)));
  g.next();
  return g;
}

}  // namespace tlsecho
