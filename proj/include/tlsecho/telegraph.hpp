#pragma once

// Telegraph-noise Monte Carlo oracle for the flip-history kernels. Every
// history owns an RNG substream derived from (seed, history index), so the
// estimate is deterministic for a fixed seed and worker count and
// statistically equivalent across worker counts.

#include <cstdint>

#include "tlsecho/rng.hpp"

namespace tlsecho {

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

struct TelegraphConfig {
  double jump_rate = 0.0;     // W, 1/s
  double tau_s = 0.0;         // first interpulse delay
  double tau_prime_s = 0.0;   // second wait; 0 selects the two-pulse sequence
  std::uint64_t n_histories = 1;
  std::uint64_t seed = 0;
};

// Monte Carlo average of |int_0^tau h dt - int_{tau+tau'}^{2tau+tau'} h dt|
// over telegraph histories h(t) = +-1 with Poisson sign flips at rate W and
// equiprobable initial sign. With tau' = 0 this is the two-pulse average
// |int_0^{2tau} s(t) h(t) dt| estimating alpha_kernel; otherwise it estimates
// beta_kernel. Integration is event-driven (exact between flips); the flip
// parity across the idle gap is drawn directly from its exact probability.
MonteCarloEstimate flip_history_average(const TelegraphConfig& cfg, unsigned n_workers = 1);

namespace detail {

// Advances h through a window of length `length`, consuming flips from g;
// returns the integral of h over the window.
inline double telegraph_window_integral(SplitMix64& g, double& h, double rate, double length) {
  double t = 0.0, acc = 0.0;
  while (true) {
    const double tn = t + g.exponential(rate);
    if (!(tn < length)) {  // also catches inf when the rate is zero
      acc += h * (length - t);
      return acc;
    }
    acc += h * (tn - t);
    h = -h;
    t = tn;
  }
}

// One full history of the two-window difference above.
inline double telegraph_history(SplitMix64& g, double rate, double tau, double tau_prime) {
  double h = g.coin() ? 1.0 : -1.0;
  if (rate == 0.0 || tau == 0.0) return 0.0;  // frozen bath: exact cancellation
  const double first = telegraph_window_integral(g, h, rate, tau);
  if (tau_prime > 0.0) {
    const double p_odd = 0.5 * (1.0 - std::exp(-2.0 * rate * tau_prime));
    if (g.uniform01() < p_odd) h = -h;
  }
  const double second = telegraph_window_integral(g, h, rate, tau);
  return first - second;
}

}  // namespace detail
}  // namespace tlsecho
