#pragma once

// Two-pulse echo amplitude versus drive power. A defect with radiative rate
// gamma_R driven at photon flux |a_in|^2 = P/(hbar omega_d) nutates at
// Omega = 2 sqrt(gamma_R) |a_in|; the ideal two-pulse echo envelope is
// sin(Omega_1 theta) sin^2(Omega_2 theta / 2). A log-normal spread of
// radiative rates models the damping of the observed power oscillations.

#include <cstddef>
#include <cstdint>

namespace tlsecho {

struct RabiConfig {
  double gamma_r = 0.0;          // median-scale radiative rate, 1/s
  double pulse1_power_w = 0.0;   // W at the device input
  double pulse2_power_w = 0.0;   // W
  double pulse_length_s = 0.0;   // theta
  double omega_d = 0.0;          // drive angular frequency, rad/s
  double coupling_spread = 0.0;  // relative std of the gamma_R distribution
  std::size_t n_samples = 1;     // draws when coupling_spread > 0
  std::uint64_t seed = 0;
};

// Rabi angular rate 2 sqrt(gamma_R P / (hbar omega_d)).
double rabi_angular_rate(double gamma_r, double power_w, double omega_d);

// Echo envelope averaged over the radiative-rate spread; exactly
// sin(O1 theta) sin^2(O2 theta / 2) when coupling_spread = 0.
double two_pulse_rabi_amplitude(const RabiConfig& cfg);

}  // namespace tlsecho
