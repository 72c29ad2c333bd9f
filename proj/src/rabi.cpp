#include "tlsecho/rabi.hpp"

#include <cmath>
#include <stdexcept>

#include "tlsecho/constants.hpp"
#include "tlsecho/rng.hpp"

namespace tlsecho {
namespace {

double envelope(double gamma, const RabiConfig& cfg) {
  const double o1 = rabi_angular_rate(gamma, cfg.pulse1_power_w, cfg.omega_d);
  const double o2 = rabi_angular_rate(gamma, cfg.pulse2_power_w, cfg.omega_d);
  const double s2 = std::sin(0.5 * o2 * cfg.pulse_length_s);
  return std::sin(o1 * cfg.pulse_length_s) * s2 * s2;
}

}  // namespace

double rabi_angular_rate(double gamma_r, double power_w, double omega_d) {
  if (!(gamma_r >= 0.0) || !(power_w >= 0.0) || !(omega_d > 0.0)) {
    throw std::domain_error("rabi_angular_rate: gamma_r, power >= 0 and omega_d > 0 required");
  }
  return 2.0 * std::sqrt(gamma_r * power_w / (phys::hbar * omega_d));
}

double two_pulse_rabi_amplitude(const RabiConfig& cfg) {
  if (!(cfg.pulse1_power_w >= 0.0) || !(cfg.pulse2_power_w >= 0.0) ||
      !(cfg.pulse_length_s > 0.0) || !(cfg.omega_d > 0.0) || !(cfg.gamma_r >= 0.0) ||
      !(cfg.coupling_spread >= 0.0) || cfg.n_samples == 0) {
    throw std::invalid_argument("RabiConfig: powers/spread >= 0, theta/omega_d > 0, n_samples >= 1");
  }
  if (cfg.coupling_spread == 0.0) return envelope(cfg.gamma_r, cfg);

  // Log-normal spread with unit mean and relative std = coupling_spread.
  const double s2 = std::log1p(cfg.coupling_spread * cfg.coupling_spread);
  const double mu = -0.5 * s2;
  const double s = std::sqrt(s2);
  double sum = 0.0;
  for (std::size_t k = 0; k < cfg.n_samples; ++k) {
    SplitMix64 g = substream(cfg.seed, k);
    const double gamma = cfg.gamma_r * std::exp(mu + s * g.normal());
    sum += envelope(gamma, cfg);
  }
  return sum / static_cast<double>(cfg.n_samples);
}

}  // namespace tlsecho
