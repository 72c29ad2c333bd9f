#include "tlsecho/loss_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tlsecho/constants.hpp"
#include "tlsecho/units.hpp"

namespace tlsecho {
namespace {

void require_positive(double v, const char* name) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw std::domain_error(std::string(name) + " must be finite and > 0, got " + std::to_string(v));
  }
}

void require_nonnegative(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0) {
    throw std::domain_error(std::string(name) + " must be finite and >= 0, got " + std::to_string(v));
  }
}

}  // namespace

double tan_delta_from_spectral_diffusion(double gamma_sd0, double omega_b, double ratio) {
  require_nonnegative(gamma_sd0, "gamma_sd0");
  require_positive(omega_b, "omega_b");
  require_positive(ratio, "gamma_b/omega_b ratio");
  return 6.0 * std::sqrt(3.0) * phys::pi * gamma_sd0 / (ratio * omega_b);
}

double tan_delta_from_density(double n0_per_j_m3, double dipole_cm, const DielectricSpec& spec) {
  require_nonnegative(n0_per_j_m3, "n0");
  require_nonnegative(dipole_cm, "dipole");
  if (!(spec.epsilon_r >= 1.0)) throw std::domain_error("DielectricSpec.epsilon_r must be >= 1");
  const double eps = spec.epsilon_r * phys::epsilon0;
  return 4.0 * phys::pi * phys::pi / (3.0 * eps) * n0_per_j_m3 * dipole_cm * dipole_cm;
}

double rabi_rate(double gamma_r, double p_in_w, double omega_d) {
  require_nonnegative(gamma_r, "gamma_r");
  require_nonnegative(p_in_w, "p_in");
  require_positive(omega_d, "omega_d");
  return 2.0 * std::sqrt(gamma_r * p_in_w / (phys::hbar * omega_d));
}

DipoleMoment dipole_from_rabi(double omega_rabi, double e_field_v_per_m) {
  require_nonnegative(omega_rabi, "omega_rabi");
  require_positive(e_field_v_per_m, "e_field");
  const double d = phys::hbar * omega_rabi / e_field_v_per_m;
  return {d, units::coulomb_meter_to_debye(d)};
}

double density_from_echo(const EchoCalibration& cal, double gamma_r) {
  require_nonnegative(cal.alpha_out, "alpha_out");
  require_positive(cal.volume_m3, "volume");
  require_positive(cal.pulse_length_s, "pulse_length");
  require_positive(gamma_r, "gamma_r");
  const double gamma_a = phys::two_pi / cal.pulse_length_s;
  return cal.alpha_out / (cal.volume_m3 * gamma_a * std::sqrt(gamma_r));
}

double cell_attenuation(const AmplifierChainSpec& chain, double tan_delta) {
  require_positive(chain.capacitance_f, "capacitance");
  require_positive(chain.z0_ohm, "z0");
  require_positive(chain.omega, "omega");
  require_nonnegative(tan_delta, "tan_delta");
  const double x = chain.capacitance_f * chain.omega * chain.z0_ohm * tan_delta;
  if (!(x < 0.1)) {
    throw std::domain_error("cell_attenuation: c*omega*Z0*tan_delta = " + std::to_string(x) +
                            " violates the smallness condition (< 0.1)");
  }
  return 1.0 - x;
}

double per_cell_gain(const AmplifierChainSpec& chain) {
  if (chain.n_cells < 1) throw std::domain_error("per_cell_gain: n_cells must be >= 1");
  require_positive(chain.total_gain, "total_gain");
  return std::pow(chain.total_gain, 1.0 / static_cast<double>(chain.n_cells));
}

double quantum_efficiency(double a, double g) {
  if (!(g > 1.0)) throw std::domain_error("quantum_efficiency: g must be > 1");
  if (!(a > 0.0) || a > 1.0) throw std::domain_error("quantum_efficiency: a must be in (0, 1]");
  if (!(a * g > 1.0)) {
    throw std::domain_error("quantum_efficiency: a*g <= 1, net-lossy cell (undefined)");
  }
  return (a * g - 1.0) / (g - 1.0);
}

CascadeResult noise_cascade(const AmplifierChainSpec& chain, double a, double g, double n_input) {
  if (chain.n_cells < 1) throw std::domain_error("noise_cascade: n_cells must be >= 1");
  if (!(a > 0.0) || a > 1.0) throw std::domain_error("noise_cascade: a must be in (0, 1]");
  if (!(g >= 1.0)) throw std::domain_error("noise_cascade: g must be >= 1");
  require_nonnegative(n_input, "n_input");

  const double t = g * a;
  const double chi = (2.0 * g - g * a - 1.0) * chain.quantum_noise;
  const double n = chain.n_cells;

  // Geometric sum via expm1/log to stay accurate for t near 1; t = 1 exactly
  // degenerates to n terms.
  const double lt = std::log(t);
  double closed;
  if (lt == 0.0) {
    closed = n_input + chi * n;
  } else {
    const double transmission = std::exp(n * lt);
    closed = transmission * n_input + chi * std::expm1(n * lt) / std::expm1(lt);
  }

  double iterated = n_input;
  for (int c = 0; c < chain.n_cells; ++c) iterated = t * iterated + chi;

  return {closed, iterated};
}

}  // namespace tlsecho
