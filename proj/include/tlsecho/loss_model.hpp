#pragma once

// Material and amplifier figures of merit derived from the fitted echo
// parameters: loss tangent via two independent routes, dipole moment and
// defect density from the echo calibration, per-cell attenuation, the
// distributed amplifier noise cascade, and quantum efficiency.

#include <cstdint>

namespace tlsecho {

struct DielectricSpec {
  double epsilon_r = 2.5;             // assumed relative permittivity of the bilayer
  double gamma_b_over_omega_b = 1.0;  // bath spectral width over bath frequency
};

struct AmplifierChainSpec {
  int n_cells = 2037;
  double total_gain = 120.3;    // linear power gain of the full chain
  double capacitance_f = 39e-15;  // per-cell shunt capacitance (assumed)
  double z0_ohm = 50.0;         // line impedance (assumed)
  double omega = 0.0;           // evaluation angular frequency, rad/s
  double quantum_noise = 0.5;   // N_Q, photons
};

struct EchoCalibration {
  double p_in_w = 0.0;               // drive power at the device input
  double omega_d = 0.0;              // drive angular frequency, rad/s
  double pulse_length_s = 0.0;       // theta; excitation bandwidth gamma_A = 2 pi / theta
  double volume_m3 = 1.5e-13;        // dielectric volume of the capacitor chain
  double alpha_out = 0.0;            // peak echo amplitude, sqrt(photons/s)
  double field_per_sqrt_watt = 0.0;  // drive field per sqrt(input power), (V/m)/sqrt(W)
};

// tan(delta) = 6 sqrt(3) pi Gamma_sd0 / (ratio * omega_b).
double tan_delta_from_spectral_diffusion(double gamma_sd0, double omega_b, double ratio = 1.0);

// tan(delta) = 4 pi^2 N0 d_A^2 / (3 epsilon_r epsilon0).
double tan_delta_from_density(double n0_per_j_m3, double dipole_cm, const DielectricSpec& spec);

// Rabi angular rate Omega = 2 sqrt(gamma_R P / (hbar omega_d)).
double rabi_rate(double gamma_r, double p_in_w, double omega_d);

struct DipoleMoment {
  double coulomb_meter = 0.0;
  double debye = 0.0;
};

// d_A = hbar Omega / E_d, reported in SI and debye.
DipoleMoment dipole_from_rabi(double omega_rabi, double e_field_v_per_m);

// N0 = alpha_out / (V gamma_A sqrt(gamma_R)), gamma_A = 2 pi / theta.
double density_from_echo(const EchoCalibration& cal, double gamma_r);

// a = 1 - c omega Z0 tan(delta); requires c omega Z0 tan(delta) < 0.1.
double cell_attenuation(const AmplifierChainSpec& chain, double tan_delta);

// g = total_gain^(1 / n_cells).
double per_cell_gain(const AmplifierChainSpec& chain);

// eta = (a g - 1) / (g - 1); domain error when a g <= 1 (net-lossy cell).
double quantum_efficiency(double a, double g);

struct CascadeResult {
  double closed_form = 0.0;  // T N0 + chi (T - 1) / (t - 1), t = g a
  double iterated = 0.0;     // n_cells explicit steps
};

// Output noise photon number after the full chain, via the closed form and
// the explicit per-cell iteration (they agree to 1e-12 relative).
CascadeResult noise_cascade(const AmplifierChainSpec& chain, double a, double g, double n_input);

}  // namespace tlsecho
