#include "tlsecho/loss_model.hpp"

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "tlsecho/constants.hpp"
#include "tlsecho/rng.hpp"
#include "tlsecho/units.hpp"

using namespace tlsecho;

TEST_CASE("loss tangent from the spectral-diffusion rate") {
  // Device values: D2 -> 0.0128, D3 -> 0.0136.
  const double d2 = tan_delta_from_spectral_diffusion(phys::two_pi * 743e3, phys::two_pi * 1.9e9);
  const double d3 = tan_delta_from_spectral_diffusion(phys::two_pi * 831e3, phys::two_pi * 2.0e9);
  CHECK(std::abs(d2 - 0.012) < 0.001);
  CHECK(std::abs(d3 - 0.014) < 0.001);
  CHECK(d2 == doctest::Approx(0.0128).epsilon(0.01));
  CHECK(d3 == doctest::Approx(0.0136).epsilon(0.01));

  CHECK(tan_delta_from_spectral_diffusion(0.0, 1e9) == 0.0);
  // Scale invariance.
  CHECK(tan_delta_from_spectral_diffusion(2e6, 4e9) ==
        doctest::Approx(tan_delta_from_spectral_diffusion(4e6, 8e9)).epsilon(1e-15));
  // The bath-width ratio divides through.
  CHECK(tan_delta_from_spectral_diffusion(2e6, 4e9, 2.0) ==
        doctest::Approx(0.5 * tan_delta_from_spectral_diffusion(2e6, 4e9)).epsilon(1e-15));
  CHECK_THROWS_AS(tan_delta_from_spectral_diffusion(1.0, 0.0), std::domain_error);
}

TEST_CASE("loss tangent from the defect density") {
  DielectricSpec spec;  // epsilon_r = 2.5
  const double d = units::debye_to_coulomb_meter(3.0);
  const double t = tan_delta_from_density(3e43, d, spec);
  CHECK(t == doctest::Approx(1.79e-3).epsilon(0.01));
  CHECK(tan_delta_from_density(0.0, d, spec) == 0.0);
  // Quadratic in the dipole moment.
  CHECK(tan_delta_from_density(3e43, 2.0 * d, spec) == doctest::Approx(4.0 * t).epsilon(1e-12));
}

TEST_CASE("rabi rate and dipole extraction") {
  CHECK(rabi_rate(1.0, 0.0, phys::two_pi * 7e9) == 0.0);
  // Unit photon flux: P = hbar omega_d gives Omega = 2 sqrt(gamma_R).
  const double w = phys::two_pi * 7e9;
  CHECK(rabi_rate(1.0, phys::hbar * w, w) == doctest::Approx(2.0).epsilon(1e-12));

  // pi pulse in 100 ns at -81 dBm and 7 GHz inverts to gamma_R ~ 1.4e2 1/s.
  const double theta = 100e-9;
  const double p_in = units::dbm_to_watts(-81.0);
  const double gamma_r = std::pow(phys::pi / theta, 2) * phys::hbar * w / (4.0 * p_in);
  CHECK(gamma_r == doctest::Approx(1.4e2).epsilon(0.05));
  CHECK(rabi_rate(gamma_r, p_in, w) == doctest::Approx(phys::pi / theta).epsilon(1e-12));

  // Dipole moment: hbar Omega / E, and the debye conversion round-trips.
  const auto dip = dipole_from_rabi(1.0007e-29 / phys::hbar, 1.0);
  CHECK(dip.coulomb_meter == doctest::Approx(1.0007e-29).epsilon(1e-9));
  CHECK(dip.debye == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(dipole_from_rabi(0.0, 1.0).coulomb_meter == 0.0);
  CHECK(dipole_from_rabi(2.0, 2.0).coulomb_meter ==
        doctest::Approx(0.5 * dipole_from_rabi(2.0, 1.0).coulomb_meter));
}

TEST_CASE("density from the echo calibration") {
  EchoCalibration cal;
  cal.pulse_length_s = 100e-9;
  cal.volume_m3 = 1.5e-13;
  cal.omega_d = phys::two_pi * 7e9;
  cal.p_in_w = 1e-12;
  // Round trip: choose alpha_out so the density inverts to 3e43.
  const double gamma_r = 140.0;
  const double gamma_a = phys::two_pi / cal.pulse_length_s;
  cal.alpha_out = 3e43 * cal.volume_m3 * gamma_a * std::sqrt(gamma_r);
  CHECK(density_from_echo(cal, gamma_r) == doctest::Approx(3e43).epsilon(1e-12));
  // Halving theta doubles gamma_A and halves the implied density.
  auto cal2 = cal;
  cal2.pulse_length_s /= 2.0;
  CHECK(density_from_echo(cal2, gamma_r) == doctest::Approx(1.5e43).epsilon(1e-12));
  cal.alpha_out = 0.0;
  CHECK(density_from_echo(cal, gamma_r) == 0.0);
}

TEST_CASE("per-cell attenuation") {
  AmplifierChainSpec chain;
  chain.capacitance_f = 39e-15;
  chain.z0_ohm = 50.0;
  chain.omega = phys::two_pi * 7e9;
  CHECK(cell_attenuation(chain, 0.0) == 1.0);
  CHECK(cell_attenuation(chain, 0.012) == doctest::Approx(0.998971).epsilon(1e-5));
  // Linear in tan delta.
  const double d1 = 1.0 - cell_attenuation(chain, 0.004);
  const double d2 = 1.0 - cell_attenuation(chain, 0.008);
  CHECK(d2 == doctest::Approx(2.0 * d1).epsilon(1e-12));
  // Validity guard.
  CHECK_THROWS_AS(cell_attenuation(chain, 2.0), std::domain_error);
}

TEST_CASE("per-cell gain") {
  AmplifierChainSpec chain;
  CHECK(per_cell_gain(chain) == doctest::Approx(1.0023543).epsilon(1e-6));
  chain.total_gain = 1.0;
  CHECK(per_cell_gain(chain) == 1.0);
  chain.total_gain = 120.3;
  const double g = per_cell_gain(chain);
  CHECK(std::pow(g, chain.n_cells) == doctest::Approx(120.3).epsilon(1e-12));
}

TEST_CASE("quantum efficiency") {
  CHECK(quantum_efficiency(1.0, 1.5) == 1.0);
  CHECK(quantum_efficiency(0.9, 1e9) == doctest::Approx(0.9).epsilon(1e-8));
  // Reference chain: g = 120.3^(1/2037), a = 0.998971 -> 0.56.
  AmplifierChainSpec chain;
  const double eta = quantum_efficiency(0.998971, per_cell_gain(chain));
  CHECK(eta == doctest::Approx(0.56).epsilon(0.01));
  CHECK_THROWS_AS(quantum_efficiency(0.5, 1.5), std::domain_error);  // a g <= 1
  CHECK_THROWS_AS(quantum_efficiency(1.2, 1.5), std::domain_error);
  CHECK_THROWS_AS(quantum_efficiency(0.9, 0.9), std::domain_error);
  // Monotone in a; in g the efficiency grows toward the asymptote a, since
  // d(eta)/dg = (1 - a)/(g - 1)^2 > 0 for a < 1.
  CHECK(quantum_efficiency(0.999, 1.005) > quantum_efficiency(0.997, 1.005));
  CHECK(quantum_efficiency(0.999, 1.01) > quantum_efficiency(0.999, 1.005));
  CHECK(quantum_efficiency(0.999, 1e6) < 0.999);
}

TEST_CASE("noise cascade: identity, one-cell case, closed form vs iteration") {
  AmplifierChainSpec chain;
  chain.n_cells = 1;
  // Identity cell.
  auto res = noise_cascade(chain, 1.0, 1.0, 0.5);
  CHECK(res.closed_form == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(res.iterated == doctest::Approx(0.5).epsilon(1e-15));
  // One cell, a = 1, g = 2, N0 = NQ = 1/2: N1 = 1.5.
  res = noise_cascade(chain, 1.0, 2.0, 0.5);
  CHECK(res.closed_form == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(res.iterated == doctest::Approx(1.5).epsilon(1e-15));

  // Randomized grid: closed form and iteration agree to 1e-12 relative, with
  // the exponent kept inside the double range.
  SplitMix64 g(20260810);
  for (int trial = 0; trial < 200; ++trial) {
    AmplifierChainSpec c;
    c.n_cells = 1 + static_cast<int>(g.uniform01() * 9999);
    double t, gain, a;
    do {
      t = 0.5 + g.uniform01();
      a = 0.9 + 0.1 * g.uniform01();
      gain = t / a;
    } while (gain < 1.0 || std::abs(c.n_cells * std::log(t)) > 600.0);
    c.total_gain = std::pow(gain, c.n_cells);
    const auto r = noise_cascade(c, a, gain, 0.5);
    CHECK(std::abs(r.closed_form - r.iterated) <=
          1e-12 * std::max(std::abs(r.closed_form), std::abs(r.iterated)));
  }

  // t = 1 exactly: linear growth limit.
  AmplifierChainSpec unit;
  unit.n_cells = 100;
  const double a_unit = 0.998;
  const double g_unit = 1.0 / a_unit;
  const auto lim = noise_cascade(unit, a_unit, g_unit, 0.5);
  const double chi = (2.0 * g_unit - 1.0 - 1.0) * 0.5;
  CHECK(lim.closed_form == doctest::Approx(0.5 + 100.0 * chi).epsilon(1e-9));
}

TEST_CASE("cascade consistency with the quantum efficiency") {
  // Same per-cell numbers as the reference chain, run deep into the T >> 1
  // regime (the identity eta = T/N_out holds up to O(1/T) corrections).
  AmplifierChainSpec chain;
  chain.omega = phys::two_pi * 7e9;
  const double g = per_cell_gain(chain);  // 120.3^(1/2037)
  const double a = 0.998971;
  chain.n_cells = 12000;
  chain.total_gain = std::pow(g, chain.n_cells);
  const auto res = noise_cascade(chain, a, g, 0.5);
  const double transmission = std::pow(g * a, chain.n_cells);
  CHECK(transmission > 1e4);
  const double eta_from_noise = transmission / res.closed_form;
  CHECK(std::abs(eta_from_noise - quantum_efficiency(a, g)) < 1e-3);
}

TEST_CASE("unit conversions round-trip") {
  for (double dbm : {-120.0, -81.0, -55.0, 0.0, 10.0}) {
    CHECK(units::watts_to_dbm(units::dbm_to_watts(dbm)) == doctest::Approx(dbm).epsilon(1e-12));
  }
  for (double d : {0.1, 1.0, 3.0, 10.0}) {
    CHECK(units::coulomb_meter_to_debye(units::debye_to_coulomb_meter(d)) ==
          doctest::Approx(d).epsilon(1e-12));
  }
  CHECK(units::dbm_to_watts(-81.0) == doctest::Approx(7.943e-12).epsilon(1e-3));
  CHECK(units::debye_to_coulomb_meter(1.0) == 3.335641e-30);
  CHECK(units::angular_to_hz(units::hz_to_angular(52e3)) == doctest::Approx(52e3).epsilon(1e-15));
}
