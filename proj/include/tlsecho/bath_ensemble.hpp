#pragma once

// Microscopic dipolar-bath simulation: the probed defect sits at the origin
// of a spherical shell populated with randomly placed, randomly oriented
// telegraph perturbers. Validates the exponential echo-decay law and the
// prefactor of the dipolar diffusion rate.

#include <cstddef>
#include <cstdint>

#include "tlsecho/telegraph.hpp"

namespace tlsecho {

struct BathEnsemble {
  double density = 0.0;   // c_B, perturbers per m^3
  double dipole_a = 0.0;  // probed-defect dipole moment, C m
  double dipole_b = 0.0;  // perturber dipole moment, C m
  double epsilon = 0.0;   // absolute permittivity of the host, F/m
  std::size_t n_bath = 0; // perturbers per realization
  double r_min = 1e-9;    // excluded-volume radius, m
  double r_max = 0.0;     // shell radius holding n_bath perturbers at density
  std::uint64_t seed = 0;
};

// Builds an ensemble whose shell [r_min, r_max] contains exactly n_bath
// perturbers at the requested density.
BathEnsemble make_bath(double density, double dipole_a, double dipole_b, double epsilon,
                       std::size_t n_bath, double r_min = 1e-9, std::uint64_t seed = 0);

// Two-pulse echo amplitude Re<e^{i Phi}> of the probed defect, averaged over
// perturber positions (uniform in the shell), orientations (cos(theta)
// uniform on [-1, 1]) and telegraph flip histories at jump rate W. The static
// frequency term is dropped; only the echo phase survives. For W = 0 the
// result is exactly 1 for any bath draw.
MonteCarloEstimate ensemble_echo(const BathEnsemble& bath, double jump_rate, double tau_s,
                                 std::size_t n_realizations, unsigned n_workers = 1);

}  // namespace tlsecho
