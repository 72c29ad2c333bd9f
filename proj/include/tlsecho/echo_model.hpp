#pragma once

// Analytic forward models for two- and three-pulse dielectric echoes:
// temperature-dependent diffusion and jump rates, the flip-history kernels,
// echo amplitudes in both model variants, and the 1/e coherence/relaxation
// times implied by the model. All operations are pure.

namespace tlsecho {

enum class ModelVariant {
  // Temperature-independent intrinsic dephasing gamma2, with gamma1 = 2*gamma2.
  BaseIntrinsic,
  // Linear-in-T relaxation: gamma1(T) = w_ex*T + 2*gamma2_star,
  // gamma2(T) = w_ex*T/2 + gamma2_star.
  RefinedTemperatureDependent,
};

// Fitted physical rate set for one device. All rates are angular (rad/s);
// w_ex is rad/(s K). BaseIntrinsic uses gamma2; the refined variant uses
// gamma2_star and w_ex. Unused fields stay at zero.
struct SpectralDiffusionParams {
  double gamma_sd0 = 0.0;    // high-temperature spectral-diffusion rate
  double omega_b = 0.0;      // bath TLS frequency
  double gamma1_b = 0.0;     // bath TLS single-phonon relaxation rate
  double gamma2 = 0.0;       // intrinsic dephasing (BaseIntrinsic)
  double gamma2_star = 0.0;  // residual dephasing (Refined)
  double w_ex = 0.0;         // linear-in-T relaxation slope (Refined)
};

// Throws std::invalid_argument if the fields required by the variant are
// missing/non-positive or any rate is negative.
void validate(const SpectralDiffusionParams& p, ModelVariant variant);

// Double-well defect level: asymmetry delta, tunneling delta0 > 0, and the
// derived splitting omega0 = sqrt(delta^2 + delta0^2) (all rad/s).
struct TlsLevel {
  double delta;
  double delta0;
  double omega0;
  TlsLevel(double delta_, double delta0_);
};

// Gamma_sd(T) = gamma_sd0 * sech^2(hbar omega_b / (2 kB T)); T > 0.
double gamma_sd(const SpectralDiffusionParams& p, double temperature_k);
// Explicit temperature limits, so callers never pass sentinel temperatures.
double gamma_sd_high_t_limit(const SpectralDiffusionParams& p);  // = gamma_sd0
double gamma_sd_zero_t_limit(const SpectralDiffusionParams& p);  // = 0

// W(T) = gamma1_b * coth(hbar omega_b / (2 kB T)); T > 0.
double jump_rate(const SpectralDiffusionParams& p, double temperature_k);
double jump_rate_zero_t_limit(const SpectralDiffusionParams& p);  // = gamma1_b

// Variant-resolved dephasing/relaxation rates at temperature T.
double gamma2_at(const SpectralDiffusionParams& p, ModelVariant v, double temperature_k);
double gamma1_at(const SpectralDiffusionParams& p, ModelVariant v, double temperature_k);

// Two-pulse flip-history kernel alpha(2 tau, W) for pulse delay tau:
//   2 e^(-2W tau) tau [ I1(2W tau) + (pi/2)(I1 L0 - I0 L1)(2W tau) ].
// Evaluated in exp-scaled space; alpha(tau, 0) = 0. Units: seconds.
double alpha_kernel(double tau_s, double jump_rate_per_s);

// Three-pulse kernel
//   beta = e^(-2W tau) tau [I0 + I1](1 - e^(-2W tau'))
//        + (1/2) alpha(2 tau, W) (1 + e^(-2W tau')).
// beta(tau, 0, W) = alpha(2 tau, W) exactly.
double beta_kernel(double tau_s, double tau_prime_s, double jump_rate_per_s);

struct StimulatedOptions {
  // The printed three-pulse model carries the high-temperature diffusion rate
  // in its exponent. The default instead evaluates the rate at the operating
  // temperature, matching the two-pulse model; set this to use the
  // high-temperature rate literally.
  bool use_high_t_diffusion_rate = false;
};

// Two-pulse echo amplitude A0 * e^(-2 gamma2(T) tau) * e^(-Gamma_sd(T) alpha).
double hahn_amplitude(const SpectralDiffusionParams& p, ModelVariant v, double a0,
                      double tau_s, double temperature_k);

// Three-pulse echo amplitude A0 * e^(-gamma1(T) tau') * e^(-Gamma_sd beta).
double stimulated_amplitude(const SpectralDiffusionParams& p, ModelVariant v, double a0,
                            double tau_s, double tau_prime_s, double temperature_k,
                            const StimulatedOptions& opts = {});

// A * exp(-(t/t1)^p); t1 > 0, p in (0, 2]. Equals A/e at t = t1 for any p.
double stretched_exponential(double amplitude, double t_s, double t1_s, double p);

// The delay 2*tau at which the two-pulse amplitude falls to A0/e. Bracketed
// root search on [1e-12 s, 1 s] (in 2*tau), relative tolerance 1e-9; throws
// FitError if the amplitude never crosses 1/e inside the bracket.
double t2_of_model(const SpectralDiffusionParams& p, ModelVariant v, double temperature_k);

// The wait time tau' at which the three-pulse amplitude falls to 1/e of its
// zero-wait value A(tau, 0, T). Same bracket and tolerance as t2_of_model.
double t1_of_model(const SpectralDiffusionParams& p, ModelVariant v, double tau_s,
                   double temperature_k, const StimulatedOptions& opts = {});

}  // namespace tlsecho
