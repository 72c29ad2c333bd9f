#include "tlsecho/echo_model.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "tlsecho/constants.hpp"
#include "tlsecho/errors.hpp"
#include "tlsecho/special_functions.hpp"

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

double thermal_argument(const SpectralDiffusionParams& p, double temperature_k) {
  require_positive(temperature_k, "temperature_k");
  return phys::hbar * p.omega_b / (2.0 * phys::k_boltzmann * temperature_k);
}

// Monotonically increasing f with f(0) < 0: grow the bracket geometrically
// from lo_start, then bisect with secant acceleration to rel_tol.
double find_increasing_root(const std::function<double(double)>& f, double lo_start,
                            double hi_limit, double rel_tol, const char* what) {
  double hi = lo_start;
  double fhi = f(hi);
  if (fhi >= 0.0) return hi;  // crossing below the smallest resolvable delay
  double lo = hi, flo = fhi;
  while (fhi < 0.0) {
    lo = hi;
    flo = fhi;
    hi *= 2.0;
    if (hi > hi_limit) {
      throw FitError(std::string(what) + ": no 1/e crossing within [" + std::to_string(lo_start) +
                     ", " + std::to_string(hi_limit) + "] s");
    }
    fhi = f(hi);
  }
  for (int it = 0; it < 200 && (hi - lo) > rel_tol * hi; ++it) {
    // Secant proposal, fall back to bisection when it leaves the bracket.
    double mid = lo - flo * (hi - lo) / (fhi - flo);
    if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if (fmid < 0.0) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
      fhi = fmid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void validate(const SpectralDiffusionParams& p, ModelVariant variant) {
  auto check = [](double v, const char* name, bool strictly_positive) {
    if (!std::isfinite(v) || v < 0.0 || (strictly_positive && v == 0.0)) {
      throw std::invalid_argument(std::string("SpectralDiffusionParams.") + name + " invalid: " +
                                  std::to_string(v));
    }
  };
  check(p.gamma_sd0, "gamma_sd0", false);
  check(p.omega_b, "omega_b", true);
  check(p.gamma1_b, "gamma1_b", false);
  if (variant == ModelVariant::BaseIntrinsic) {
    check(p.gamma2, "gamma2", false);
  } else {
    check(p.gamma2_star, "gamma2_star", false);
    check(p.w_ex, "w_ex", false);
  }
}

TlsLevel::TlsLevel(double delta_, double delta0_) : delta(delta_), delta0(delta0_) {
  if (!std::isfinite(delta) || !std::isfinite(delta0) || delta0 <= 0.0) {
    throw std::invalid_argument("TlsLevel: delta0 must be finite and > 0");
  }
  omega0 = std::sqrt(delta * delta + delta0 * delta0);
}

double gamma_sd(const SpectralDiffusionParams& p, double temperature_k) {
  return p.gamma_sd0 * sech2(thermal_argument(p, temperature_k));
}

double gamma_sd_high_t_limit(const SpectralDiffusionParams& p) { return p.gamma_sd0; }
double gamma_sd_zero_t_limit(const SpectralDiffusionParams&) { return 0.0; }

double jump_rate(const SpectralDiffusionParams& p, double temperature_k) {
  return p.gamma1_b * coth(thermal_argument(p, temperature_k));
}

double jump_rate_zero_t_limit(const SpectralDiffusionParams& p) { return p.gamma1_b; }

double gamma2_at(const SpectralDiffusionParams& p, ModelVariant v, double temperature_k) {
  if (v == ModelVariant::BaseIntrinsic) return p.gamma2;
  return p.w_ex * temperature_k / 2.0 + p.gamma2_star;
}

double gamma1_at(const SpectralDiffusionParams& p, ModelVariant v, double temperature_k) {
  if (v == ModelVariant::BaseIntrinsic) return 2.0 * p.gamma2;
  return p.w_ex * temperature_k + 2.0 * p.gamma2_star;
}

double alpha_kernel(double tau_s, double jump_rate_per_s) {
  require_nonnegative(tau_s, "tau_s");
  require_nonnegative(jump_rate_per_s, "jump_rate");
  const double x = 2.0 * jump_rate_per_s * tau_s;
  if (x == 0.0) return 0.0;
  const double i0e = bessel_i0_scaled(x);
  const double i1e = bessel_i1_scaled(x);
  const double d0 = bessel_i0_minus_struve_l0(x);
  const double d1 = bessel_i1_minus_struve_l1(x);
  // e^(-x) [I1 + (pi/2)(I1 L0 - I0 L1)] with the Struve part rewritten through
  // the I-L differences: I1 L0 - I0 L1 = I0 (I1-L1) - I1 (I0-L0).
  return 2.0 * tau_s * (i1e + 0.5 * phys::pi * (i0e * d1 - i1e * d0));
}

double beta_kernel(double tau_s, double tau_prime_s, double jump_rate_per_s) {
  require_nonnegative(tau_s, "tau_s");
  require_nonnegative(tau_prime_s, "tau_prime_s");
  require_nonnegative(jump_rate_per_s, "jump_rate");
  const double x = 2.0 * jump_rate_per_s * tau_s;
  const double q = std::exp(-2.0 * jump_rate_per_s * tau_prime_s);
  const double pair = (bessel_i0_scaled(x) + bessel_i1_scaled(x)) * tau_s;
  return pair * (1.0 - q) + 0.5 * alpha_kernel(tau_s, jump_rate_per_s) * (1.0 + q);
}

double hahn_amplitude(const SpectralDiffusionParams& p, ModelVariant v, double a0,
                      double tau_s, double temperature_k) {
  require_nonnegative(tau_s, "tau_s");
  const double w = jump_rate(p, temperature_k);
  const double exponent = 2.0 * gamma2_at(p, v, temperature_k) * tau_s +
                          gamma_sd(p, temperature_k) * alpha_kernel(tau_s, w);
  return a0 * std::exp(-exponent);
}

double stimulated_amplitude(const SpectralDiffusionParams& p, ModelVariant v, double a0,
                            double tau_s, double tau_prime_s, double temperature_k,
                            const StimulatedOptions& opts) {
  require_nonnegative(tau_s, "tau_s");
  require_nonnegative(tau_prime_s, "tau_prime_s");
  const double w = jump_rate(p, temperature_k);
  const double gsd = opts.use_high_t_diffusion_rate ? p.gamma_sd0 : gamma_sd(p, temperature_k);
  const double exponent = gamma1_at(p, v, temperature_k) * tau_prime_s +
                          gsd * beta_kernel(tau_s, tau_prime_s, w);
  return a0 * std::exp(-exponent);
}

double stretched_exponential(double amplitude, double t_s, double t1_s, double p) {
  if (!std::isfinite(t1_s) || t1_s <= 0.0) throw std::domain_error("stretched_exponential: t1 must be > 0");
  if (!std::isfinite(p) || p <= 0.0 || p > 2.0) {
    throw std::domain_error("stretched_exponential: p must be in (0, 2]");
  }
  require_nonnegative(t_s, "t_s");
  return amplitude * std::exp(-std::pow(t_s / t1_s, p));
}

double t2_of_model(const SpectralDiffusionParams& p, ModelVariant v, double temperature_k) {
  const double w = jump_rate(p, temperature_k);
  const double gsd = gamma_sd(p, temperature_k);
  const double g2 = gamma2_at(p, v, temperature_k);
  auto f = [&](double two_tau) {
    const double tau = 0.5 * two_tau;
    return 2.0 * g2 * tau + gsd * alpha_kernel(tau, w) - 1.0;
  };
  return find_increasing_root(f, 1e-12, 1.0, 1e-9, "t2_of_model");
}

double t1_of_model(const SpectralDiffusionParams& p, ModelVariant v, double tau_s,
                   double temperature_k, const StimulatedOptions& opts) {
  require_nonnegative(tau_s, "tau_s");
  const double w = jump_rate(p, temperature_k);
  const double gsd = opts.use_high_t_diffusion_rate ? p.gamma_sd0 : gamma_sd(p, temperature_k);
  const double g1 = gamma1_at(p, v, temperature_k);
  const double beta0 = beta_kernel(tau_s, 0.0, w);
  // Decay measured relative to the zero-wait amplitude, so the two-pulse
  // suppression already present at tau' = 0 does not count against T1.
  auto f = [&](double tau_prime) {
    return g1 * tau_prime + gsd * (beta_kernel(tau_s, tau_prime, w) - beta0) - 1.0;
  };
  return find_increasing_root(f, 1e-12, 1.0, 1e-9, "t1_of_model");
}

}  // namespace tlsecho
