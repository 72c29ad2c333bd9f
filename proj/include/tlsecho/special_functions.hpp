#pragma once

// Modified Bessel functions I0, I1, modified Struve functions L0, L1, and the
// hyperbolic helpers used by the spectral-diffusion kernels. Power series
// below the switch point, asymptotic expansions above it; exp-scaled Bessel
// variants and cancellation-safe I-L differences keep the kernel combination
// I1*L0 - I0*L1 accurate for arguments far beyond the overflow threshold.
//
// Accuracy: Bessel relative error < 1e-10 on [0, 700]; Struve < 1e-8 on
// [0, 50]. All functions are pure and safe to call concurrently. Negative or
// non-finite arguments throw std::domain_error.

namespace tlsecho {

double bessel_i0(double x);
double bessel_i1(double x);

// e^(-x) I0(x) and e^(-x) I1(x); finite for all x >= 0.
double bessel_i0_scaled(double x);
double bessel_i1_scaled(double x);

double struve_l0(double x);
double struve_l1(double x);

// I0(x) - L0(x) and I1(x) - L1(x) without catastrophic cancellation.
// I0-L0 decays like 2/(pi x); I1-L1 tends to 2/pi.
double bessel_i0_minus_struve_l0(double x);
double bessel_i1_minus_struve_l1(double x);

// 1/cosh^2(x); overflow-safe for any finite x; sech2(0) = 1.
double sech2(double x);

// coth(x), x != 0; accurate near zero via expm1 and saturating to +-1.
double coth(double x);

}  // namespace tlsecho
