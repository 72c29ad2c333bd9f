#pragma once

// Echo-trace processing chain: per-pulse Gaussian fits, the matched Gaussian
// filter built from the strongest echoes, phase-optimal weighted integration,
// and the noise estimators used to put error bars on integrated amplitudes.

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace tlsecho {

// Uniformly sampled demodulated record of both quadratures.
struct IQTrace {
  double dt = 0.0;  // sample period, s
  double t0 = 0.0;  // time of the first sample, s
  Eigen::VectorXd i;  // V
  Eigen::VectorXd q;  // V

  Eigen::Index size() const { return i.size(); }
  double time_at(Eigen::Index k) const { return t0 + dt * static_cast<double>(k); }
  double time_end() const { return time_at(size() - 1); }
};

// Throws std::invalid_argument unless both quadratures have equal length >= 8
// and dt > 0.
void validate(const IQTrace& trace);

enum class Quadrature { I, Q };

struct GaussianPulseFit {
  double amplitude = 0.0;     // V, signed
  double center = 0.0;        // s
  double width = 0.0;         // s, > 0
  double offset = 0.0;        // V, constant-baseline nuisance parameter
  double residual_rms = 0.0;  // V
};

// Least-squares fit of A exp(-(t-mu)^2 / (2 sigma^2)) + c to one quadrature,
// initialized from the peak location and half-maximum width. Throws FitError
// when the peak SNR is below 2 or the optimizer fails to converge.
GaussianPulseFit fit_gaussian_pulse(const IQTrace& trace, Quadrature quad);

// Matched filter: unit-area Gaussian u(t) with the pooled center/width of the
// construction fits, plus the global phase of the summed complex trace sums.
struct EchoFilter {
  double mu_bar = 0.0;     // s
  double sigma_bar = 0.0;  // s
  double phi0 = 0.0;       // rad, in (-pi, pi]
};

// Builds the filter from the three strongest echoes. Each trace is fitted on
// both quadratures; a quadrature carrying no detectable pulse is excluded
// from the center/width averages, and a trace with no usable quadrature
// propagates the fit failure.
EchoFilter build_filter(const std::array<IQTrace, 3>& traces);

struct EchoIntegral {
  double i_bar = 0.0;  // V s
  double phi = 0.0;    // rad, phase actually applied
};

// Weighted integral I = sum u(t_k) [I cos(phi) + Q sin(phi)] dt normalized by
// sum u(t_k)^2 dt over the window mu_bar +- 5 sigma_bar. When optimize_phase
// is set, phi = phi0 + delta with delta chosen by golden-section search on
// (-pi/4, pi/4) to minimize |Q_bar|; otherwise phi = phi0. Throws WindowError
// if the window does not fit inside the trace.
EchoIntegral integrate_echo(const IQTrace& trace, const EchoFilter& filter,
                            bool optimize_phase = true);

// Standard deviation of the integrated amplitude over a population of
// echo-free traces, read off a Gaussian fit of the histogram of I values and
// cross-checked against the direct sample standard deviation (10% agreement
// required). Integration uses the fixed filter phase. Requires >= 50 traces.
double estimate_integration_noise(const std::vector<IQTrace>& traces, const EchoFilter& filter);

// Per-sample combined standard deviation sqrt(var_I(t) + var_Q(t)) across a
// population of traces on a common grid (population variance).
Eigen::VectorXd pointwise_std(const std::vector<IQTrace>& traces);

// Discrete integral of the pointwise I-quadrature difference over samples
// with t in [window_t0, window_t1). Requires identical grids.
double trace_difference(const IQTrace& a, const IQTrace& b, double window_t0, double window_t1);

}  // namespace tlsecho
