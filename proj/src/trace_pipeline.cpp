#include "tlsecho/trace_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "tlsecho/constants.hpp"
#include "tlsecho/errors.hpp"
#include "tlsecho/least_squares.hpp"

namespace tlsecho {
namespace {

double wrap_angle(double phi) {
  while (phi > phys::pi) phi -= phys::two_pi;
  while (phi <= -phys::pi) phi += phys::two_pi;
  return phi;
}

double median(Eigen::VectorXd v) {
  std::nth_element(v.data(), v.data() + v.size() / 2, v.data() + v.size());
  return v[v.size() / 2];
}

// Noise level from the leading and trailing eighths of the record, which are
// pulse-free for a centered echo.
double edge_noise_std(const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  const Eigen::Index m = std::max<Eigen::Index>(2, n / 8);
  Eigen::VectorXd edges(2 * m);
  edges.head(m) = y.head(m);
  edges.tail(m) = y.tail(m);
  const double mean = edges.mean();
  return std::sqrt((edges.array() - mean).square().sum() / static_cast<double>(edges.size() - 1));
}

struct FilterSums {
  double s_i = 0.0;   // sum u I dt
  double s_q = 0.0;   // sum u Q dt
  double den = 0.0;   // sum u^2 dt
};

FilterSums window_sums(const IQTrace& trace, const EchoFilter& f) {
  const double lo = f.mu_bar - 5.0 * f.sigma_bar;
  const double hi = f.mu_bar + 5.0 * f.sigma_bar;
  if (lo < trace.t0 || hi > trace.time_end()) {
    throw WindowError("integration window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                      "] s not contained in trace");
  }
  const auto k_lo = static_cast<Eigen::Index>(std::ceil((lo - trace.t0) / trace.dt));
  const auto k_hi = static_cast<Eigen::Index>(std::floor((hi - trace.t0) / trace.dt));
  const double norm = 1.0 / std::sqrt(phys::two_pi * f.sigma_bar * f.sigma_bar);
  FilterSums sums;
  for (Eigen::Index k = k_lo; k <= k_hi; ++k) {
    const double z = (trace.time_at(k) - f.mu_bar) / f.sigma_bar;
    const double u = norm * std::exp(-0.5 * z * z);
    sums.s_i += u * trace.i[k];
    sums.s_q += u * trace.q[k];
    sums.den += u * u;
  }
  sums.s_i *= trace.dt;
  sums.s_q *= trace.dt;
  sums.den *= trace.dt;
  return sums;
}

void check_same_grid(const IQTrace& a, const IQTrace& b, const char* fn) {
  if (a.dt != b.dt || a.t0 != b.t0 || a.size() != b.size()) {
    throw std::invalid_argument(std::string(fn) + ": traces must share one sampling grid");
  }
}

}  // namespace

void validate(const IQTrace& trace) {
  if (trace.i.size() != trace.q.size()) {
    throw std::invalid_argument("IQTrace: quadrature lengths differ");
  }
  if (trace.i.size() < 8) throw std::invalid_argument("IQTrace: need at least 8 samples");
  if (!(trace.dt > 0.0)) throw std::invalid_argument("IQTrace: dt must be > 0");
}

GaussianPulseFit fit_gaussian_pulse(const IQTrace& trace, Quadrature quad) {
  validate(trace);
  const Eigen::VectorXd& y = quad == Quadrature::I ? trace.i : trace.q;
  const Eigen::Index n = y.size();

  const double baseline = median(y);
  Eigen::Index peak_idx = 0;
  double peak = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double dev = std::abs(y[k] - baseline);
    if (dev > std::abs(peak)) {
      peak = y[k] - baseline;
      peak_idx = k;
    }
  }
  if (peak == 0.0) throw FitError("fit_gaussian_pulse: trace has no peak");
  const double noise = edge_noise_std(y);
  if (noise > 0.0 && std::abs(peak) / noise < 2.0) {
    throw FitError("fit_gaussian_pulse: peak SNR below 2");
  }

  // Half-maximum width scan for the initial sigma (FWHM = 2.355 sigma).
  Eigen::Index left = peak_idx, right = peak_idx;
  while (left > 0 && std::abs(y[left] - baseline) > 0.5 * std::abs(peak)) --left;
  while (right < n - 1 && std::abs(y[right] - baseline) > 0.5 * std::abs(peak)) ++right;
  const double sigma0 = std::max(static_cast<double>(right - left) * trace.dt / 2.355, trace.dt);

  // Parameters (A, mu, log sigma, c); log keeps the width positive.
  Eigen::VectorXd p0(4);
  p0 << peak, trace.time_at(peak_idx), std::log(sigma0), baseline;
  // Work in units of dt/peak so the default finite-difference scaling fits.
  auto resid = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    const double sigma = std::exp(p[2]);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double z = (trace.time_at(k) - p[1]) / sigma;
      r[k] = p[0] * std::exp(-0.5 * z * z) + p[3] - y[k];
    }
    return r;
  };
  LeastSquaresOptions opts;
  opts.fd_step = 1e-8;
  const LeastSquaresResult sol = levenberg_marquardt(resid, p0, opts);
  if (!sol.converged) throw FitError("fit_gaussian_pulse: optimizer did not converge");

  GaussianPulseFit fit;
  fit.amplitude = sol.x[0];
  fit.center = sol.x[1];
  fit.width = std::exp(sol.x[2]);
  fit.offset = sol.x[3];
  fit.residual_rms = std::sqrt(sol.cost / static_cast<double>(n));
  return fit;
}

EchoFilter build_filter(const std::array<IQTrace, 3>& traces) {
  double mu_sum = 0.0, sigma_sum = 0.0;
  int n_fits = 0;
  std::complex<double> total{0.0, 0.0};
  for (const IQTrace& trace : traces) {
    int trace_fits = 0;
    std::string failure;
    for (Quadrature quad : {Quadrature::I, Quadrature::Q}) {
      try {
        const GaussianPulseFit fit = fit_gaussian_pulse(trace, quad);
        mu_sum += fit.center;
        sigma_sum += fit.width;
        ++trace_fits;
      } catch (const FitError& e) {
        failure = e.what();
      }
    }
    if (trace_fits == 0) {
      throw FitError("build_filter: no usable quadrature on a trace: " + failure);
    }
    n_fits += trace_fits;
    total += std::complex<double>(trace.i.sum(), trace.q.sum());
  }
  EchoFilter f;
  f.mu_bar = mu_sum / n_fits;
  f.sigma_bar = sigma_sum / n_fits;
  f.phi0 = std::arg(total);
  return f;
}

EchoIntegral integrate_echo(const IQTrace& trace, const EchoFilter& filter, bool optimize_phase) {
  validate(trace);
  if (!(filter.sigma_bar > 0.0)) throw std::invalid_argument("EchoFilter: sigma_bar must be > 0");
  const FilterSums sums = window_sums(trace, filter);
  const auto q_bar = [&](double phi) {
    return (-sums.s_i * std::sin(phi) + sums.s_q * std::cos(phi)) / sums.den;
  };

  double phi = filter.phi0;
  if (optimize_phase) {
    // Golden-section minimization of |Q_bar| on the small-correction interval.
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = -phys::pi / 4.0, b = phys::pi / 4.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = std::abs(q_bar(filter.phi0 + c)), fd = std::abs(q_bar(filter.phi0 + d));
    for (int it = 0; it < 90 && (b - a) > 1e-13; ++it) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - gr * (b - a);
        fc = std::abs(q_bar(filter.phi0 + c));
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + gr * (b - a);
        fd = std::abs(q_bar(filter.phi0 + d));
      }
    }
    phi = wrap_angle(filter.phi0 + 0.5 * (a + b));
  }
  return {(sums.s_i * std::cos(phi) + sums.s_q * std::sin(phi)) / sums.den, phi};
}

double estimate_integration_noise(const std::vector<IQTrace>& traces, const EchoFilter& filter) {
  if (traces.size() < 50) {
    throw std::invalid_argument("estimate_integration_noise: need at least 50 traces");
  }
  Eigen::VectorXd values(static_cast<Eigen::Index>(traces.size()));
  for (std::size_t j = 0; j < traces.size(); ++j) {
    values[static_cast<Eigen::Index>(j)] = integrate_echo(traces[j], filter, false).i_bar;
  }
  const double mean = values.mean();
  const double sample_std =
      std::sqrt((values.array() - mean).square().sum() / static_cast<double>(values.size() - 1));
  if (sample_std == 0.0) return 0.0;

  // Gaussian fit of the histogram of integrated values.
  const int n_bins = std::clamp(static_cast<int>(std::lround(std::sqrt(values.size()))), 8, 64);
  const double lo = values.minCoeff(), hi = values.maxCoeff();
  const double bin_w = (hi - lo) / n_bins;
  Eigen::VectorXd centers(n_bins), counts = Eigen::VectorXd::Zero(n_bins);
  for (int b = 0; b < n_bins; ++b) centers[b] = lo + (b + 0.5) * bin_w;
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    const int b = std::min(n_bins - 1, static_cast<int>((values[k] - lo) / bin_w));
    counts[b] += 1.0;
  }
  Eigen::VectorXd p0(3);
  p0 << counts.maxCoeff(), mean, std::log(sample_std);
  auto resid = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n_bins);
    const double sigma = std::exp(p[2]);
    for (int b = 0; b < n_bins; ++b) {
      const double z = (centers[b] - p[1]) / sigma;
      r[b] = p[0] * std::exp(-0.5 * z * z) - counts[b];
    }
    return r;
  };
  const LeastSquaresResult sol = levenberg_marquardt(resid, p0);
  if (!sol.converged) throw FitError("estimate_integration_noise: histogram fit did not converge");
  const double fitted = std::exp(sol.x[2]);
  if (std::abs(fitted - sample_std) > 0.10 * sample_std) {
    throw FitError("estimate_integration_noise: histogram fit and sample std disagree by > 10%");
  }
  return fitted;
}

Eigen::VectorXd pointwise_std(const std::vector<IQTrace>& traces) {
  if (traces.size() < 2) throw std::invalid_argument("pointwise_std: need at least 2 traces");
  for (const auto& t : traces) check_same_grid(traces.front(), t, "pointwise_std");
  const Eigen::Index n = traces.front().size();
  const auto m = static_cast<double>(traces.size());
  // Two-pass population variance; the one-pass form cancels catastrophically
  // for nearly identical traces.
  Eigen::VectorXd mean_i = Eigen::VectorXd::Zero(n), mean_q = Eigen::VectorXd::Zero(n);
  for (const auto& t : traces) {
    mean_i += t.i;
    mean_q += t.q;
  }
  mean_i /= m;
  mean_q /= m;
  Eigen::ArrayXd var_i = Eigen::ArrayXd::Zero(n), var_q = Eigen::ArrayXd::Zero(n);
  for (const auto& t : traces) {
    var_i += (t.i - mean_i).array().square();
    var_q += (t.q - mean_q).array().square();
  }
  return ((var_i + var_q) / m).sqrt().matrix();
}

double trace_difference(const IQTrace& a, const IQTrace& b, double window_t0, double window_t1) {
  validate(a);
  validate(b);
  check_same_grid(a, b, "trace_difference");
  if (!(window_t1 > window_t0)) {
    throw std::invalid_argument("trace_difference: window must have positive length");
  }
  double acc = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double t = a.time_at(k);
    if (t >= window_t0 && t < window_t1) acc += a.i[k] - b.i[k];
  }
  return acc * a.dt;
}

}  // namespace tlsecho
