#include "tlsecho/decay_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "tlsecho/constants.hpp"
#include "tlsecho/errors.hpp"
#include "tlsecho/least_squares.hpp"
#include "tlsecho/rng.hpp"

namespace tlsecho {
namespace {

constexpr double kRateLo = phys::two_pi * 0.1;    // rad/s
constexpr double kRateHi = phys::two_pi * 1e8;    // rad/s
constexpr double kOmegaLo = phys::two_pi * 1e8;   // 0.1 GHz
constexpr double kOmegaHi = phys::two_pi * 2e10;  // 20 GHz

int n_free_params(ModelVariant v) { return v == ModelVariant::BaseIntrinsic ? 4 : 5; }

Eigen::VectorXd pack_log(const SpectralDiffusionParams& p, ModelVariant v) {
  Eigen::VectorXd x(n_free_params(v));
  x[0] = std::log(std::max(p.gamma_sd0, kRateLo));
  x[1] = std::log(std::clamp(p.omega_b, kOmegaLo, kOmegaHi));
  x[2] = std::log(std::max(p.gamma1_b, kRateLo));
  if (v == ModelVariant::BaseIntrinsic) {
    x[3] = std::log(std::max(p.gamma2, kRateLo));
  } else {
    x[3] = std::log(std::max(p.gamma2_star, kRateLo));
    x[4] = std::log(std::max(p.w_ex, kRateLo));
  }
  return x;
}

SpectralDiffusionParams unpack_log(const Eigen::VectorXd& x, ModelVariant v) {
  SpectralDiffusionParams p;
  p.gamma_sd0 = std::exp(std::clamp(x[0], std::log(kRateLo), std::log(kRateHi)));
  p.omega_b = std::exp(std::clamp(x[1], std::log(kOmegaLo), std::log(kOmegaHi)));
  p.gamma1_b = std::exp(std::clamp(x[2], std::log(kRateLo), std::log(kRateHi)));
  if (v == ModelVariant::BaseIntrinsic) {
    p.gamma2 = std::exp(std::clamp(x[3], std::log(kRateLo), std::log(kRateHi)));
  } else {
    p.gamma2_star = std::exp(std::clamp(x[3], std::log(kRateLo), std::log(kRateHi)));
    p.w_ex = std::exp(std::clamp(x[4], std::log(kRateLo), std::log(kRateHi)));
  }
  return p;
}

// Unit-amplitude model values for one series at the given physical rates.
void unit_model(const SpectralDiffusionParams& p, ModelVariant v, DecayKind kind,
                const TemperatureSeries& s, const StimulatedOptions& stim,
                Eigen::VectorXd& out) {
  const double temperature = s.temperature_k;
  const double w = jump_rate(p, temperature);
  const double gsd_hahn = gamma_sd(p, temperature);
  out.resize(static_cast<Eigen::Index>(s.points.size()));
  if (kind == DecayKind::Hahn) {
    const double g2 = gamma2_at(p, v, temperature);
    for (std::size_t j = 0; j < s.points.size(); ++j) {
      const double tau = 0.5 * s.points[j].delay_s;  // delay axis stores 2*tau
      out[static_cast<Eigen::Index>(j)] =
          std::exp(-2.0 * g2 * tau - gsd_hahn * alpha_kernel(tau, w));
    }
  } else {
    const double g1 = gamma1_at(p, v, temperature);
    const double gsd = stim.use_high_t_diffusion_rate ? p.gamma_sd0 : gsd_hahn;
    for (std::size_t j = 0; j < s.points.size(); ++j) {
      const double tau_prime = s.points[j].delay_s;
      out[static_cast<Eigen::Index>(j)] =
          std::exp(-g1 * tau_prime - gsd * beta_kernel(s.tau_s, tau_prime, w));
    }
  }
}

struct ProfiledSeries {
  double amplitude = 0.0;
  bool singular = false;
};

// Closed-form profiled amplitude: the model is linear in A0, so the series
// optimum is A0 = sum(w d m) / sum(w m^2).
ProfiledSeries profile_amplitude(const TemperatureSeries& s, const Eigen::VectorXd& m,
                                 bool weight_by_err) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < s.points.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    double w = 1.0;
    if (weight_by_err && s.points[j].err && *s.points[j].err > 0.0) {
      w = 1.0 / (*s.points[j].err * *s.points[j].err);
    }
    num += w * s.points[j].amplitude * m[k];
    den += w * m[k] * m[k];
  }
  if (!(den > 1e-300) || !std::isfinite(num)) return {0.0, true};
  return {num / den, false};
}

class GlobalObjective {
 public:
  GlobalObjective(const DecayDataset& dataset, std::vector<std::size_t> indices, ModelVariant v,
                  const GlobalFitOptions& opts)
      : dataset_(dataset), indices_(std::move(indices)), variant_(v), opts_(opts) {
    n_points_ = 0;
    for (std::size_t i : indices_) n_points_ += dataset_.series[i].points.size();
  }

  Eigen::VectorXd residuals(const Eigen::VectorXd& log_theta) const {
    const SpectralDiffusionParams p = unpack_log(log_theta, variant_);
    Eigen::VectorXd r(static_cast<Eigen::Index>(n_points_));
    Eigen::VectorXd m;
    Eigen::Index row = 0;
    for (std::size_t i : indices_) {
      const TemperatureSeries& s = dataset_.series[i];
      unit_model(p, variant_, dataset_.kind, s, opts_.stim_options, m);
      const ProfiledSeries prof = profile_amplitude(s, m, opts_.weight_by_err);
      for (std::size_t j = 0; j < s.points.size(); ++j) {
        const auto k = static_cast<Eigen::Index>(j);
        // A vanished model leaves the raw data as residual, steering the
        // optimizer away instead of aborting a trial step.
        double res = s.points[j].amplitude - prof.amplitude * m[k];
        if (opts_.weight_by_err && s.points[j].err && *s.points[j].err > 0.0) {
          res /= *s.points[j].err;
        }
        r[row++] = res;
      }
    }
    return r;
  }

  std::vector<double> amplitudes_at(const Eigen::VectorXd& log_theta) const {
    const SpectralDiffusionParams p = unpack_log(log_theta, variant_);
    std::vector<double> out;
    Eigen::VectorXd m;
    for (std::size_t i : indices_) {
      unit_model(p, variant_, dataset_.kind, dataset_.series[i], opts_.stim_options, m);
      const ProfiledSeries prof = profile_amplitude(dataset_.series[i], m, opts_.weight_by_err);
      if (prof.singular) {
        throw FitError("fit_global: model vanishes on series at T = " +
                       std::to_string(dataset_.series[i].temperature_k) + " K");
      }
      out.push_back(prof.amplitude);
    }
    return out;
  }

 private:
  const DecayDataset& dataset_;
  std::vector<std::size_t> indices_;
  ModelVariant variant_;
  GlobalFitOptions opts_;
  std::size_t n_points_ = 0;
};

double curvature_condition(const ResidualFn& fn, const Eigen::VectorXd& x) {
  const Eigen::VectorXd r0 = fn(x);
  Eigen::MatrixXd jac(r0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
    Eigen::VectorXd xh = x;
    xh[j] += h;
    jac.col(j) = (fn(xh) - r0) / h;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac.transpose() * jac);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

FitResult fit_global_on(const DecayDataset& dataset, std::vector<std::size_t> indices,
                        ModelVariant variant, const SpectralDiffusionParams& init,
                        const GlobalFitOptions& opts) {
  const GlobalObjective objective(dataset, std::move(indices), variant, opts);
  ResidualFn fn = [&](const Eigen::VectorXd& x) { return objective.residuals(x); };

  LeastSquaresOptions lm;
  lm.max_iterations = opts.max_iterations;

  const Eigen::VectorXd x0 = pack_log(init, variant);
  LeastSquaresResult best;
  best.cost = std::numeric_limits<double>::infinity();
  int n_evals = 0;
  for (int s = 0; s < std::max(1, opts.n_starts); ++s) {
    Eigen::VectorXd xs = x0;
    if (s > 0) {
      SplitMix64 g = substream(opts.jitter_seed, static_cast<std::uint64_t>(s));
      for (Eigen::Index j = 0; j < xs.size(); ++j) {
        xs[j] += (2.0 * g.uniform01() - 1.0) * opts.jitter_decades * std::log(10.0);
      }
    }
    LeastSquaresResult run = levenberg_marquardt(fn, xs, lm);
    n_evals += run.n_evals;
    if (run.cost < best.cost) best = std::move(run);
  }
  if (!best.converged) {
    // Simplex rescue from the best point, then a final LM polish.
    const CostFn cost_fn = [&](const Eigen::VectorXd& x) { return fn(x).squaredNorm(); };
    LeastSquaresResult nm = nelder_mead(cost_fn, best.x);
    n_evals += nm.n_evals;
    LeastSquaresResult polish = levenberg_marquardt(fn, nm.x, lm);
    n_evals += polish.n_evals;
    if (polish.cost < best.cost) best = std::move(polish);
  }

  FitResult out;
  out.variant = variant;
  out.params = unpack_log(best.x, variant);
  out.amplitudes = objective.amplitudes_at(best.x);
  out.cost = best.cost;
  out.converged = best.converged;
  out.n_evals = n_evals;
  const double cond = curvature_condition(fn, best.x);
  out.identifiable = cond < opts.curvature_condition_limit;
  return out;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

double param_by_index(const SpectralDiffusionParams& p, ModelVariant v, int k) {
  switch (k) {
    case 0: return p.gamma_sd0;
    case 1: return p.omega_b;
    case 2: return p.gamma1_b;
    case 3: return v == ModelVariant::BaseIntrinsic ? p.gamma2 : p.gamma2_star;
    default: return p.w_ex;
  }
}

void set_param_by_index(SpectralDiffusionParams& p, ModelVariant v, int k, double value) {
  switch (k) {
    case 0: p.gamma_sd0 = value; break;
    case 1: p.omega_b = value; break;
    case 2: p.gamma1_b = value; break;
    case 3:
      if (v == ModelVariant::BaseIntrinsic) p.gamma2 = value;
      else p.gamma2_star = value;
      break;
    default: p.w_ex = value; break;
  }
}

}  // namespace

void validate(const DecayDataset& dataset) {
  if (dataset.series.empty()) throw std::invalid_argument("DecayDataset: no series");
  for (std::size_t i = 0; i < dataset.series.size(); ++i) {
    const TemperatureSeries& s = dataset.series[i];
    const std::string where = "series[" + std::to_string(i) + "]";
    if (!(s.temperature_k > 0.0)) {
      throw std::invalid_argument(where + ".temperature_k must be > 0");
    }
    if (dataset.kind == DecayKind::Stimulated && !(s.tau_s > 0.0)) {
      throw std::invalid_argument(where + ".tau_s must be > 0 for stimulated series");
    }
    double prev = -1.0;
    for (const DecayPoint& pt : s.points) {
      if (!(pt.delay_s >= 0.0) || pt.delay_s <= prev) {
        throw std::invalid_argument(where + ".points: delays must be >= 0 and strictly increasing");
      }
      prev = pt.delay_s;
    }
  }
}

SimpleExponentialFit fit_simple_exponential(const TemperatureSeries& series) {
  if (series.points.size() < 4) {
    throw std::invalid_argument("fit_simple_exponential: need at least 4 points");
  }
  const auto n = static_cast<Eigen::Index>(series.points.size());

  // Amplitude-weighted log-linear regression for the starting point.
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  double span = series.points.back().delay_s - series.points.front().delay_s;
  for (const DecayPoint& pt : series.points) {
    if (pt.amplitude <= 0.0) continue;
    const double w = pt.amplitude * pt.amplitude;
    const double y = std::log(pt.amplitude);
    sw += w;
    sx += w * pt.delay_s;
    sy += w * y;
    sxx += w * pt.delay_s * pt.delay_s;
    sxy += w * pt.delay_s * y;
  }
  double t2_init = span > 0.0 ? span : 1.0;
  double a_init = std::abs(series.points.front().amplitude);
  if (sw > 0.0 && sxx * sw - sx * sx > 0.0) {
    const double slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
    if (slope < 0.0) t2_init = -1.0 / slope;
    a_init = std::exp((sy - slope * sx) / sw);
  }
  if (a_init <= 0.0 || !std::isfinite(a_init)) a_init = 1.0;

  Eigen::VectorXd p0(2);
  p0 << a_init, std::log(t2_init);
  auto resid = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    const double t2 = std::exp(p[1]);
    for (Eigen::Index j = 0; j < n; ++j) {
      r[j] = p[0] * std::exp(-series.points[j].delay_s / t2) - series.points[j].amplitude;
    }
    return r;
  };
  const LeastSquaresResult sol = levenberg_marquardt(resid, p0);
  if (!sol.converged) throw FitError("fit_simple_exponential: did not converge");
  const double t2 = std::exp(sol.x[1]);
  if (span > 0.0 && (t2 > 100.0 * span || t2 < 1e-6 * span)) {
    throw FitError("fit_simple_exponential: T2 outside the data-supported bracket");
  }
  return {sol.x[0], t2, std::sqrt(sol.cost / static_cast<double>(n))};
}

StretchedExponentialFit fit_stretched_exponential(const TemperatureSeries& series) {
  if (series.points.size() < 6) {
    throw std::invalid_argument("fit_stretched_exponential: need at least 6 points");
  }
  const auto n = static_cast<Eigen::Index>(series.points.size());

  double a_init = 0.0;
  for (const DecayPoint& pt : series.points) a_init = std::max(a_init, std::abs(pt.amplitude));
  if (a_init == 0.0) throw FitError("fit_stretched_exponential: all-zero series");
  double t1_init = series.points.back().delay_s;
  for (const DecayPoint& pt : series.points) {
    if (std::abs(pt.amplitude) < a_init / 2.718281828459045 && pt.delay_s > 0.0) {
      t1_init = pt.delay_s;
      break;
    }
  }
  if (!(t1_init > 0.0)) t1_init = std::max(series.points.back().delay_s, 1e-9);

  // p = 0.1 + 1.9 * sigmoid(q) keeps the exponent inside (0.1, 2]; the value
  // saturates to exactly 2.0 for Gaussian-like decays.
  const auto p_of_q = [](double q) { return 0.1 + 1.9 / (1.0 + std::exp(-q)); };
  Eigen::VectorXd p0(3);
  p0 << a_init, std::log(t1_init), std::log(0.6 / (1.9 - 0.6));  // p starts at 0.7
  auto resid = [&](const Eigen::VectorXd& par) {
    Eigen::VectorXd r(n);
    const double t1 = std::exp(par[1]);
    const double p = p_of_q(par[2]);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = series.points[j].delay_s;
      r[j] = par[0] * std::exp(-std::pow(d / t1, p)) - series.points[j].amplitude;
    }
    return r;
  };
  LeastSquaresOptions opts;
  opts.max_iterations = 500;
  const LeastSquaresResult sol = levenberg_marquardt(resid, p0, opts);
  if (!sol.converged) throw FitError("fit_stretched_exponential: did not converge");
  return {sol.x[0], std::exp(sol.x[1]), p_of_q(sol.x[2]),
          std::sqrt(sol.cost / static_cast<double>(n))};
}

FitResult fit_global(const DecayDataset& dataset, ModelVariant variant,
                     const SpectralDiffusionParams& init, const GlobalFitOptions& opts) {
  validate(dataset);
  return fit_global_on(dataset, all_indices(dataset.series.size()), variant, init, opts);
}

std::vector<std::string> global_parameter_names(ModelVariant variant) {
  if (variant == ModelVariant::BaseIntrinsic) {
    return {"gamma_sd0", "omega_b", "gamma1_b", "gamma2"};
  }
  return {"gamma_sd0", "omega_b", "gamma1_b", "gamma2_star", "w_ex"};
}

BootstrapSummary bootstrap_fit(const DecayDataset& dataset, ModelVariant variant,
                               const SpectralDiffusionParams& init, int n_resamples,
                               int subset_size, std::uint64_t seed, const GlobalFitOptions& opts,
                               unsigned n_workers) {
  validate(dataset);
  const std::size_t n_series = dataset.series.size();
  if (subset_size < 1 || static_cast<std::size_t>(subset_size) > n_series) {
    throw std::invalid_argument("bootstrap_fit: subset_size must be in [1, n_series]");
  }
  if (n_resamples < 1) throw std::invalid_argument("bootstrap_fit: n_resamples must be >= 1");

  const FitResult full = fit_global(dataset, variant, init, opts);
  const int np = n_free_params(variant);

  BootstrapSummary summary;
  summary.variant = variant;
  summary.parameter_names = global_parameter_names(variant);
  summary.samples = Eigen::MatrixXd::Constant(n_resamples, np,
                                              std::numeric_limits<double>::quiet_NaN());
  summary.n_resamples = n_resamples;
  summary.subset_size = subset_size;
  summary.seed = seed;

  GlobalFitOptions fast = opts;
  fast.n_starts = 1;  // resamples start from the full-dataset solution
  GlobalFitOptions rescue = opts;
  rescue.n_starts = 4;

  auto run_one = [&](int r) -> std::optional<SpectralDiffusionParams> {
    // Partial Fisher-Yates draw of subset_size series indices, no replacement.
    SplitMix64 g = substream(seed, static_cast<std::uint64_t>(r));
    std::vector<std::size_t> pool = all_indices(n_series);
    std::vector<std::size_t> chosen;
    for (int k = 0; k < subset_size; ++k) {
      const auto pick = k + static_cast<std::size_t>(g.uniform01() * static_cast<double>(n_series - k));
      std::swap(pool[k], pool[std::min(pick, n_series - 1)]);
      chosen.push_back(pool[k]);
    }
    std::sort(chosen.begin(), chosen.end());
    try {
      FitResult fit = fit_global_on(dataset, chosen, variant, full.params, fast);
      if (!fit.converged) fit = fit_global_on(dataset, chosen, variant, full.params, rescue);
      if (!fit.converged) return std::nullopt;
      return fit.params;
    } catch (const FitError&) {
      return std::nullopt;
    }
  };

  std::vector<std::optional<SpectralDiffusionParams>> results(n_resamples);
  unsigned workers = std::max(1u, n_workers);
  if (workers > static_cast<unsigned>(n_resamples)) workers = n_resamples;
  if (workers == 1) {
    for (int r = 0; r < n_resamples; ++r) results[r] = run_one(r);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n_resamples + static_cast<int>(workers) - 1) / static_cast<int>(workers);
    for (unsigned w = 0; w < workers; ++w) {
      const int b = static_cast<int>(w) * chunk;
      const int e = std::min(n_resamples, b + chunk);
      pool.emplace_back([&, b, e] {
        for (int r = b; r < e; ++r) results[r] = run_one(r);
      });
    }
    for (auto& t : pool) t.join();
  }

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(np);
  int n_ok = 0;
  for (int r = 0; r < n_resamples; ++r) {
    if (!results[r]) {
      ++summary.n_failed;
      continue;
    }
    for (int k = 0; k < np; ++k) {
      summary.samples(r, k) = param_by_index(*results[r], variant, k);
    }
    mean += summary.samples.row(r).transpose();
    ++n_ok;
  }
  if (n_ok == 0) throw FitError("bootstrap_fit: every resample failed");
  mean /= n_ok;

  Eigen::VectorXd var = Eigen::VectorXd::Zero(np);
  if (n_ok > 1) {
    for (int r = 0; r < n_resamples; ++r) {
      if (!results[r]) continue;
      const Eigen::VectorXd d = summary.samples.row(r).transpose() - mean;
      var += d.cwiseProduct(d);
    }
    var /= (n_ok - 1);
  }
  for (int k = 0; k < np; ++k) {
    set_param_by_index(summary.mean, variant, k, mean[k]);
    set_param_by_index(summary.std, variant, k, std::sqrt(var[k]));
  }
  return summary;
}

}  // namespace tlsecho
