#pragma once

// Decay datasets and the fitting stack: single-series exponential and
// stretched-exponential fits, the global multi-temperature fit with
// analytically profiled per-temperature amplitudes, and the bootstrap over
// temperature-series subsets.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tlsecho/echo_model.hpp"

namespace tlsecho {

enum class DecayKind { Hahn, Stimulated };

struct DecayPoint {
  double delay_s = 0.0;      // 2*tau for Hahn series, tau' for stimulated
  double amplitude = 0.0;    // V s
  std::optional<double> err; // V s
};

struct TemperatureSeries {
  double temperature_k = 0.0;
  double tau_s = 0.0;  // stimulated series only: fixed first interpulse delay
  std::vector<DecayPoint> points;
};

struct DecayDataset {
  DecayKind kind = DecayKind::Hahn;
  std::string device_label;
  std::vector<TemperatureSeries> series;
};

// Structural checks: >= 1 series, T > 0, delays nonnegative and strictly
// increasing, stimulated series carry tau_s > 0. Throws std::invalid_argument.
void validate(const DecayDataset& dataset);

struct SimpleExponentialFit {
  double a0 = 0.0;           // V s
  double t2 = 0.0;           // s
  double residual_rms = 0.0; // V s
};

// A0 exp(-d / T2) against the stored delay axis; >= 4 points. T2 stays
// positive through a log parameterization; degenerate (constant) series fail
// with FitError when the fitted T2 runs out of the data-supported bracket.
SimpleExponentialFit fit_simple_exponential(const TemperatureSeries& series);

struct StretchedExponentialFit {
  double a = 0.0;            // V s
  double t1 = 0.0;           // s
  double p = 0.0;            // in (0.1, 2]
  double residual_rms = 0.0; // V s
};

// A exp(-(d / T1)^p) with p constrained to (0.1, 2]; >= 6 points.
StretchedExponentialFit fit_stretched_exponential(const TemperatureSeries& series);

struct GlobalFitOptions {
  int n_starts = 8;               // jittered restarts around the initial guess
  double jitter_decades = 0.5;
  std::uint64_t jitter_seed = 0x5eed;
  bool weight_by_err = false;     // plain unweighted squares by default
  int max_iterations = 400;
  // JtJ eigenvalue ratio (log-parameter space) above which the fit is flagged
  // as unidentifiable.
  double curvature_condition_limit = 1e10;
  StimulatedOptions stim_options{};
};

struct FitResult {
  SpectralDiffusionParams params;
  ModelVariant variant = ModelVariant::BaseIntrinsic;
  std::vector<double> amplitudes;  // profiled A0, one per series (dataset order)
  double cost = 0.0;               // (V s)^2
  bool converged = false;
  bool identifiable = true;        // curvature condition below the limit
  int n_evals = 0;
};

// Minimizes sum_i sum_tau [I(tau, T_i) - A0(T_i) m(tau, T_i; theta)]^2 over
// the shared physical rates, the per-temperature amplitudes being profiled
// out in closed form (the model is linear in A0). Rates are optimized in log
// space within [2 pi 0.1, 2 pi 1e8] rad/s (omega_b: 2 pi [0.1, 20] GHz); the
// best of n_starts jittered LM runs wins, with a Nelder-Mead rescue when none
// converge. Throws FitError if the model vanishes on a series at the
// solution.
FitResult fit_global(const DecayDataset& dataset, ModelVariant variant,
                     const SpectralDiffusionParams& init, const GlobalFitOptions& opts = {});

// Names of the free physical parameters, in the packing order used by the
// bootstrap sample table.
std::vector<std::string> global_parameter_names(ModelVariant variant);

struct BootstrapSummary {
  ModelVariant variant = ModelVariant::BaseIntrinsic;
  SpectralDiffusionParams mean;
  SpectralDiffusionParams std;
  std::vector<std::string> parameter_names;
  // n_resamples rows; failed resamples hold NaN and are excluded from the
  // mean/std aggregation.
  Eigen::MatrixXd samples;
  int n_resamples = 0;
  int subset_size = 0;
  int n_failed = 0;
  std::uint64_t seed = 0;
};

// Fits the full dataset once, then refits `n_resamples` random subsets of
// `subset_size` whole temperature series (drawn without replacement within a
// resample) starting from the full-dataset solution. Deterministic for a
// fixed seed; resamples are independent and may run on n_workers threads.
BootstrapSummary bootstrap_fit(const DecayDataset& dataset, ModelVariant variant,
                               const SpectralDiffusionParams& init, int n_resamples = 400,
                               int subset_size = 18, std::uint64_t seed = 0,
                               const GlobalFitOptions& opts = {}, unsigned n_workers = 1);

}  // namespace tlsecho
