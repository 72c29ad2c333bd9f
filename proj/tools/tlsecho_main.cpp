// tlsecho: batch analysis front end for the dielectric-echo modeling stack.
//
// Subcommands: model {hahn,stimulated,t2,t1,alpha,beta},
// simulate {telegraph,ensemble,rabi}, analyze {trace,noise,diff},
// fit {exp,stretched,global}, losses {tandelta,efficiency,cascade},
// synth {decay,traces}.
//
// Exit codes: 0 success, 1 user error (flags/schema), 2 numerical failure.

#include <cstdlib>
#include <iostream>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tlsecho/bath_ensemble.hpp"
#include "tlsecho/constants.hpp"
#include "tlsecho/dataset_io.hpp"
#include "tlsecho/decay_fit.hpp"
#include "tlsecho/echo_model.hpp"
#include "tlsecho/errors.hpp"
#include "tlsecho/loss_model.hpp"
#include "tlsecho/rabi.hpp"
#include "tlsecho/synth.hpp"
#include "tlsecho/telegraph.hpp"
#include "tlsecho/trace_pipeline.hpp"
#include "tlsecho/units.hpp"

using nlohmann::json;
using namespace tlsecho;

namespace {

struct GlobalFlags {
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = auto
  std::string out;
  std::string format = "json";
};

unsigned resolve_threads(const GlobalFlags& g) {
  if (g.threads > 0) return g.threads;
  if (const char* env = std::getenv("TLSECHO_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

void write_output(const GlobalFlags& g, const json& payload) {
  if (g.out.empty()) return;
  if (g.format != "json") {
    throw std::invalid_argument("--format: this subcommand only writes json output");
  }
  std::ofstream out(g.out);
  if (!out) throw SchemaError(g.out + ": cannot open for writing");
  out << payload.dump(2) << '\n';
}

// "lo:hi:n" -> n linearly spaced values.
std::vector<double> parse_grid(const std::string& text, const char* flag) {
  const auto c1 = text.find(':');
  const auto c2 = text.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) {
    throw std::invalid_argument(std::string(flag) + ": expected lo:hi:n, got \"" + text + "\"");
  }
  const double lo = std::stod(text.substr(0, c1));
  const double hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
  const int n = std::stoi(text.substr(c2 + 1));
  if (n < 1) throw std::invalid_argument(std::string(flag) + ": n must be >= 1");
  std::vector<double> v(n);
  for (int k = 0; k < n; ++k) v[k] = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
  return v;
}

json params_summary(const SpectralDiffusionParams& p, ModelVariant v) {
  json j;
  j["gamma_sd0_over_2pi_hz"] = units::angular_to_hz(p.gamma_sd0);
  j["omega_b_over_2pi_hz"] = units::angular_to_hz(p.omega_b);
  j["gamma1_b_over_2pi_hz"] = units::angular_to_hz(p.gamma1_b);
  if (v == ModelVariant::BaseIntrinsic) {
    j["gamma2_over_2pi_hz"] = units::angular_to_hz(p.gamma2);
  } else {
    j["gamma2_star_over_2pi_hz"] = units::angular_to_hz(p.gamma2_star);
    j["w_ex_over_2pi_hz_per_k"] = units::angular_to_hz(p.w_ex);
  }
  return j;
}

// ---------------------------------------------------------------- model ----

struct ModelArgs {
  std::string params_path;
  double temp_k = 0.0;
  double tau_s = 0.0;
  double tau_prime_s = 0.0;
  double a0 = 1.0;
  double w = 0.0;
  bool gsd0_literal = false;
  std::string emit_curve;
  std::string curve_grid;  // lo:hi:n over the swept variable
};

int run_model(const std::string& which, const ModelArgs& a, const GlobalFlags& g) {
  json payload;
  payload["format_version"] = 1;
  payload["operation"] = "model_" + which;

  StimulatedOptions stim;
  stim.use_high_t_diffusion_rate = a.gsd0_literal;

  if (which == "alpha" || which == "beta") {
    const double value = which == "alpha" ? alpha_kernel(a.tau_s, a.w)
                                          : beta_kernel(a.tau_s, a.tau_prime_s, a.w);
    std::cout << which << " = " << value << " s (tau = " << a.tau_s << " s, W = " << a.w
              << " 1/s";
    if (which == "beta") std::cout << ", tau' = " << a.tau_prime_s << " s";
    std::cout << ")\n";
    payload["kernel_s"] = value;
    if (!a.emit_curve.empty()) {
      const auto taus = parse_grid(a.curve_grid, "--curve-grid");
      std::vector<double> ys(taus.size());
      for (std::size_t k = 0; k < taus.size(); ++k) {
        ys[k] = which == "alpha" ? alpha_kernel(taus[k], a.w)
                                 : beta_kernel(a.tau_s, taus[k], a.w);
      }
      write_curve_csv(a.emit_curve, which == "alpha" ? "tau_s" : "tau_prime_s", "kernel_s", taus,
                      ys);
    }
    write_output(g, payload);
    return 0;
  }

  const ParameterFile file = read_params(a.params_path);
  payload["device_label"] = file.device_label;
  payload["params"] = params_summary(file.params, file.variant);

  if (which == "t2") {
    const double t2 = t2_of_model(file.params, file.variant, a.temp_k);
    std::cout << "T2 (2*tau at A/A0 = 1/e) = " << t2 * 1e6 << " us at T = " << a.temp_k * 1e3
              << " mK [" << file.device_label << "]\n";
    payload["temperature_k"] = a.temp_k;
    payload["t2_s"] = t2;
    if (!a.emit_curve.empty()) {
      const auto temps = parse_grid(a.curve_grid, "--curve-grid");
      std::vector<double> ys(temps.size());
      for (std::size_t k = 0; k < temps.size(); ++k) {
        ys[k] = t2_of_model(file.params, file.variant, temps[k]);
      }
      write_curve_csv(a.emit_curve, "temperature_k", "t2_s", temps, ys);
    }
  } else if (which == "t1") {
    const double t1 = t1_of_model(file.params, file.variant, a.tau_s, a.temp_k, stim);
    std::cout << "T1 (tau' at A/A(0) = 1/e) = " << t1 * 1e6 << " us at T = " << a.temp_k * 1e3
              << " mK, tau = " << a.tau_s * 1e6 << " us [" << file.device_label << "]\n";
    payload["temperature_k"] = a.temp_k;
    payload["tau_s"] = a.tau_s;
    payload["t1_s"] = t1;
    if (!a.emit_curve.empty()) {
      const auto temps = parse_grid(a.curve_grid, "--curve-grid");
      std::vector<double> ys(temps.size());
      for (std::size_t k = 0; k < temps.size(); ++k) {
        ys[k] = t1_of_model(file.params, file.variant, a.tau_s, temps[k], stim);
      }
      write_curve_csv(a.emit_curve, "temperature_k", "t1_s", temps, ys);
    }
  } else if (which == "hahn") {
    const double amp = hahn_amplitude(file.params, file.variant, a.a0, a.tau_s, a.temp_k);
    std::cout << "hahn amplitude = " << amp << " (A0 = " << a.a0 << ", 2*tau = " << 2 * a.tau_s
              << " s, T = " << a.temp_k << " K)\n";
    payload["amplitude"] = amp;
    if (!a.emit_curve.empty()) {
      const auto delays = parse_grid(a.curve_grid, "--curve-grid");  // 2*tau axis
      std::vector<double> ys(delays.size());
      for (std::size_t k = 0; k < delays.size(); ++k) {
        ys[k] = hahn_amplitude(file.params, file.variant, a.a0, 0.5 * delays[k], a.temp_k);
      }
      write_curve_csv(a.emit_curve, "delay_2tau_s", "amplitude", delays, ys);
    }
  } else {  // stimulated
    const double amp = stimulated_amplitude(file.params, file.variant, a.a0, a.tau_s,
                                            a.tau_prime_s, a.temp_k, stim);
    std::cout << "stimulated amplitude = " << amp << " (tau = " << a.tau_s
              << " s, tau' = " << a.tau_prime_s << " s, T = " << a.temp_k << " K)\n";
    payload["amplitude"] = amp;
    if (!a.emit_curve.empty()) {
      const auto waits = parse_grid(a.curve_grid, "--curve-grid");
      std::vector<double> ys(waits.size());
      for (std::size_t k = 0; k < waits.size(); ++k) {
        ys[k] = stimulated_amplitude(file.params, file.variant, a.a0, a.tau_s, waits[k], a.temp_k,
                                     stim);
      }
      write_curve_csv(a.emit_curve, "tau_prime_s", "amplitude", waits, ys);
    }
  }
  write_output(g, payload);
  return 0;
}

// ------------------------------------------------------------- simulate ----

int run_telegraph(double w, double tau, double tau_prime, std::uint64_t histories,
                  const GlobalFlags& g) {
  TelegraphConfig cfg;
  cfg.jump_rate = w;
  cfg.tau_s = tau;
  cfg.tau_prime_s = tau_prime;
  cfg.n_histories = histories;
  cfg.seed = g.seed;
  const auto est = flip_history_average(cfg, resolve_threads(g));
  const double kernel = tau_prime > 0.0 ? beta_kernel(tau, tau_prime, w) : alpha_kernel(tau, w);
  const double pull = est.std_error > 0.0 ? (est.mean - kernel) / est.std_error : 0.0;
  std::cout << "flip-history average = " << est.mean << " +- " << est.std_error << " s\n"
            << "closed-form kernel   = " << kernel << " s  (pull " << pull << " sigma)\n";
  json payload;
  payload["format_version"] = 1;
  payload["operation"] = "simulate_telegraph";
  payload["mean_s"] = est.mean;
  payload["std_error_s"] = est.std_error;
  payload["kernel_s"] = kernel;
  payload["pull_sigma"] = pull;
  payload["n_histories"] = histories;
  payload["seed"] = g.seed;
  write_output(g, payload);
  return 0;
}

int run_ensemble(double density, double dipole_a_debye, double dipole_b_debye, double epsilon_r,
                 std::size_t n_bath, double r_min, double w, double tau,
                 std::size_t realizations, const GlobalFlags& g) {
  const auto bath = make_bath(density, units::debye_to_coulomb_meter(dipole_a_debye),
                              units::debye_to_coulomb_meter(dipole_b_debye),
                              epsilon_r * phys::epsilon0, n_bath, r_min, g.seed);
  const auto est = ensemble_echo(bath, w, tau, realizations, resolve_threads(g));
  const double gamma = phys::two_pi / (9.0 * std::sqrt(3.0) * phys::hbar * bath.epsilon) *
                       bath.dipole_a * bath.dipole_b * bath.density;
  const double predicted = std::exp(-gamma * alpha_kernel(tau, w));
  std::cout << "ensemble echo amplitude = " << est.mean << " +- " << est.std_error << "\n"
            << "mean-field prediction   = " << predicted << " (Gamma_sd = " << gamma
            << " rad/s)\n";
  json payload;
  payload["format_version"] = 1;
  payload["operation"] = "simulate_ensemble";
  payload["amplitude"] = est.mean;
  payload["std_error"] = est.std_error;
  payload["mean_field_amplitude"] = predicted;
  payload["gamma_sd_rad_per_s"] = gamma;
  payload["r_max_m"] = bath.r_max;
  payload["seed"] = g.seed;
  write_output(g, payload);
  return 0;
}

int run_rabi(double gamma_r, double p1_dbm, double p2_dbm, double theta, double freq_ghz,
             double spread, std::size_t samples, const GlobalFlags& g) {
  RabiConfig cfg;
  cfg.gamma_r = gamma_r;
  cfg.pulse1_power_w = units::dbm_to_watts(p1_dbm);
  cfg.pulse2_power_w = units::dbm_to_watts(p2_dbm);
  cfg.pulse_length_s = theta;
  cfg.omega_d = units::hz_to_angular(freq_ghz * 1e9);
  cfg.coupling_spread = spread;
  cfg.n_samples = samples;
  cfg.seed = g.seed;
  const double amp = two_pulse_rabi_amplitude(cfg);
  const double o1 = rabi_angular_rate(gamma_r, cfg.pulse1_power_w, cfg.omega_d);
  std::cout << "two-pulse echo envelope = " << amp << " (Omega1*theta = " << o1 * theta
            << " rad)\n";
  json payload;
  payload["format_version"] = 1;
  payload["operation"] = "simulate_rabi";
  payload["amplitude"] = amp;
  payload["omega1_theta_rad"] = o1 * theta;
  write_output(g, payload);
  return 0;
}

// -------------------------------------------------------------- analyze ----

EchoFilter filter_from_manifest(const std::string& manifest) {
  const auto traces = read_trace_set(manifest);
  if (traces.size() < 3) {
    throw std::invalid_argument(manifest + ": need at least 3 traces to build the filter");
  }
  return build_filter({traces[0], traces[1], traces[2]});
}

int run_analyze_trace(const std::string& manifest, const std::string& filter_manifest,
                      const GlobalFlags& g) {
  const auto traces = read_trace_set(manifest);
  const EchoFilter f =
      filter_from_manifest(filter_manifest.empty() ? manifest : filter_manifest);
  std::cout << "filter: mu = " << f.mu_bar * 1e6 << " us, sigma = " << f.sigma_bar * 1e9
            << " ns, phi0 = " << f.phi0 << " rad\n";
  json rows = json::array();
  std::vector<double> idx, ibars;
  for (std::size_t k = 0; k < traces.size(); ++k) {
    const auto res = integrate_echo(traces[k], f);
    std::cout << "  trace " << k << ": I = " << res.i_bar << " V s, phi = " << res.phi
              << " rad\n";
    json row;
    row["index"] = k;
    row["i_bar_vs"] = res.i_bar;
    row["phi_rad"] = res.phi;
    rows.push_back(std::move(row));
    idx.push_back(static_cast<double>(k));
    ibars.push_back(res.i_bar);
  }
  if (!g.out.empty() && g.format == "csv") {
    write_curve_csv(g.out, "index", "i_bar_vs", idx, ibars);
    return 0;
  }
  json payload;
  payload["format_version"] = 1;
  payload["operation"] = "analyze_trace";
  payload["filter"] = {{"mu_bar_s", f.mu_bar}, {"sigma_bar_s", f.sigma_bar}, {"phi0_rad", f.phi0}};
  payload["echoes"] = std::move(rows);
  write_output(g, payload);
  return 0;
}

int run_analyze_noise(const std::string& manifest, const std::string& filter_manifest,
                      const GlobalFlags& g) {
  const auto traces = read_trace_set(manifest);
  const EchoFilter f = filter_from_manifest(filter_manifest);
  const double sigma = estimate_integration_noise(traces, f);
  std::cout << "sigma(I) = " << sigma << " V s over " << traces.size() << " echo-free traces\n";
  json payload;
  payload["format_version"] = 1;
  payload["operation"] = "analyze_noise";
  payload["sigma_ibar_vs"] = sigma;
  payload["n_traces"] = traces.size();
  write_output(g, payload);
  return 0;
}

int run_analyze_diff(const std::string& a_path, const std::string& b_path, double t0, double t1,
                     const GlobalFlags& g) {
  const IQTrace a = read_trace_csv(a_path);
  const IQTrace b = read_trace_csv(b_path);
  const double eps = trace_difference(a, b, t0, t1);
  std::cout << "integrated I difference = " << eps << " V s over [" << t0 << ", " << t1
            << ") s\n";
  json payload;
  payload["format_version"] = 1;
  payload["operation"] = "analyze_diff";
  payload["difference_vs"] = eps;
  write_output(g, payload);
  return 0;
}

// ------------------------------------------------------------------ fit ----

int run_fit_series(const std::string& which, const std::string& input, const GlobalFlags& g) {
  const DecayDataset ds = read_dataset(input);
  json rows = json::array();
  std::vector<double> temps, values;
  for (const auto& s : ds.series) {
    json row;
    row["temperature_k"] = s.temperature_k;
    if (which == "exp") {
      const auto fit = fit_simple_exponential(s);
      std::cout << "T = " << s.temperature_k * 1e3 << " mK: A0 = " << fit.a0
                << " V s, T2 = " << fit.t2 * 1e6 << " us\n";
      row["a0_vs"] = fit.a0;
      row["t2_s"] = fit.t2;
      row["residual_rms_vs"] = fit.residual_rms;
      temps.push_back(s.temperature_k);
      values.push_back(fit.t2);
    } else {
      const auto fit = fit_stretched_exponential(s);
      std::cout << "T = " << s.temperature_k * 1e3 << " mK: A = " << fit.a
                << " V s, T1 = " << fit.t1 * 1e6 << " us, p = " << fit.p << "\n";
      row["a_vs"] = fit.a;
      row["t1_s"] = fit.t1;
      row["p"] = fit.p;
      row["residual_rms_vs"] = fit.residual_rms;
      temps.push_back(s.temperature_k);
      values.push_back(fit.t1);
    }
    rows.push_back(std::move(row));
  }
  if (!g.out.empty() && g.format == "csv") {
    write_curve_csv(g.out, "temperature_k", which == "exp" ? "t2_s" : "t1_s", temps, values);
    return 0;
  }
  json payload;
  payload["format_version"] = 1;
  payload["operation"] = "fit_" + which;
  payload["device_label"] = ds.device_label;
  payload["series"] = std::move(rows);
  write_output(g, payload);
  return 0;
}

int run_fit_global(const std::string& input, const std::string& variant_name,
                   const std::string& init_path, int bootstrap, int subset, int starts,
                   bool gsd0_literal, const std::string& emit_params, const GlobalFlags& g) {
  const DecayDataset ds = read_dataset(input);
  const ModelVariant variant = variant_name == "refined"
                                   ? ModelVariant::RefinedTemperatureDependent
                                   : ModelVariant::BaseIntrinsic;
  SpectralDiffusionParams init;
  if (!init_path.empty()) {
    init = read_params(init_path).params;
  } else {
    // Neutral starting point; the multi-start jitter explores around it.
    init.gamma2 = init.gamma2_star = units::hz_to_angular(100e3);
    init.gamma_sd0 = units::hz_to_angular(1e6);
    init.gamma1_b = units::hz_to_angular(100e3);
    init.omega_b = units::hz_to_angular(1.5e9);
    init.w_ex = units::hz_to_angular(1e6);
  }
  GlobalFitOptions opts;
  opts.n_starts = starts;
  opts.stim_options.use_high_t_diffusion_rate = gsd0_literal;

  json payload;
  payload["format_version"] = 1;
  payload["operation"] = "fit_global";
  payload["device_label"] = ds.device_label;
  payload["variant"] = variant_name;

  SpectralDiffusionParams point;
  if (bootstrap > 0) {
    const auto summary =
        bootstrap_fit(ds, variant, init, bootstrap, subset, g.seed, opts, resolve_threads(g));
    point = summary.mean;
    std::cout << "bootstrap over " << bootstrap << " resamples of " << subset << " series ("
              << summary.n_failed << " failed):\n";
    auto print = [&](const char* name, double mean, double std) {
      std::cout << "  " << name << "/(2 pi) = " << units::angular_to_hz(mean) << " +- "
                << units::angular_to_hz(std) << " Hz\n";
    };
    print("gamma_sd0", summary.mean.gamma_sd0, summary.std.gamma_sd0);
    print("omega_b", summary.mean.omega_b, summary.std.omega_b);
    print("gamma1_b", summary.mean.gamma1_b, summary.std.gamma1_b);
    if (variant == ModelVariant::BaseIntrinsic) {
      print("gamma2", summary.mean.gamma2, summary.std.gamma2);
    } else {
      print("gamma2_star", summary.mean.gamma2_star, summary.std.gamma2_star);
      print("w_ex", summary.mean.w_ex, summary.std.w_ex);
    }
    payload["bootstrap"] = {{"n_resamples", summary.n_resamples},
                            {"subset_size", summary.subset_size},
                            {"n_failed", summary.n_failed},
                            {"seed", summary.seed},
                            {"params_mean", params_summary(summary.mean, variant)},
                            {"params_std", params_summary(summary.std, variant)}};
    if (!g.out.empty()) {
      if (g.format != "json") {
        throw std::invalid_argument("--format: fit global only writes json output");
      }
      write_bootstrap_summary(g.out, summary, ds.device_label);
    }
  } else {
    const auto fit = fit_global(ds, variant, init, opts);
    point = fit.params;
    if (!fit.converged) throw FitError("fit global: optimizer did not converge");
    if (!fit.identifiable) {
      std::cout << "warning: curvature condition exceeds the identifiability limit; "
                   "parameters are not all constrained by this dataset\n";
    }
    std::cout << "global fit (cost " << fit.cost << "):\n"
              << "  gamma_sd0/(2 pi) = " << units::angular_to_hz(point.gamma_sd0) << " Hz\n"
              << "  omega_b/(2 pi)   = " << units::angular_to_hz(point.omega_b) << " Hz\n"
              << "  gamma1_b/(2 pi)  = " << units::angular_to_hz(point.gamma1_b) << " Hz\n";
    if (variant == ModelVariant::BaseIntrinsic) {
      std::cout << "  gamma2/(2 pi)    = " << units::angular_to_hz(point.gamma2) << " Hz\n";
    } else {
      std::cout << "  gamma2*/(2 pi)   = " << units::angular_to_hz(point.gamma2_star) << " Hz\n"
                << "  w_ex/(2 pi)      = " << units::angular_to_hz(point.w_ex) << " Hz/K\n";
    }
    payload["fit"] = {{"cost", fit.cost},
                      {"converged", fit.converged},
                      {"identifiable", fit.identifiable},
                      {"n_evals", fit.n_evals},
                      {"params", params_summary(point, variant)},
                      {"amplitudes_vs", fit.amplitudes}};
    write_output(g, payload);
  }

  if (!emit_params.empty()) {
    ParameterFile out;
    out.device_label = ds.device_label;
    out.variant = variant;
    out.params = point;
    write_params(emit_params, out);
  }
  return 0;
}

// --------------------------------------------------------------- losses ----

int run_losses_tandelta(const std::string& params_path, double ratio, double n0,
                        double dipole_debye, double epsilon_r, const GlobalFlags& g) {
  json payload;
  payload["format_version"] = 1;
  payload["operation"] = "losses_tandelta";
  json assumptions;
  double tan_delta = 0.0;
  if (!params_path.empty()) {
    const auto file = read_params(params_path);
    tan_delta = tan_delta_from_spectral_diffusion(file.params.gamma_sd0, file.params.omega_b,
                                                  ratio);
    std::cout << "tan(delta) from the spectral-diffusion rate = " << tan_delta << " ["
              << file.device_label << "]\n";
    payload["route"] = "spectral_diffusion";
    assumptions["gamma_b_over_omega_b"] = ratio;
  } else {
    DielectricSpec spec;
    spec.epsilon_r = epsilon_r;
    tan_delta = tan_delta_from_density(n0, units::debye_to_coulomb_meter(dipole_debye), spec);
    std::cout << "tan(delta) from the defect density = " << tan_delta << "\n";
    payload["route"] = "density";
    assumptions["epsilon_r"] = epsilon_r;  // assumed, not extracted from data
  }
  payload["tan_delta"] = tan_delta;
  payload["assumptions"] = std::move(assumptions);
  write_output(g, payload);
  return 0;
}

int run_losses_efficiency(double tan_delta, double capacitance_ff, double z0, double freq_ghz,
                          int cells, double total_gain, const GlobalFlags& g) {
  AmplifierChainSpec chain;
  chain.n_cells = cells;
  chain.total_gain = total_gain;
  chain.capacitance_f = capacitance_ff * 1e-15;
  chain.z0_ohm = z0;
  chain.omega = units::hz_to_angular(freq_ghz * 1e9);
  const double gain = per_cell_gain(chain);
  const double a = cell_attenuation(chain, tan_delta);
  const double eta = quantum_efficiency(a, gain);

  // Sensitivity of eta over the plausible capacitance range.
  auto eta_at = [&](double c_ff) {
    auto c = chain;
    c.capacitance_f = c_ff * 1e-15;
    return quantum_efficiency(cell_attenuation(c, tan_delta), gain);
  };
  const double eta_lo = eta_at(60.0), eta_hi = eta_at(20.0);

  std::cout << "per-cell gain g = " << gain << ", attenuation a = " << a << "\n"
            << "quantum efficiency eta = " << eta << "\n"
            << "sensitivity band over c in [20, 60] fF: [" << eta_lo << ", " << eta_hi << "]\n"
            << "assumptions: c = " << capacitance_ff << " fF, Z0 = " << z0
            << " Ohm, omega/(2 pi) = " << freq_ghz << " GHz (configuration values, not fitted)\n";
  json payload;
  payload["format_version"] = 1;
  payload["operation"] = "losses_efficiency";
  payload["per_cell_gain"] = gain;
  payload["per_cell_attenuation"] = a;
  payload["quantum_efficiency"] = eta;
  payload["eta_band_c_20_60_ff"] = {eta_lo, eta_hi};
  payload["assumptions"] = {{"capacitance_f", chain.capacitance_f},
                            {"z0_ohm", z0},
                            {"omega_rad_per_s", chain.omega},
                            {"tan_delta", tan_delta}};
  write_output(g, payload);
  return 0;
}

int run_losses_cascade(double tan_delta, double capacitance_ff, double z0, double freq_ghz,
                       int cells, double total_gain, double n_input, const GlobalFlags& g) {
  AmplifierChainSpec chain;
  chain.n_cells = cells;
  chain.total_gain = total_gain;
  chain.capacitance_f = capacitance_ff * 1e-15;
  chain.z0_ohm = z0;
  chain.omega = units::hz_to_angular(freq_ghz * 1e9);
  const double gain = per_cell_gain(chain);
  const double a = cell_attenuation(chain, tan_delta);
  const auto res = noise_cascade(chain, a, gain, n_input);
  const double transmission = std::pow(gain * a, chain.n_cells);
  std::cout << "output noise (closed form) = " << res.closed_form << " photons\n"
            << "output noise (iterated)    = " << res.iterated << " photons\n"
            << "total transmission T = " << transmission
            << ", T/N_out = " << transmission / res.closed_form << "\n";
  json payload;
  payload["format_version"] = 1;
  payload["operation"] = "losses_cascade";
  payload["noise_closed_form"] = res.closed_form;
  payload["noise_iterated"] = res.iterated;
  payload["transmission"] = transmission;
  payload["t_over_n_out"] = transmission / res.closed_form;
  payload["assumptions"] = {{"capacitance_f", chain.capacitance_f},
                            {"z0_ohm", z0},
                            {"omega_rad_per_s", chain.omega},
                            {"tan_delta", tan_delta}};
  write_output(g, payload);
  return 0;
}

// ---------------------------------------------------------------- synth ----

int run_synth_decay(const std::string& params_path, const std::string& kind_name,
                    const std::string& temps, const std::string& delays, double a0, double noise,
                    double tau_s, bool gsd0_literal, const GlobalFlags& g) {
  if (g.out.empty()) throw std::invalid_argument("--out: synth decay requires an output path");
  const auto file = read_params(params_path);
  SynthDecaySpec spec;
  spec.params = file.params;
  spec.variant = file.variant;
  spec.kind = kind_name == "stimulated" ? DecayKind::Stimulated : DecayKind::Hahn;
  spec.tau_s = tau_s;
  spec.temperatures_k = parse_grid(temps, "--temps");
  spec.delays_s = parse_grid(delays, "--delays");
  spec.amplitudes.assign(spec.temperatures_k.size(), a0);
  spec.noise_std = noise;
  spec.seed = g.seed;
  spec.stim_options.use_high_t_diffusion_rate = gsd0_literal;
  spec.device_label = file.device_label + "-synthetic";
  const auto synth = generate_decay_dataset(spec);
  write_dataset(g.out, synth.dataset, &synth.truth);
  std::cout << "wrote " << synth.dataset.series.size() << " series x "
            << spec.delays_s.size() << " points to " << g.out << "\n";
  return 0;
}

int run_synth_traces(double amplitude, double center, double width, double phase, double dt,
                     double duration, double noise, std::size_t n, const GlobalFlags& g) {
  if (g.out.empty()) throw std::invalid_argument("--out: synth traces requires a manifest path");
  SynthTraceSpec spec;
  spec.amplitude_v = amplitude;
  spec.center_s = center;
  spec.width_s = width;
  spec.phase_rad = phase;
  spec.dt = dt;
  spec.duration = duration;
  spec.noise_std_v = noise;
  spec.n_traces = n;
  spec.seed = g.seed;
  const auto traces = generate_trace_set(spec);
  write_trace_set(g.out, traces);
  std::cout << "wrote " << traces.size() << " traces (manifest " << g.out << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dielectric-echo modeling, simulation and fitting toolkit"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--seed", g.seed, "base RNG seed (64-bit) for all stochastic operations");
  app.add_option("--threads", g.threads,
                 "worker threads (0 = auto; TLSECHO_THREADS overrides the default)");
  app.add_option("--out", g.out, "output file for the machine-readable payload");
  app.add_option("--format", g.format,
                 "payload format for --out: json everywhere; csv for the tabular "
                 "subcommands (analyze trace, fit exp/stretched)")
      ->check(CLI::IsMember({"json", "csv"}));

  // model
  auto* model = app.add_subcommand("model", "evaluate the analytic echo models");
  model->require_subcommand(1);
  ModelArgs ma;
  auto add_model_common = [&](CLI::App* cmd, bool needs_params, const char* axis) {
    if (needs_params) {
      cmd->add_option("--params", ma.params_path, "parameter file (json)")->required();
    }
    cmd->add_option("--emit-curve", ma.emit_curve, "write a (x, y) CSV curve to this path");
    cmd->add_option("--curve-grid", ma.curve_grid,
                    std::string("curve axis as lo:hi:n over ") + axis);
  };
  auto* m_hahn = model->add_subcommand("hahn", "two-pulse echo amplitude");
  m_hahn->add_option("--temp-k", ma.temp_k, "temperature (K)")->required();
  m_hahn->add_option("--tau-s", ma.tau_s, "interpulse delay tau (s)")->required();
  m_hahn->add_option("--a0", ma.a0, "initial amplitude (V s), default 1");
  add_model_common(m_hahn, true, "the echo delay 2*tau (s)");
  auto* m_stim = model->add_subcommand("stimulated", "three-pulse echo amplitude");
  m_stim->add_option("--temp-k", ma.temp_k, "temperature (K)")->required();
  m_stim->add_option("--tau-s", ma.tau_s, "first interpulse delay tau (s)")->required();
  m_stim->add_option("--tau-prime-s", ma.tau_prime_s, "wait time tau' (s)")->required();
  m_stim->add_option("--a0", ma.a0, "initial amplitude (V s), default 1");
  m_stim->add_flag("--gsd0-literal", ma.gsd0_literal,
                   "use the high-temperature diffusion rate in the exponent");
  add_model_common(m_stim, true, "the wait time tau' (s)");
  auto* m_t2 = model->add_subcommand("t2", "1/e coherence delay 2*tau of the two-pulse model");
  m_t2->add_option("--temp-k", ma.temp_k, "temperature (K)")->required();
  add_model_common(m_t2, true, "temperature (K)");
  auto* m_t1 = model->add_subcommand("t1", "1/e relaxation wait tau' of the three-pulse model");
  m_t1->add_option("--temp-k", ma.temp_k, "temperature (K)")->required();
  m_t1->add_option("--tau-s", ma.tau_s, "first interpulse delay tau (s)")->required();
  m_t1->add_flag("--gsd0-literal", ma.gsd0_literal,
                 "use the high-temperature diffusion rate in the exponent");
  add_model_common(m_t1, true, "temperature (K)");
  auto* m_alpha = model->add_subcommand("alpha", "two-pulse flip-history kernel (s)");
  m_alpha->add_option("--tau-s", ma.tau_s, "interpulse delay tau (s)")->required();
  m_alpha->add_option("--w", ma.w, "bath jump rate W (1/s)")->required();
  add_model_common(m_alpha, false, "the delay tau (s)");
  auto* m_beta = model->add_subcommand("beta", "three-pulse flip-history kernel (s)");
  m_beta->add_option("--tau-s", ma.tau_s, "first delay tau (s)")->required();
  m_beta->add_option("--tau-prime-s", ma.tau_prime_s, "wait time tau' (s)")->required();
  m_beta->add_option("--w", ma.w, "bath jump rate W (1/s)")->required();
  add_model_common(m_beta, false, "the wait time tau' (s)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo oracles and microscopic models");
  sim->require_subcommand(1);
  double s_w = 0, s_tau = 0, s_tau_prime = 0;
  std::uint64_t s_hist = 1000000;
  auto* s_tel = sim->add_subcommand("telegraph", "telegraph flip-history average");
  s_tel->add_option("--w", s_w, "jump rate W (1/s)")->required();
  s_tel->add_option("--tau", s_tau, "interpulse delay tau (s)")->required();
  s_tel->add_option("--tau-prime", s_tau_prime, "wait time tau' (s), 0 for the two-pulse case");
  s_tel->add_option("--histories", s_hist, "number of Monte Carlo histories");
  double e_density = 8.6e18, e_da = 3.0, e_db = 3.0, e_epsr = 2.5, e_rmin = 1e-9;
  std::size_t e_nbath = 2000, e_real = 10000;
  auto* s_ens = sim->add_subcommand("ensemble", "dipolar-bath echo simulation");
  s_ens->add_option("--density", e_density, "perturber density c_B (1/m^3)");
  s_ens->add_option("--dipole-a-debye", e_da, "probed dipole moment (debye)");
  s_ens->add_option("--dipole-b-debye", e_db, "perturber dipole moment (debye)");
  s_ens->add_option("--epsilon-r", e_epsr, "relative permittivity of the host");
  s_ens->add_option("--n-bath", e_nbath, "perturbers per realization");
  s_ens->add_option("--r-min", e_rmin, "excluded-volume radius (m)");
  s_ens->add_option("--w", s_w, "jump rate W (1/s)")->required();
  s_ens->add_option("--tau", s_tau, "interpulse delay tau (s)")->required();
  s_ens->add_option("--realizations", e_real, "number of bath realizations");
  double r_gamma = 140.0, r_p1 = -81.0, r_p2 = -75.0, r_theta = 100e-9, r_freq = 7.0,
         r_spread = 0.0;
  std::size_t r_samples = 10000;
  auto* s_rabi = sim->add_subcommand("rabi", "two-pulse echo envelope vs drive power");
  s_rabi->add_option("--gamma-r", r_gamma, "radiative rate (1/s)");
  s_rabi->add_option("--p1-dbm", r_p1, "first pulse power (dBm)");
  s_rabi->add_option("--p2-dbm", r_p2, "second pulse power (dBm)");
  s_rabi->add_option("--theta", r_theta, "pulse length (s)");
  s_rabi->add_option("--freq-ghz", r_freq, "drive frequency (GHz)");
  s_rabi->add_option("--spread", r_spread, "relative spread of the radiative rate");
  s_rabi->add_option("--samples", r_samples, "Monte Carlo samples for the spread average");

  // analyze
  auto* an = app.add_subcommand("analyze", "trace integration and noise estimation");
  an->require_subcommand(1);
  std::string a_manifest, a_filter_manifest, a_file_a, a_file_b;
  double a_t0 = 0, a_t1 = 0;
  auto* an_trace = an->add_subcommand("trace", "build the filter and integrate every trace");
  an_trace->add_option("--manifest", a_manifest, "trace-set manifest (json)")->required();
  an_trace->add_option("--filter-manifest", a_filter_manifest,
                       "separate manifest providing the three filter-construction echoes");
  auto* an_noise = an->add_subcommand("noise", "integration noise from echo-free traces");
  an_noise->add_option("--manifest", a_manifest, "echo-free trace-set manifest (json)")
      ->required();
  an_noise->add_option("--filter-manifest", a_filter_manifest,
                       "manifest providing the filter-construction echoes")
      ->required();
  auto* an_diff = an->add_subcommand("diff", "windowed integral of the I difference");
  an_diff->add_option("--a", a_file_a, "first trace (csv)")->required();
  an_diff->add_option("--b", a_file_b, "second trace (csv)")->required();
  an_diff->add_option("--t0", a_t0, "window start (s)")->required();
  an_diff->add_option("--t1", a_t1, "window end (s)")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "decay fitting");
  fit->require_subcommand(1);
  std::string f_input, f_variant = "base", f_init, f_emit_params;
  int f_bootstrap = 0, f_subset = 18, f_starts = 8;
  bool f_gsd0 = false;
  auto* fit_exp = fit->add_subcommand("exp", "per-series simple exponential");
  fit_exp->add_option("--input", f_input, "decay dataset (json)")->required();
  auto* fit_str = fit->add_subcommand("stretched", "per-series stretched exponential");
  fit_str->add_option("--input", f_input, "decay dataset (json)")->required();
  auto* fit_glob = fit->add_subcommand("global", "shared-parameter fit over all series");
  fit_glob->add_option("--input", f_input, "decay dataset (json)")->required();
  fit_glob->add_option("--variant", f_variant, "model variant")
      ->check(CLI::IsMember({"base", "refined"}));
  fit_glob->add_option("--init", f_init, "initial parameter file (json)");
  fit_glob->add_option("--bootstrap", f_bootstrap, "bootstrap resamples (0 = plain fit)");
  fit_glob->add_option("--subset", f_subset, "series per bootstrap resample");
  fit_glob->add_option("--starts", f_starts, "jittered optimizer starts");
  fit_glob->add_flag("--gsd0-literal", f_gsd0,
                     "stimulated datasets: high-temperature diffusion rate in the exponent");
  fit_glob->add_option("--emit-params", f_emit_params, "write the fitted parameter file here");

  // losses
  auto* losses = app.add_subcommand("losses", "material and amplifier figures of merit");
  losses->require_subcommand(1);
  std::string l_params;
  double l_ratio = 1.0, l_n0 = 0.0, l_dipole = 3.0, l_epsr = 2.5;
  double l_tand = 0.0, l_cap = 39.0, l_z0 = 50.0, l_freq = 7.0, l_gain = 120.3, l_nin = 0.5;
  int l_cells = 2037;
  auto* l_tan = losses->add_subcommand("tandelta", "loss tangent, both routes");
  l_tan->add_option("--params", l_params, "fitted parameter file (spectral-diffusion route)");
  l_tan->add_option("--ratio", l_ratio, "bath spectral width over bath frequency (default 1)");
  l_tan->add_option("--n0", l_n0, "defect density per energy and volume (1/(J m^3))");
  l_tan->add_option("--dipole-debye", l_dipole, "dipole moment (debye)");
  l_tan->add_option("--epsilon-r", l_epsr, "assumed relative permittivity");
  auto add_chain_flags = [&](CLI::App* cmd) {
    cmd->add_option("--tan-delta", l_tand, "loss tangent")->required();
    cmd->add_option("--capacitance-ff", l_cap, "per-cell capacitance (fF), assumed");
    cmd->add_option("--z0", l_z0, "line impedance (Ohm), assumed");
    cmd->add_option("--freq-ghz", l_freq, "evaluation frequency (GHz)");
    cmd->add_option("--cells", l_cells, "number of cells");
    cmd->add_option("--gain", l_gain, "total linear power gain");
  };
  auto* l_eff = losses->add_subcommand("efficiency", "quantum efficiency with sensitivity band");
  add_chain_flags(l_eff);
  auto* l_cas = losses->add_subcommand("cascade", "noise cascade, closed form vs iterated");
  add_chain_flags(l_cas);
  l_cas->add_option("--n-input", l_nin, "input noise (photons)");

  // synth
  auto* synth = app.add_subcommand("synth", "synthetic data generation");
  synth->require_subcommand(1);
  std::string sy_params, sy_kind = "hahn", sy_temps = "0.008:0.110:24",
              sy_delays = "0.2e-6:10.4e-6:52";
  double sy_a0 = 0.03, sy_noise = 0.28e-3, sy_tau = 0.55e-6;
  bool sy_gsd0 = false;
  auto* sy_decay = synth->add_subcommand("decay", "decay dataset from the forward model");
  sy_decay->add_option("--params", sy_params, "generator parameter file (json)")->required();
  sy_decay->add_option("--kind", sy_kind, "hahn or stimulated")
      ->check(CLI::IsMember({"hahn", "stimulated"}));
  sy_decay->add_option("--temps", sy_temps, "temperature grid lo:hi:n (K)");
  sy_decay->add_option("--delays", sy_delays, "delay grid lo:hi:n (s; 2*tau or tau')");
  sy_decay->add_option("--a0", sy_a0, "amplitude per series (V s)");
  sy_decay->add_option("--noise", sy_noise, "additive noise std (V s)");
  sy_decay->add_option("--tau-s", sy_tau, "stimulated kind: fixed tau (s)");
  sy_decay->add_flag("--gsd0-literal", sy_gsd0,
                     "stimulated kind: high-temperature diffusion rate in the exponent");
  double st_amp = 1e-3, st_center = 1e-6, st_width = 50e-9, st_phase = 0.0, st_dt = 3.2e-9,
         st_duration = 2e-6, st_noise = 0.0;
  std::size_t st_n = 1;
  auto* sy_traces = synth->add_subcommand("traces", "echo trace set");
  sy_traces->add_option("--amplitude", st_amp, "echo amplitude (V)");
  sy_traces->add_option("--center", st_center, "echo center time (s)");
  sy_traces->add_option("--width", st_width, "echo Gaussian width (s)");
  sy_traces->add_option("--phase", st_phase, "echo quadrature phase (rad)");
  sy_traces->add_option("--dt", st_dt, "sample period (s)");
  sy_traces->add_option("--duration", st_duration, "trace duration (s)");
  sy_traces->add_option("--noise", st_noise, "white noise std per sample (V)");
  sy_traces->add_option("--n", st_n, "number of traces");

  // Let --seed/--threads/--out appear after the subcommand as well.
  std::function<void(CLI::App*)> enable_fallthrough = [&](CLI::App* cmd) {
    cmd->fallthrough();
    for (CLI::App* sub : cmd->get_subcommands({})) enable_fallthrough(sub);
  };
  enable_fallthrough(&app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (m_hahn->parsed()) return run_model("hahn", ma, g);
    if (m_stim->parsed()) return run_model("stimulated", ma, g);
    if (m_t2->parsed()) return run_model("t2", ma, g);
    if (m_t1->parsed()) return run_model("t1", ma, g);
    if (m_alpha->parsed()) return run_model("alpha", ma, g);
    if (m_beta->parsed()) return run_model("beta", ma, g);
    if (s_tel->parsed()) return run_telegraph(s_w, s_tau, s_tau_prime, s_hist, g);
    if (s_ens->parsed())
      return run_ensemble(e_density, e_da, e_db, e_epsr, e_nbath, e_rmin, s_w, s_tau, e_real, g);
    if (s_rabi->parsed())
      return run_rabi(r_gamma, r_p1, r_p2, r_theta, r_freq, r_spread, r_samples, g);
    if (an_trace->parsed()) return run_analyze_trace(a_manifest, a_filter_manifest, g);
    if (an_noise->parsed()) return run_analyze_noise(a_manifest, a_filter_manifest, g);
    if (an_diff->parsed()) return run_analyze_diff(a_file_a, a_file_b, a_t0, a_t1, g);
    if (fit_exp->parsed()) return run_fit_series("exp", f_input, g);
    if (fit_str->parsed()) return run_fit_series("stretched", f_input, g);
    if (fit_glob->parsed())
      return run_fit_global(f_input, f_variant, f_init, f_bootstrap, f_subset, f_starts, f_gsd0,
                            f_emit_params, g);
    if (l_tan->parsed())
      return run_losses_tandelta(l_params, l_ratio, l_n0, l_dipole, l_epsr, g);
    if (l_eff->parsed())
      return run_losses_efficiency(l_tand, l_cap, l_z0, l_freq, l_cells, l_gain, g);
    if (l_cas->parsed())
      return run_losses_cascade(l_tand, l_cap, l_z0, l_freq, l_cells, l_gain, l_nin, g);
    if (sy_decay->parsed())
      return run_synth_decay(sy_params, sy_kind, sy_temps, sy_delays, sy_a0, sy_noise, sy_tau,
                             sy_gsd0, g);
    if (sy_traces->parsed())
      return run_synth_traces(st_amp, st_center, st_width, st_phase, st_dt, st_duration, st_noise,
                              st_n, g);
    std::cerr << "error: no subcommand selected\n";
    return 1;
  } catch (const FitError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const WindowError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
