#include "tlsecho/trace_pipeline.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "tlsecho/constants.hpp"
#include "tlsecho/errors.hpp"
#include "tlsecho/rng.hpp"
#include "tlsecho/synth.hpp"

using namespace tlsecho;

namespace {

SynthTraceSpec base_spec() {
  SynthTraceSpec spec;
  spec.dt = 3.2e-9;
  spec.duration = 2e-6;
  spec.amplitude_v = 1e-3;
  spec.center_s = 1e-6;
  spec.width_s = 50e-9;
  spec.phase_rad = 0.0;
  spec.noise_std_v = 0.0;
  spec.n_traces = 1;
  return spec;
}

}  // namespace

TEST_CASE("gaussian pulse fit recovers a clean pulse to 1e-6") {
  const auto traces = generate_trace_set(base_spec());
  const auto fit = fit_gaussian_pulse(traces[0], Quadrature::I);
  CHECK(fit.amplitude == doctest::Approx(1e-3).epsilon(1e-6));
  CHECK(fit.center == doctest::Approx(1e-6).epsilon(1e-6));
  CHECK(fit.width == doctest::Approx(50e-9).epsilon(1e-6));
  CHECK(fit.residual_rms < 1e-9);
}

TEST_CASE("gaussian pulse fit under noise: amplitude within 5% over seeds") {
  auto spec = base_spec();
  spec.noise_std_v = 0.05e-3;
  spec.n_traces = 100;
  spec.seed = 2024;
  const auto traces = generate_trace_set(spec);
  int ok = 0;
  for (const auto& tr : traces) {
    const auto fit = fit_gaussian_pulse(tr, Quadrature::I);
    if (std::abs(fit.amplitude - 1e-3) < 0.05e-3) ++ok;
  }
  CHECK(ok >= 95);  // ~2% amplitude scatter expected at this SNR
}

TEST_CASE("gaussian pulse fit failure modes") {
  IQTrace zero;
  zero.dt = 1e-9;
  zero.i = Eigen::VectorXd::Zero(64);
  zero.q = Eigen::VectorXd::Zero(64);
  CHECK_THROWS_AS(fit_gaussian_pulse(zero, Quadrature::I), FitError);

  // Pure noise: peak SNR < 2.
  IQTrace noise = zero;
  SplitMix64 g(5);
  for (int k = 0; k < 64; ++k) noise.i[k] = g.normal();
  CHECK_THROWS_AS(fit_gaussian_pulse(noise, Quadrature::I), FitError);

  IQTrace bad;
  bad.dt = 0.0;
  bad.i = bad.q = Eigen::VectorXd::Zero(16);
  CHECK_THROWS_AS(fit_gaussian_pulse(bad, Quadrature::I), std::invalid_argument);
}

TEST_CASE("build_filter: echoes on one quadrature") {
  const auto traces = generate_trace_set(base_spec());
  const std::array<IQTrace, 3> three = {traces[0], traces[0], traces[0]};
  const auto f = build_filter(three);
  CHECK(f.phi0 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f.mu_bar == doctest::Approx(1e-6).epsilon(1e-9));
  CHECK(f.sigma_bar == doctest::Approx(50e-9).epsilon(1e-6));

  auto spec_q = base_spec();
  spec_q.phase_rad = phys::pi / 2.0;
  const auto q_traces = generate_trace_set(spec_q);
  const std::array<IQTrace, 3> three_q = {q_traces[0], q_traces[0], q_traces[0]};
  CHECK(build_filter(three_q).phi0 == doctest::Approx(phys::pi / 2.0).epsilon(1e-9));
}

TEST_CASE("build_filter: noisy echoes at 30 degrees") {
  auto spec = base_spec();
  spec.phase_rad = phys::pi / 6.0;
  spec.noise_std_v = 0.02e-3;
  spec.n_traces = 3;
  spec.seed = 31;
  const auto traces = generate_trace_set(spec);
  const std::array<IQTrace, 3> three = {traces[0], traces[1], traces[2]};
  const auto f = build_filter(three);
  CHECK(std::abs(f.phi0 - phys::pi / 6.0) < 2.0 * phys::pi / 180.0);
}

TEST_CASE("integrate_echo: matched filter recovers the closed-form area") {
  auto spec = base_spec();
  spec.amplitude_v = 1.0;
  const auto traces = generate_trace_set(spec);
  EchoFilter f{1e-6, 50e-9, 0.0};
  const auto res = integrate_echo(traces[0], f);
  // Continuum limit: I = sqrt(2 pi) sigma A = 1.2533e-7 V s.
  const double expect = std::sqrt(phys::two_pi) * 50e-9;
  CHECK(std::abs(res.i_bar - expect) < 1e-3 * expect);
  CHECK(std::abs(res.phi) < 1e-6);

  // Same signal on Q: identical magnitude, phi = pi/2.
  auto spec_q = spec;
  spec_q.phase_rad = phys::pi / 2.0;
  const auto q_traces = generate_trace_set(spec_q);
  EchoFilter fq{1e-6, 50e-9, phys::pi / 2.0};
  const auto res_q = integrate_echo(q_traces[0], fq);
  CHECK(res_q.i_bar == doctest::Approx(res.i_bar).epsilon(1e-9));
  CHECK(res_q.phi == doctest::Approx(phys::pi / 2.0).epsilon(1e-6));

  // Zero trace integrates to zero.
  IQTrace zero = traces[0];
  zero.i.setZero();
  zero.q.setZero();
  CHECK(integrate_echo(zero, f).i_bar == 0.0);
}

TEST_CASE("integrate_echo: global IQ rotation invariance") {
  auto spec = base_spec();
  spec.amplitude_v = 1e-3;
  spec.noise_std_v = 1e-5;  // SNR ~ 100
  spec.seed = 8;
  const auto traces = generate_trace_set(spec);
  EchoFilter f{1e-6, 50e-9, 0.0};
  const auto ref = integrate_echo(traces[0], f);

  for (double rot : {0.3, 1.2, -0.7}) {
    IQTrace r = traces[0];
    for (Eigen::Index k = 0; k < r.size(); ++k) {
      const double i = traces[0].i[k], q = traces[0].q[k];
      r.i[k] = i * std::cos(rot) - q * std::sin(rot);
      r.q[k] = i * std::sin(rot) + q * std::cos(rot);
    }
    EchoFilter fr = f;
    fr.phi0 = rot;  // follow the rotation
    const auto got = integrate_echo(r, fr);
    CHECK(std::abs(got.i_bar - ref.i_bar) < 1e-9 * std::abs(ref.i_bar));
  }
}

TEST_CASE("integrate_echo: linearity in amplitude") {
  auto spec = base_spec();
  const auto traces = generate_trace_set(spec);
  EchoFilter f{1e-6, 50e-9, 0.0};
  IQTrace scaled = traces[0];
  scaled.i *= 3.5;
  scaled.q *= 3.5;
  CHECK(integrate_echo(scaled, f).i_bar ==
        doctest::Approx(3.5 * integrate_echo(traces[0], f).i_bar).epsilon(1e-12));
}

TEST_CASE("integrate_echo: phase correction drives Q_bar below 1e-3 of I_bar") {
  auto spec = base_spec();
  spec.phase_rad = 0.4;  // initial phi0 estimate will be slightly off
  spec.noise_std_v = 5e-6;
  spec.n_traces = 3;
  spec.seed = 12;
  const auto traces = generate_trace_set(spec);
  const std::array<IQTrace, 3> three = {traces[0], traces[1], traces[2]};
  const auto f = build_filter(three);
  for (const auto& tr : three) {
    const auto res = integrate_echo(tr, f);
    // Recompute Q_bar at the applied phase.
    double s_i = 0.0, s_q = 0.0, den = 0.0;
    const double norm = 1.0 / std::sqrt(phys::two_pi * f.sigma_bar * f.sigma_bar);
    for (Eigen::Index k = 0; k < tr.size(); ++k) {
      const double z = (tr.time_at(k) - f.mu_bar) / f.sigma_bar;
      if (std::abs(z) > 5.0) continue;
      const double u = norm * std::exp(-0.5 * z * z);
      s_i += u * tr.i[k];
      s_q += u * tr.q[k];
      den += u * u;
    }
    const double q_bar = (-s_i * std::sin(res.phi) + s_q * std::cos(res.phi)) / den;
    CHECK(std::abs(q_bar) < 1e-3 * std::abs(res.i_bar));
  }
}

TEST_CASE("integrate_echo window checks") {
  const auto traces = generate_trace_set(base_spec());
  EchoFilter off{1.9e-6, 50e-9, 0.0};  // window sticks out past the end
  CHECK_THROWS_AS(integrate_echo(traces[0], off), WindowError);
}

TEST_CASE("estimate_integration_noise matches white-noise propagation") {
  auto spec = base_spec();
  spec.amplitude_v = 0.0;  // echo-free
  spec.noise_std_v = 0.28e-3;
  spec.n_traces = 1000;
  spec.seed = 55;
  const auto traces = generate_trace_set(spec);
  EchoFilter f{1e-6, 50e-9, 0.0};
  const double est = estimate_integration_noise(traces, f);

  // sigma(I) = sigma_n / sqrt(sum u^2) over the window.
  double sum_u2 = 0.0;
  const double norm = 1.0 / std::sqrt(phys::two_pi * f.sigma_bar * f.sigma_bar);
  for (Eigen::Index k = 0; k < traces[0].size(); ++k) {
    const double z = (traces[0].time_at(k) - f.mu_bar) / f.sigma_bar;
    if (std::abs(z) > 5.0) continue;
    const double u = norm * std::exp(-0.5 * z * z);
    sum_u2 += u * u;
  }
  const double predicted = spec.noise_std_v / std::sqrt(sum_u2);
  CHECK(est / predicted > 0.95);
  CHECK(est / predicted < 1.05);

  // Noise-free population collapses to zero.
  auto clean = spec;
  clean.noise_std_v = 0.0;
  clean.n_traces = 60;
  CHECK(estimate_integration_noise(generate_trace_set(clean), f) == 0.0);

  CHECK_THROWS_AS(estimate_integration_noise({traces[0]}, f), std::invalid_argument);
}

TEST_CASE("pointwise std") {
  auto spec = base_spec();
  spec.amplitude_v = 0.0;
  spec.noise_std_v = 1.0;
  spec.n_traces = 5000;
  spec.duration = 0.2e-6;
  spec.center_s = 0.1e-6;
  spec.width_s = 10e-9;
  spec.seed = 3;
  const auto traces = generate_trace_set(spec);
  const Eigen::VectorXd s = pointwise_std(traces);
  // Unit noise on both quadratures: sigma = sqrt(2) within 5%.
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    CHECK(s[k] > std::sqrt(2.0) * 0.95);
    CHECK(s[k] < std::sqrt(2.0) * 1.05);
  }

  // Identical traces: zero to machine precision (one ulp of the sample value).
  const std::vector<IQTrace> same = {traces[0], traces[0], traces[0]};
  CHECK(pointwise_std(same).maxCoeff() < 1e-15);

  // Noise on I only: sigma ~ 1.
  auto traces_i = traces;
  for (auto& tr : traces_i) tr.q.setZero();
  const Eigen::VectorXd si = pointwise_std(traces_i);
  CHECK(si[0] > 0.95);
  CHECK(si[0] < 1.05);

  // Permutation invariance.
  std::vector<IQTrace> perm(traces.begin(), traces.begin() + 100);
  const Eigen::VectorXd a = pointwise_std(perm);
  std::reverse(perm.begin(), perm.end());
  const Eigen::VectorXd b = pointwise_std(perm);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("trace difference") {
  const auto traces = generate_trace_set(base_spec());
  const IQTrace& a = traces[0];
  CHECK(trace_difference(a, a, 0.0, 2e-6) == 0.0);

  // Constant offset over an aligned window integrates to c * L.
  IQTrace b = a;
  const double c = 2.5e-4;
  b.i.array() -= c;
  const double t0 = 320e-9, t1 = 960e-9;  // multiples of dt
  CHECK(trace_difference(a, b, t0, t1) == doctest::Approx(c * (t1 - t0)).epsilon(1e-9));

  // Echo against an echo-free reference: the windowed Gaussian area.
  IQTrace zero = a;
  zero.i.setZero();
  zero.q.setZero();
  const double area = trace_difference(a, zero, 0.0, 2e-6);
  const double expect = 1e-3 * std::sqrt(phys::two_pi) * 50e-9;
  CHECK(std::abs(area - expect) < 1e-3 * expect);

  IQTrace other = a;
  other.dt *= 2.0;
  CHECK_THROWS_AS(trace_difference(a, other, 0.0, 1e-6), std::invalid_argument);
}

TEST_CASE("build_filter propagates fit failure on unusable traces") {
  IQTrace zero;
  zero.dt = 3.2e-9;
  zero.i = Eigen::VectorXd::Zero(256);
  zero.q = Eigen::VectorXd::Zero(256);
  CHECK_THROWS_AS(build_filter({zero, zero, zero}), FitError);
}

TEST_CASE("estimate_integration_noise on correlated noise returns the empirical std") {
  // Low-pass noise (8-sample moving average of white noise): no analytic
  // white-noise claim, but the estimator still reports the population std.
  std::vector<IQTrace> traces;
  for (int j = 0; j < 400; ++j) {
    SplitMix64 g = substream(99, j);
    IQTrace tr;
    tr.dt = 3.2e-9;
    tr.t0 = 0.0;
    const int n = 640;
    Eigen::VectorXd white_i(n + 8), white_q(n + 8);
    for (int k = 0; k < n + 8; ++k) {
      white_i[k] = 2.8e-4 * g.normal();
      white_q[k] = 2.8e-4 * g.normal();
    }
    tr.i.resize(n);
    tr.q.resize(n);
    for (int k = 0; k < n; ++k) {
      tr.i[k] = white_i.segment(k, 8).mean();
      tr.q[k] = white_q.segment(k, 8).mean();
    }
    traces.push_back(std::move(tr));
  }
  EchoFilter f{1e-6, 50e-9, 0.0};
  const double est = estimate_integration_noise(traces, f);
  Eigen::VectorXd vals(static_cast<Eigen::Index>(traces.size()));
  for (std::size_t j = 0; j < traces.size(); ++j) {
    vals[static_cast<Eigen::Index>(j)] = integrate_echo(traces[j], f, false).i_bar;
  }
  const double mean = vals.mean();
  const double sample_std =
      std::sqrt((vals.array() - mean).square().sum() / static_cast<double>(vals.size() - 1));
  CHECK(std::abs(est - sample_std) <= 0.10 * sample_std);
}
