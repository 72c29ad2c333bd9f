#pragma once

// Deterministic synthetic data: decay datasets produced by the forward echo
// models plus Gaussian noise, and echo trace sets on rotated quadratures.
// Fixed seeds give bit-identical output.

#include <cstdint>
#include <string>
#include <vector>

#include "tlsecho/decay_fit.hpp"
#include "tlsecho/echo_model.hpp"
#include "tlsecho/trace_pipeline.hpp"

namespace tlsecho {

struct SynthDecaySpec {
  SpectralDiffusionParams params;
  ModelVariant variant = ModelVariant::BaseIntrinsic;
  DecayKind kind = DecayKind::Hahn;
  double tau_s = 0.0;  // stimulated kind only: fixed first interpulse delay
  std::vector<double> temperatures_k;
  std::vector<double> delays_s;    // 2*tau (Hahn) or tau' (stimulated)
  std::vector<double> amplitudes;  // A0 per temperature, V s
  double noise_std = 0.0;          // V s, additive Gaussian per point
  std::uint64_t seed = 0;
  StimulatedOptions stim_options{};
  std::string device_label = "synthetic";
};

struct SyntheticDecay {
  DecayDataset dataset;
  SynthDecaySpec truth;  // generator parameters, kept for round-trip tests
};

SyntheticDecay generate_decay_dataset(const SynthDecaySpec& spec);

struct SynthTraceSpec {
  double dt = 3.2e-9;           // s
  double duration = 0.0;        // s; must cover center + 5*width
  double amplitude_v = 0.0;     // echo peak amplitude
  double center_s = 0.0;
  double width_s = 0.0;
  double phase_rad = 0.0;       // quadrature rotation of the echo
  double noise_std_v = 0.0;     // white noise per sample and quadrature
  std::size_t n_traces = 1;
  std::uint64_t seed = 0;
};

// I = A cos(phase) g(t) + noise, Q = A sin(phase) g(t) + noise with g a unit
// Gaussian envelope.
std::vector<IQTrace> generate_trace_set(const SynthTraceSpec& spec);

}  // namespace tlsecho
