#include "tlsecho/synth.hpp"

#include <cmath>
#include <stdexcept>

#include "tlsecho/rng.hpp"

namespace tlsecho {

SyntheticDecay generate_decay_dataset(const SynthDecaySpec& spec) {
  validate(spec.params, spec.variant);
  if (spec.temperatures_k.empty() || spec.delays_s.empty()) {
    throw std::invalid_argument("SynthDecaySpec: temperature and delay grids must be non-empty");
  }
  if (spec.amplitudes.size() != spec.temperatures_k.size()) {
    throw std::invalid_argument("SynthDecaySpec: one amplitude per temperature required");
  }
  if (!(spec.noise_std >= 0.0)) throw std::invalid_argument("SynthDecaySpec: noise_std must be >= 0");
  if (spec.kind == DecayKind::Stimulated && !(spec.tau_s > 0.0)) {
    throw std::invalid_argument("SynthDecaySpec: stimulated kind requires tau_s > 0");
  }

  SyntheticDecay out;
  out.truth = spec;
  out.dataset.kind = spec.kind;
  out.dataset.device_label = spec.device_label;
  for (std::size_t i = 0; i < spec.temperatures_k.size(); ++i) {
    TemperatureSeries series;
    series.temperature_k = spec.temperatures_k[i];
    series.tau_s = spec.kind == DecayKind::Stimulated ? spec.tau_s : 0.0;
    SplitMix64 g = substream(spec.seed, i);
    for (double delay : spec.delays_s) {
      DecayPoint pt;
      pt.delay_s = delay;
      const double clean =
          spec.kind == DecayKind::Hahn
              ? hahn_amplitude(spec.params, spec.variant, spec.amplitudes[i], 0.5 * delay,
                               series.temperature_k)
              : stimulated_amplitude(spec.params, spec.variant, spec.amplitudes[i], spec.tau_s,
                                     delay, series.temperature_k, spec.stim_options);
      pt.amplitude = clean + (spec.noise_std > 0.0 ? spec.noise_std * g.normal() : 0.0);
      if (spec.noise_std > 0.0) pt.err = spec.noise_std;
      series.points.push_back(pt);
    }
    out.dataset.series.push_back(std::move(series));
  }
  validate(out.dataset);
  return out;
}

std::vector<IQTrace> generate_trace_set(const SynthTraceSpec& spec) {
  if (!(spec.dt > 0.0) || !(spec.width_s > 0.0) || spec.n_traces == 0) {
    throw std::invalid_argument("SynthTraceSpec: dt, width > 0 and n_traces >= 1 required");
  }
  if (!(spec.duration >= spec.center_s + 5.0 * spec.width_s)) {
    throw std::invalid_argument("SynthTraceSpec: duration must cover center + 5*width");
  }
  const auto n = static_cast<Eigen::Index>(std::llround(spec.duration / spec.dt)) + 1;
  const double ci = spec.amplitude_v * std::cos(spec.phase_rad);
  const double cq = spec.amplitude_v * std::sin(spec.phase_rad);

  std::vector<IQTrace> traces;
  traces.reserve(spec.n_traces);
  for (std::size_t j = 0; j < spec.n_traces; ++j) {
    SplitMix64 g = substream(spec.seed, j);
    IQTrace tr;
    tr.dt = spec.dt;
    tr.t0 = 0.0;
    tr.i.resize(n);
    tr.q.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double z = (tr.time_at(k) - spec.center_s) / spec.width_s;
      const double envelope = std::exp(-0.5 * z * z);
      double ni = 0.0, nq = 0.0;
      if (spec.noise_std_v > 0.0) {
        ni = spec.noise_std_v * g.normal();
        nq = spec.noise_std_v * g.normal();
      }
      tr.i[k] = ci * envelope + ni;
      tr.q[k] = cq * envelope + nq;
    }
    traces.push_back(std::move(tr));
  }
  return traces;
}

}  // namespace tlsecho
