#pragma once

// File formats. Everything is versioned with format_version = 1.
//
//  - Parameter files and decay datasets: JSON with unit-suffixed field names.
//    Rates appear both as the conventional "*_over_2pi_hz" value and as the
//    exact "*_rad_per_s" value; readers prefer the exact field (bit-exact
//    round trips) and fall back to 2*pi times the conventional one.
//  - IQ trace sets: one CSV per trace with header t_s,i_v,q_v plus a JSON
//    manifest listing the members and carrying the exact dt/t0.
//
// Schema violations throw SchemaError naming the offending field.

#include <optional>
#include <string>
#include <vector>

#include "tlsecho/decay_fit.hpp"
#include "tlsecho/echo_model.hpp"
#include "tlsecho/synth.hpp"
#include "tlsecho/trace_pipeline.hpp"

namespace tlsecho {

struct ParameterFile {
  std::string device_label;
  ModelVariant variant = ModelVariant::BaseIntrinsic;
  SpectralDiffusionParams params;
};

void write_params(const std::string& path, const ParameterFile& file);
ParameterFile read_params(const std::string& path);

// The optional truth block records the generator of a synthetic dataset.
void write_dataset(const std::string& path, const DecayDataset& dataset,
                   const SynthDecaySpec* truth = nullptr);
DecayDataset read_dataset(const std::string& path);
// Generator parameters of a synthetic dataset, when the file carries them.
std::optional<ParameterFile> read_dataset_truth(const std::string& path);

void write_trace_csv(const std::string& path, const IQTrace& trace);
// Reconstructs t0/dt from the time column; requires a uniform grid.
IQTrace read_trace_csv(const std::string& path);

// Writes <stem>_NNN.csv next to the manifest and the manifest itself.
void write_trace_set(const std::string& manifest_path, const std::vector<IQTrace>& traces,
                     const std::string& stem = "trace");
std::vector<IQTrace> read_trace_set(const std::string& manifest_path);

void write_bootstrap_summary(const std::string& path, const BootstrapSummary& summary,
                             const std::string& device_label);

void write_curve_csv(const std::string& path, const std::string& x_name,
                     const std::string& y_name, const std::vector<double>& x,
                     const std::vector<double>& y);

}  // namespace tlsecho
