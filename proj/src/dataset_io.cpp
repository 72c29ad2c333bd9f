#include "tlsecho/dataset_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "tlsecho/constants.hpp"
#include "tlsecho/errors.hpp"

namespace tlsecho {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path + ": cannot open");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return j;
}

void dump_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw SchemaError(path + ": cannot open for writing");
  out << j.dump(2) << '\n';
}

void check_version(const json& j, const std::string& where) {
  if (!j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw SchemaError(where + ": missing format_version");
  }
  if (j["format_version"].get<int>() != 1) {
    throw SchemaError(where + ": unsupported format_version");
  }
}

double require_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw SchemaError(where + "." + key + ": missing or not a number");
  }
  return j[key].get<double>();
}

// Writes a rate under both conventions; the exact rad/s field wins on read.
void put_rate(json& j, const std::string& stem, double rad_per_s, const char* per = "") {
  j[stem + "_over_2pi_hz" + per] = rad_per_s / phys::two_pi;
  j[stem + "_rad_per_s" + per] = rad_per_s;
}

double get_rate(const json& j, const std::string& stem, const std::string& where,
                const char* per = "") {
  const std::string exact = stem + "_rad_per_s" + per;
  const std::string conventional = stem + "_over_2pi_hz" + per;
  if (j.contains(exact)) {
    const double v = require_number(j, exact, where);
    if (j.contains(conventional)) {
      const double w = require_number(j, conventional, where) * phys::two_pi;
      if (std::abs(w - v) > 1e-9 * std::max(std::abs(v), 1e-300)) {
        throw SchemaError(where + "." + exact + ": disagrees with " + conventional);
      }
    }
    return v;
  }
  if (j.contains(conventional)) return require_number(j, conventional, where) * phys::two_pi;
  throw SchemaError(where + "." + conventional + ": missing");
}

json params_to_json(const SpectralDiffusionParams& p, ModelVariant v) {
  json j;
  put_rate(j, "gamma_sd0", p.gamma_sd0);
  put_rate(j, "omega_b", p.omega_b);
  put_rate(j, "gamma1_b", p.gamma1_b);
  if (v == ModelVariant::BaseIntrinsic) {
    put_rate(j, "gamma2", p.gamma2);
  } else {
    put_rate(j, "gamma2_star", p.gamma2_star);
    put_rate(j, "w_ex", p.w_ex, "_per_k");
  }
  return j;
}

SpectralDiffusionParams params_from_json(const json& j, ModelVariant v, const std::string& where) {
  SpectralDiffusionParams p;
  p.gamma_sd0 = get_rate(j, "gamma_sd0", where);
  p.omega_b = get_rate(j, "omega_b", where);
  p.gamma1_b = get_rate(j, "gamma1_b", where);
  if (v == ModelVariant::BaseIntrinsic) {
    p.gamma2 = get_rate(j, "gamma2", where);
  } else {
    p.gamma2_star = get_rate(j, "gamma2_star", where);
    p.w_ex = get_rate(j, "w_ex", where, "_per_k");
  }
  try {
    validate(p, v);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(where + ": " + e.what());
  }
  return p;
}

std::string variant_name(ModelVariant v) {
  return v == ModelVariant::BaseIntrinsic ? "base" : "refined";
}

ModelVariant variant_from_name(const std::string& name, const std::string& where) {
  if (name == "base") return ModelVariant::BaseIntrinsic;
  if (name == "refined") return ModelVariant::RefinedTemperatureDependent;
  throw SchemaError(where + ".variant: expected \"base\" or \"refined\", got \"" + name + "\"");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_params(const std::string& path, const ParameterFile& file) {
  json j;
  j["format_version"] = 1;
  j["device_label"] = file.device_label;
  j["variant"] = variant_name(file.variant);
  j["params"] = params_to_json(file.params, file.variant);
  dump_json(path, j);
}

ParameterFile read_params(const std::string& path) {
  const json j = load_json(path);
  check_version(j, path);
  ParameterFile out;
  if (!j.contains("variant") || !j["variant"].is_string()) {
    throw SchemaError(path + ".variant: missing");
  }
  out.variant = variant_from_name(j["variant"].get<std::string>(), path);
  out.device_label = j.value("device_label", std::string{});
  if (!j.contains("params") || !j["params"].is_object()) {
    throw SchemaError(path + ".params: missing");
  }
  out.params = params_from_json(j["params"], out.variant, path + ".params");
  return out;
}

void write_dataset(const std::string& path, const DecayDataset& dataset,
                   const SynthDecaySpec* truth) {
  json j;
  j["format_version"] = 1;
  j["kind"] = dataset.kind == DecayKind::Hahn ? "hahn" : "stimulated";
  j["device_label"] = dataset.device_label;
  json series = json::array();
  for (const TemperatureSeries& s : dataset.series) {
    json js;
    js["temperature_k"] = s.temperature_k;
    if (dataset.kind == DecayKind::Stimulated) js["tau_s"] = s.tau_s;
    json points = json::array();
    for (const DecayPoint& pt : s.points) {
      json jp;
      jp["delay_s"] = pt.delay_s;
      jp["amplitude_vs"] = pt.amplitude;
      if (pt.err) jp["err_vs"] = *pt.err;
      points.push_back(std::move(jp));
    }
    js["points"] = std::move(points);
    series.push_back(std::move(js));
  }
  j["series"] = std::move(series);
  if (truth) {
    json g;
    g["variant"] = variant_name(truth->variant);
    g["params"] = params_to_json(truth->params, truth->variant);
    g["noise_std_vs"] = truth->noise_std;
    g["seed"] = truth->seed;
    g["amplitudes_vs"] = truth->amplitudes;
    if (truth->kind == DecayKind::Stimulated) {
      g["tau_s"] = truth->tau_s;
      g["uses_high_t_diffusion_rate"] = truth->stim_options.use_high_t_diffusion_rate;
    }
    j["generator"] = std::move(g);
  }
  dump_json(path, j);
}

DecayDataset read_dataset(const std::string& path) {
  const json j = load_json(path);
  check_version(j, path);
  DecayDataset out;
  const std::string kind = j.value("kind", std::string{});
  if (kind == "hahn") {
    out.kind = DecayKind::Hahn;
  } else if (kind == "stimulated") {
    out.kind = DecayKind::Stimulated;
  } else {
    throw SchemaError(path + ".kind: expected \"hahn\" or \"stimulated\"");
  }
  out.device_label = j.value("device_label", std::string{});
  if (!j.contains("series") || !j["series"].is_array() || j["series"].empty()) {
    throw SchemaError(path + ".series: missing or empty");
  }
  int i = 0;
  for (const json& js : j["series"]) {
    const std::string where = path + ".series[" + std::to_string(i++) + "]";
    TemperatureSeries s;
    s.temperature_k = require_number(js, "temperature_k", where);
    if (!(s.temperature_k > 0.0)) throw SchemaError(where + ".temperature_k: must be > 0");
    if (out.kind == DecayKind::Stimulated) {
      s.tau_s = require_number(js, "tau_s", where);
      if (!(s.tau_s > 0.0)) throw SchemaError(where + ".tau_s: must be > 0");
    }
    if (!js.contains("points") || !js["points"].is_array()) {
      throw SchemaError(where + ".points: missing");
    }
    double prev = -1.0;
    int k = 0;
    for (const json& jp : js["points"]) {
      const std::string pwhere = where + ".points[" + std::to_string(k++) + "]";
      DecayPoint pt;
      pt.delay_s = require_number(jp, "delay_s", pwhere);
      pt.amplitude = require_number(jp, "amplitude_vs", pwhere);
      if (jp.contains("err_vs")) pt.err = require_number(jp, "err_vs", pwhere);
      if (!(pt.delay_s >= 0.0) || pt.delay_s <= prev) {
        throw SchemaError(pwhere + ".delay_s: must be >= 0 and strictly increasing");
      }
      prev = pt.delay_s;
      s.points.push_back(pt);
    }
    out.series.push_back(std::move(s));
  }
  return out;
}

std::optional<ParameterFile> read_dataset_truth(const std::string& path) {
  const json j = load_json(path);
  if (!j.contains("generator")) return std::nullopt;
  const json& g = j["generator"];
  ParameterFile out;
  out.device_label = j.value("device_label", std::string{});
  out.variant = variant_from_name(g.value("variant", std::string{}), path + ".generator");
  out.params = params_from_json(g["params"], out.variant, path + ".generator.params");
  return out;
}

void write_trace_csv(const std::string& path, const IQTrace& trace) {
  std::ofstream out(path);
  if (!out) throw SchemaError(path + ": cannot open for writing");
  out << "t_s,i_v,q_v\n";
  for (Eigen::Index k = 0; k < trace.size(); ++k) {
    out << format_double(trace.time_at(k)) << ',' << format_double(trace.i[k]) << ','
        << format_double(trace.q[k]) << '\n';
  }
}

IQTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line) || line.rfind("t_s,i_v,q_v", 0) != 0) {
    throw SchemaError(path + ": expected header t_s,i_v,q_v");
  }
  std::vector<double> t, iv, qv;
  int row = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c)) {
      throw SchemaError(path + ":" + std::to_string(row) + ": expected 3 comma-separated columns");
    }
    try {
      t.push_back(std::stod(a));
      iv.push_back(std::stod(b));
      qv.push_back(std::stod(c));
    } catch (const std::exception&) {
      throw SchemaError(path + ":" + std::to_string(row) + ": non-numeric value");
    }
    ++row;
  }
  if (t.size() < 8) throw SchemaError(path + ": need at least 8 samples");
  IQTrace trace;
  trace.t0 = t.front();
  trace.dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  if (!(trace.dt > 0.0)) throw SchemaError(path + ": time column must increase");
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (std::abs(t[k] - (trace.t0 + trace.dt * static_cast<double>(k))) > 1e-6 * trace.dt) {
      throw SchemaError(path + ": non-uniform time grid at row " + std::to_string(k + 1));
    }
  }
  trace.i = Eigen::Map<Eigen::VectorXd>(iv.data(), static_cast<Eigen::Index>(iv.size()));
  trace.q = Eigen::Map<Eigen::VectorXd>(qv.data(), static_cast<Eigen::Index>(qv.size()));
  return trace;
}

void write_trace_set(const std::string& manifest_path, const std::vector<IQTrace>& traces,
                     const std::string& stem) {
  const fs::path dir = fs::path(manifest_path).parent_path();
  json j;
  j["format_version"] = 1;
  json list = json::array();
  for (std::size_t k = 0; k < traces.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%03zu.csv", stem.c_str(), k);
    write_trace_csv((dir / name).string(), traces[k]);
    json entry;
    entry["file"] = name;
    entry["dt_s"] = traces[k].dt;
    entry["t0_s"] = traces[k].t0;
    entry["n_samples"] = traces[k].size();
    list.push_back(std::move(entry));
  }
  j["traces"] = std::move(list);
  dump_json(manifest_path, j);
}

std::vector<IQTrace> read_trace_set(const std::string& manifest_path) {
  const json j = load_json(manifest_path);
  check_version(j, manifest_path);
  if (!j.contains("traces") || !j["traces"].is_array()) {
    throw SchemaError(manifest_path + ".traces: missing");
  }
  const fs::path dir = fs::path(manifest_path).parent_path();
  std::vector<IQTrace> out;
  int k = 0;
  for (const json& entry : j["traces"]) {
    const std::string where = manifest_path + ".traces[" + std::to_string(k++) + "]";
    if (!entry.contains("file") || !entry["file"].is_string()) {
      throw SchemaError(where + ".file: missing");
    }
    IQTrace trace = read_trace_csv((dir / entry["file"].get<std::string>()).string());
    // The manifest metadata is authoritative; the CSV time column is only a
    // convenience for external tools.
    trace.dt = require_number(entry, "dt_s", where);
    trace.t0 = require_number(entry, "t0_s", where);
    if (entry.contains("n_samples") &&
        entry["n_samples"].get<Eigen::Index>() != trace.size()) {
      throw SchemaError(where + ".n_samples: does not match the CSV");
    }
    out.push_back(std::move(trace));
  }
  return out;
}

void write_bootstrap_summary(const std::string& path, const BootstrapSummary& summary,
                             const std::string& device_label) {
  json j;
  j["format_version"] = 1;
  j["device_label"] = device_label;
  j["variant"] = variant_name(summary.variant);
  j["n_resamples"] = summary.n_resamples;
  j["subset_size"] = summary.subset_size;
  j["n_failed"] = summary.n_failed;
  j["seed"] = summary.seed;
  j["params_mean"] = params_to_json(summary.mean, summary.variant);
  j["params_std"] = params_to_json(summary.std, summary.variant);
  j["parameter_names"] = summary.parameter_names;
  json table = json::array();
  for (Eigen::Index r = 0; r < summary.samples.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < summary.samples.cols(); ++c) {
      row.push_back(summary.samples(r, c));  // failed rows serialize as null
    }
    table.push_back(std::move(row));
  }
  j["samples_rad_per_s"] = std::move(table);
  dump_json(path, j);
}

void write_curve_csv(const std::string& path, const std::string& x_name,
                     const std::string& y_name, const std::vector<double>& x,
                     const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("write_curve_csv: size mismatch");
  std::ofstream out(path);
  if (!out) throw SchemaError(path + ": cannot open for writing");
  out << x_name << ',' << y_name << '\n';
  for (std::size_t k = 0; k < x.size(); ++k) {
    out << format_double(x[k]) << ',' << format_double(y[k]) << '\n';
  }
}

}  // namespace tlsecho
