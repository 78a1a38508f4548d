#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include <vss/analysis.hpp>
#include <vss/crystal.hpp>
#include <vss/errors.hpp>
#include <vss/grid.hpp>
#include <vss/io.hpp>
#include <vss/matter.hpp>
#include <vss/spectrum.hpp>
#include <vss/units.hpp>

namespace vss {

using nlohmann::json;

inline constexpr int kConfigSchemaVersion = 1;

// optional deterministic level generator (used by the bundled demos)
struct DemoSystemSpec {
  bool enabled = false;
  std::uint64_t seed = 1;
  int n_levels = 2;
  double lo_eV = 0.0;
  double hi_eV = 0.0;
  double min_spacing_eV = 0.0;
  double linewidth_eV = 2e-4;
};

// one experiment: source, matter, delay scan, analysis, optional baseline
struct ExperimentConfig {
  // source
  double crystal_length_m = 0.005;
  double slope_pump_ps_per_m = 5.4;
  double slope_signal_ps_per_m = 5.2;
  double slope_idler_ps_per_m = 5.6;
  double pump_center_eV = 3.0996;
  double pump_duration_ps = 1.0;
  int grid_n = 256;
  double grid_half_span_rad_s = 1.25e14;
  int n_modes = 256;
  double target_photons = 100.0;
  // matter
  MatterSystem matter;
  double kappa_f_eV = 1e-4;
  DemoSystemSpec demo;
  // scan
  double tau_min_ps = -1.0;
  double tau_max_ps = 1.0;
  int n_delays = 512;
  std::vector<double> chirps_fs2 = {0.0, 1.0};
  bool include_exchange = true;
  double nyquist_safety = 4.0;
  // analysis
  std::string window = "hann";
  PeakOptions peaks;
  int n_levels = 1;
  // optional multi-crystal baseline
  std::vector<double> baseline_lengths_m;

  CrystalParams crystal() const {
    return CrystalParams::degenerate(crystal_length_m, ps_per_m_to_s_per_m(slope_pump_ps_per_m),
                                     ps_per_m_to_s_per_m(slope_signal_ps_per_m),
                                     ps_per_m_to_s_per_m(slope_idler_ps_per_m),
                                     eV_to_omega(pump_center_eV));
  }
  PumpParams pump() const {
    PumpParams p;
    p.tau_p = ps_to_s(pump_duration_ps);
    p.omega_p0 = eV_to_omega(pump_center_eV);
    return p;
  }
  FrequencyGrid signal_grid() const {
    return FrequencyGrid::centered(0.5 * eV_to_omega(pump_center_eV), grid_half_span_rad_s,
                                   grid_n);
  }
  DelayGrid delay_grid() const {
    return DelayGrid::linspace(ps_to_s(tau_min_ps), ps_to_s(tau_max_ps), n_delays);
  }
  std::vector<double> chirps_s2() const {
    std::vector<double> out;
    out.reserve(chirps_fs2.size());
    for (double c : chirps_fs2) out.push_back(fs2_to_s2(c));
    return out;
  }
  SpectralWindow spectral_window() const { return spectral_window_from_string(window); }

  void validate() const {
    crystal().validate();
    pump().validate();
    if (grid_n < 2) throw ConfigError("config: grid.n_points must be >= 2");
    if (n_modes < 1) throw ConfigError("config: source.n_modes must be >= 1");
    if (!(target_photons > 0)) throw ConfigError("config: target_photons must be positive");
    if (!(kappa_f_eV > 0)) throw ConfigError("config: matter.kappa_f_eV must be positive");
    if (!demo.enabled) {
      matter.validate();
    } else {
      if (!matter.levels.empty())
        throw ConfigError("config: matter.levels must be empty when matter.demo is present");
      if (demo.n_levels < 1) throw ConfigError("config: demo.n_levels must be >= 1");
      if (!(demo.lo_eV < demo.hi_eV) || !(demo.lo_eV > matter.epsilon_g) ||
          !(demo.hi_eV < matter.epsilon_f))
        throw ConfigError("config: demo level bounds must satisfy eps_g < lo < hi < eps_f");
      if (!(demo.min_spacing_eV >= 0) || !(demo.linewidth_eV > 0))
        throw ConfigError("config: demo spacing must be >= 0 and linewidth positive");
    }
    if (n_delays < 4) throw ConfigError("config: scan.n_delays must be >= 4");
    if (!(tau_max_ps > tau_min_ps)) throw ConfigError("config: scan.tau_max must exceed tau_min");
    if (chirps_fs2.empty()) throw ConfigError("config: scan.chirps_fs2 must not be empty");
    if (!(nyquist_safety >= 1.0)) throw ConfigError("config: scan.nyquist_safety must be >= 1");
    spectral_window(); // throws on bad name
    if (n_levels < 1) throw ConfigError("config: analysis.n_levels must be >= 1");
    if (!(peaks.dc_cutoff_eV >= 0) || !(peaks.prominence_rel >= 0) ||
        !(peaks.min_separation_eV >= 0))
      throw ConfigError("config: analysis peak thresholds must be non-negative");
    for (double l : baseline_lengths_m)
      if (!(l > 0)) throw ConfigError("config: baseline lengths must be positive");
  }
};

namespace detail {

inline void require_keys(const json& j, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config: " + where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) ok = true;
    if (!ok) throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

} // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
  using detail::get_or;
  detail::require_keys(j, "root",
                       {"schema_version", "source", "matter", "scan", "analysis", "baseline"});
  const int ver = detail::get_or<int>(j, "schema_version", kConfigSchemaVersion);
  if (ver != kConfigSchemaVersion)
    throw ConfigError("config: unsupported schema_version " + std::to_string(ver));

  ExperimentConfig c;
  if (j.contains("source")) {
    const json& s = j.at("source");
    detail::require_keys(s, "source",
                         {"crystal", "pump_duration_ps", "grid", "n_modes",
                          "target_photons_per_beam"});
    if (s.contains("crystal")) {
      const json& cr = s.at("crystal");
      detail::require_keys(cr, "source.crystal",
                           {"length_m", "group_slope_pump_ps_per_m",
                            "group_slope_signal_ps_per_m", "group_slope_idler_ps_per_m",
                            "pump_center_eV"});
      c.crystal_length_m = get_or(cr, "length_m", c.crystal_length_m);
      c.slope_pump_ps_per_m = get_or(cr, "group_slope_pump_ps_per_m", c.slope_pump_ps_per_m);
      c.slope_signal_ps_per_m =
          get_or(cr, "group_slope_signal_ps_per_m", c.slope_signal_ps_per_m);
      c.slope_idler_ps_per_m = get_or(cr, "group_slope_idler_ps_per_m", c.slope_idler_ps_per_m);
      c.pump_center_eV = get_or(cr, "pump_center_eV", c.pump_center_eV);
    }
    c.pump_duration_ps = get_or(s, "pump_duration_ps", c.pump_duration_ps);
    if (s.contains("grid")) {
      const json& g = s.at("grid");
      detail::require_keys(g, "source.grid", {"n_points", "half_span_rad_s"});
      c.grid_n = get_or(g, "n_points", c.grid_n);
      c.grid_half_span_rad_s = get_or(g, "half_span_rad_s", c.grid_half_span_rad_s);
    }
    c.n_modes = get_or(s, "n_modes", c.n_modes);
    c.target_photons = get_or(s, "target_photons_per_beam", c.target_photons);
  }

  if (j.contains("matter")) {
    const json& m = j.at("matter");
    detail::require_keys(m, "matter",
                         {"epsilon_g_eV", "epsilon_f_eV", "kappa_f_eV", "levels", "demo"});
    c.matter.epsilon_g = get_or(m, "epsilon_g_eV", 0.0);
    c.matter.epsilon_f = get_or(m, "epsilon_f_eV", c.pump_center_eV);
    c.kappa_f_eV = get_or(m, "kappa_f_eV", c.kappa_f_eV);
    if (m.contains("levels")) {
      for (const json& lj : m.at("levels")) {
        detail::require_keys(lj, "matter.levels[]", {"energy_eV", "linewidth_eV", "dipole"});
        Level l;
        l.energy_eV = get_or(lj, "energy_eV", 0.0);
        l.linewidth_eV = get_or(lj, "linewidth_eV", 1e-4);
        l.dipole = get_or(lj, "dipole", 1.0);
        c.matter.levels.push_back(l);
      }
    }
    if (m.contains("demo")) {
      const json& d = m.at("demo");
      detail::require_keys(d, "matter.demo",
                           {"seed", "n_levels", "lo_eV", "hi_eV", "min_spacing_eV",
                            "linewidth_eV"});
      c.demo.enabled = true;
      c.demo.seed = get_or<std::uint64_t>(d, "seed", 1);
      c.demo.n_levels = get_or(d, "n_levels", 2);
      c.demo.lo_eV = get_or(d, "lo_eV", 0.0);
      c.demo.hi_eV = get_or(d, "hi_eV", 0.0);
      c.demo.min_spacing_eV = get_or(d, "min_spacing_eV", 0.0);
      c.demo.linewidth_eV = get_or(d, "linewidth_eV", 2e-4);
    }
  } else {
    c.matter.epsilon_f = c.pump_center_eV;
  }

  if (j.contains("scan")) {
    const json& s = j.at("scan");
    detail::require_keys(s, "scan",
                         {"tau_min_ps", "tau_max_ps", "n_delays", "chirps_fs2",
                          "include_exchange", "nyquist_safety"});
    c.tau_min_ps = get_or(s, "tau_min_ps", c.tau_min_ps);
    c.tau_max_ps = get_or(s, "tau_max_ps", c.tau_max_ps);
    c.n_delays = get_or(s, "n_delays", c.n_delays);
    c.chirps_fs2 = get_or(s, "chirps_fs2", c.chirps_fs2);
    c.include_exchange = get_or(s, "include_exchange", c.include_exchange);
    c.nyquist_safety = get_or(s, "nyquist_safety", c.nyquist_safety);
  }

  if (j.contains("analysis")) {
    const json& a = j.at("analysis");
    detail::require_keys(a, "analysis",
                         {"window", "dc_cutoff_eV", "prominence_rel", "min_separation_eV",
                          "n_levels"});
    c.window = get_or<std::string>(a, "window", c.window);
    c.peaks.dc_cutoff_eV = get_or(a, "dc_cutoff_eV", c.peaks.dc_cutoff_eV);
    c.peaks.prominence_rel = get_or(a, "prominence_rel", c.peaks.prominence_rel);
    c.peaks.min_separation_eV = get_or(a, "min_separation_eV", c.peaks.min_separation_eV);
    c.n_levels = get_or(a, "n_levels", c.n_levels);
  }

  if (j.contains("baseline")) {
    const json& b = j.at("baseline");
    detail::require_keys(b, "baseline", {"lengths_m"});
    c.baseline_lengths_m = get_or(b, "lengths_m", c.baseline_lengths_m);
  }

  c.validate();
  return c;
}

inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["source"]["crystal"]["length_m"] = c.crystal_length_m;
  j["source"]["crystal"]["group_slope_pump_ps_per_m"] = c.slope_pump_ps_per_m;
  j["source"]["crystal"]["group_slope_signal_ps_per_m"] = c.slope_signal_ps_per_m;
  j["source"]["crystal"]["group_slope_idler_ps_per_m"] = c.slope_idler_ps_per_m;
  j["source"]["crystal"]["pump_center_eV"] = c.pump_center_eV;
  j["source"]["pump_duration_ps"] = c.pump_duration_ps;
  j["source"]["grid"]["n_points"] = c.grid_n;
  j["source"]["grid"]["half_span_rad_s"] = c.grid_half_span_rad_s;
  j["source"]["n_modes"] = c.n_modes;
  j["source"]["target_photons_per_beam"] = c.target_photons;
  j["matter"]["epsilon_g_eV"] = c.matter.epsilon_g;
  j["matter"]["epsilon_f_eV"] = c.matter.epsilon_f;
  j["matter"]["kappa_f_eV"] = c.kappa_f_eV;
  if (c.demo.enabled) {
    j["matter"]["demo"]["seed"] = c.demo.seed;
    j["matter"]["demo"]["n_levels"] = c.demo.n_levels;
    j["matter"]["demo"]["lo_eV"] = c.demo.lo_eV;
    j["matter"]["demo"]["hi_eV"] = c.demo.hi_eV;
    j["matter"]["demo"]["min_spacing_eV"] = c.demo.min_spacing_eV;
    j["matter"]["demo"]["linewidth_eV"] = c.demo.linewidth_eV;
  } else {
    j["matter"]["levels"] = json::array();
    for (const auto& l : c.matter.levels) {
      json lj;
      lj["energy_eV"] = l.energy_eV;
      lj["linewidth_eV"] = l.linewidth_eV;
      lj["dipole"] = l.dipole;
      j["matter"]["levels"].push_back(lj);
    }
  }
  j["scan"]["tau_min_ps"] = c.tau_min_ps;
  j["scan"]["tau_max_ps"] = c.tau_max_ps;
  j["scan"]["n_delays"] = c.n_delays;
  j["scan"]["chirps_fs2"] = c.chirps_fs2;
  j["scan"]["include_exchange"] = c.include_exchange;
  j["scan"]["nyquist_safety"] = c.nyquist_safety;
  j["analysis"]["window"] = c.window;
  j["analysis"]["dc_cutoff_eV"] = c.peaks.dc_cutoff_eV;
  j["analysis"]["prominence_rel"] = c.peaks.prominence_rel;
  j["analysis"]["min_separation_eV"] = c.peaks.min_separation_eV;
  j["analysis"]["n_levels"] = c.n_levels;
  if (!c.baseline_lengths_m.empty()) j["baseline"]["lengths_m"] = c.baseline_lengths_m;
  return j;
}

// canonical fingerprint: nlohmann objects iterate keys in sorted order, so the
// dump is independent of field order in the input file
inline std::string config_fingerprint(const ExperimentConfig& c) {
  Fnv1a h;
  h.feed(config_to_json(c).dump());
  return hash_hex(h.value());
}

inline ExperimentConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("config: failed to parse '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

inline void save_config(const ExperimentConfig& c, const std::string& path) {
  write_text_file(path, config_to_json(c).dump(2) + "\n");
}

} // namespace vss
