#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include <vss/analysis.hpp>
#include <vss/config.hpp>
#include <vss/errors.hpp>
#include <vss/io.hpp>
#include <vss/jsa.hpp>
#include <vss/schmidt.hpp>
#include <vss/spectrum.hpp>
#include <vss/tpa.hpp>

namespace vss {

// ---------------------------------------------------------------- demo levels

// Deterministic level placement: draws are mapped to doubles with an explicit
// bit recipe so the sequence is identical on every platform for a given seed.
inline MatterSystem generate_demo_system(const DemoSystemSpec& d, double eps_g, double eps_f) {
  if (d.n_levels < 1) throw ConfigError("demo: n_levels must be >= 1");
  if (!(d.lo_eV < d.hi_eV)) throw ConfigError("demo: lo_eV must be below hi_eV");
  if (!(d.lo_eV > eps_g) || !(d.hi_eV < eps_f))
    throw ConfigError("demo: level bounds must lie strictly inside (eps_g, eps_f)");
  if ((d.n_levels - 1) * d.min_spacing_eV > (d.hi_eV - d.lo_eV))
    throw ConfigError("demo: cannot place " + std::to_string(d.n_levels) +
                      " levels with spacing " + std::to_string(d.min_spacing_eV) +
                      " eV inside a " + std::to_string(d.hi_eV - d.lo_eV) + " eV window");

  std::mt19937_64 rng(d.seed);
  auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  constexpr int kMaxAttempts = 20000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<double> e(d.n_levels);
    for (auto& x : e) x = d.lo_eV + unit() * (d.hi_eV - d.lo_eV);
    std::sort(e.begin(), e.end());
    bool ok = true;
    for (int i = 1; i < d.n_levels; ++i)
      if (e[i] - e[i - 1] < d.min_spacing_eV) ok = false;
    if (!ok) continue;
    MatterSystem m;
    m.epsilon_g = eps_g;
    m.epsilon_f = eps_f;
    for (double x : e) m.levels.push_back({x, d.linewidth_eV, 1.0});
    m.validate();
    return m;
  }
  throw ConfigError("demo: failed to satisfy the spacing constraint after " +
                    std::to_string(kMaxAttempts) + " attempts; widen the bounds or reduce "
                    "min_spacing_eV");
}

inline MatterSystem resolve_matter(const ExperimentConfig& c) {
  if (!c.demo.enabled) return c.matter;
  return generate_demo_system(c.demo, c.matter.epsilon_g, c.matter.epsilon_f);
}

// ---------------------------------------------------------------- cache store

namespace detail {

// advisory lock: exclusive-create a .lock file, poll briefly if another run
// holds it, steal if the holder looks dead
class CacheLock {
 public:
  explicit CacheLock(const std::filesystem::path& target)
      : path_(target.string() + ".lock") {
    for (int tries = 0; tries < 100; ++tries) {
      const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
      if (fd >= 0) {
        ::close(fd);
        held_ = true;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    std::filesystem::remove(path_); // stale holder; steal
    const int fd = ::open(path_.c_str(), O_CREAT | O_WRONLY, 0644);
    if (fd >= 0) ::close(fd);
    held_ = true;
  }
  ~CacheLock() {
    if (held_) {
      std::error_code ec;
      std::filesystem::remove(path_, ec);
    }
  }
  CacheLock(const CacheLock&) = delete;
  CacheLock& operator=(const CacheLock&) = delete;

 private:
  std::string path_;
  bool held_ = false;
};

inline void write_container_atomic(const std::filesystem::path& p,
                                   const std::vector<ContainerSection>& sections) {
  const std::filesystem::path tmp = p.string() + ".tmp";
  write_container(tmp, sections);
  std::filesystem::rename(tmp, p);
}

inline void write_text_atomic(const std::filesystem::path& p, const std::string& content) {
  const std::filesystem::path tmp = p.string() + ".tmp";
  write_text_file(tmp, content);
  std::filesystem::rename(tmp, p);
}

} // namespace detail

struct CacheStore {
  std::filesystem::path dir;
  bool enabled = false;

  static CacheStore resolve(const std::string& explicit_dir,
                            const std::filesystem::path& out_dir) {
    CacheStore c;
    if (!explicit_dir.empty()) {
      c.dir = explicit_dir;
    } else if (const char* env = std::getenv("VSS_CACHE_DIR"); env && *env) {
      c.dir = env;
    } else {
      c.dir = out_dir / "cache";
    }
    c.enabled = true;
    std::filesystem::create_directories(c.dir);
    return c;
  }

  std::filesystem::path path_for(const std::string& stage, const std::string& key) const {
    return dir / (stage + "-" + key + ".bin");
  }
};

// ------------------------------------------------------- stage fingerprints

namespace detail {

inline std::string hash_json(const json& j) {
  Fnv1a h;
  h.feed(std::string(version_string));
  h.feed(j.dump());
  return hash_hex(h.value());
}

inline json source_key(const ExperimentConfig& c) {
  json j;
  j["length_m"] = c.crystal_length_m;
  j["sp"] = c.slope_pump_ps_per_m;
  j["ss"] = c.slope_signal_ps_per_m;
  j["si"] = c.slope_idler_ps_per_m;
  j["pump_center_eV"] = c.pump_center_eV;
  j["pump_duration_ps"] = c.pump_duration_ps;
  j["grid_n"] = c.grid_n;
  j["half_span"] = c.grid_half_span_rad_s;
  j["n_modes"] = c.n_modes;
  j["target_photons"] = c.target_photons;
  return j;
}

inline json matter_key(const MatterSystem& m, double kappa_f_eV) {
  json j;
  j["eps_g"] = m.epsilon_g;
  j["eps_f"] = m.epsilon_f;
  j["kappa_f"] = kappa_f_eV;
  j["levels"] = json::array();
  for (const auto& l : m.levels)
    j["levels"].push_back({{"e", l.energy_eV}, {"k", l.linewidth_eV}, {"d", l.dipole}});
  return j;
}

inline json traces_key(const ExperimentConfig& c, const MatterSystem& m,
                       const std::vector<double>& chirps_fs2) {
  json j;
  j["source"] = source_key(c);
  j["matter"] = matter_key(m, c.kappa_f_eV);
  j["tau_min_ps"] = c.tau_min_ps;
  j["tau_max_ps"] = c.tau_max_ps;
  j["n_delays"] = c.n_delays;
  j["chirps_fs2"] = chirps_fs2;
  j["include_exchange"] = c.include_exchange;
  j["nyquist_safety"] = c.nyquist_safety;
  return j;
}

} // namespace detail

// --------------------------------------------------------------- stage runner

struct StageRecord {
  std::string name;
  double wall_ms = 0.0;
  bool cache_hit = false;
};

namespace detail {

template <typename T, typename F>
T run_stage(const char* name, std::vector<StageRecord>& recs, bool progress, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    bool hit = false;
    T out = body(hit);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    recs.push_back({name, ms, hit});
    if (progress)
      std::fprintf(stderr, "[vss] stage %-8s %8.1f ms%s\n", name, ms,
                   hit ? "  (cache hit)" : "");
    return out;
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("[stage ") + name + "] " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("[stage ") + name + "] " + e.what());
  } catch (const IoError& e) {
    throw IoError(std::string("[stage ") + name + "] " + e.what());
  }
}

} // namespace detail

// ------------------------------------------------------------ stage functions

// build + decompose + calibrate the source to the target brightness
inline SchmidtDecomposition build_source(const ExperimentConfig& c) {
  const FrequencyGrid gs = c.signal_grid();
  const JointSpectralAmplitude jsa = build_jsa(gs, gs, c.crystal(), c.pump());
  SchmidtDecomposition d = schmidt_decompose(jsa, std::min(c.n_modes, c.grid_n));
  const double gamma = calibrate_gain(d, c.target_photons);
  return apply_gain(d, gamma);
}

inline SchmidtDecomposition source_stage(const ExperimentConfig& c, const CacheStore& cache,
                                         bool& cache_hit) {
  const std::string key = detail::hash_json(detail::source_key(c));
  const auto path = cache.path_for("source", key);
  if (cache.enabled && std::filesystem::exists(path)) {
    try {
      SchmidtDecomposition d = load_schmidt(path);
      cache_hit = true;
      return d;
    } catch (const IoError&) {
      // corrupt entry: fall through and rebuild
    }
  }
  SchmidtDecomposition d = build_source(c);
  if (cache.enabled) {
    detail::CacheLock lock(path);
    const std::filesystem::path tmp = path.string() + ".tmp";
    save_schmidt(tmp, d);
    std::filesystem::rename(tmp, path);
  }
  return d;
}

inline std::vector<TpaTrace> traces_stage(const ExperimentConfig& c, const MatterSystem& m,
                                          const SchmidtDecomposition& source,
                                          const std::vector<double>& chirps_fs2,
                                          const CacheStore& cache, int threads,
                                          bool& cache_hit) {
  const std::string key = detail::hash_json(detail::traces_key(c, m, chirps_fs2));
  const auto path = cache.path_for("traces", key);
  const DelayGrid delays = c.delay_grid();

  if (cache.enabled && std::filesystem::exists(path)) {
    try {
      auto sections = read_container(path);
      std::vector<TpaTrace> traces(chirps_fs2.size());
      const Eigen::ArrayXd norms = sections.at("normalization").to_array();
      for (std::size_t k = 0; k < chirps_fs2.size(); ++k) {
        traces[k].delays_s = sections.at("delays").to_array();
        traces[k].values = sections.at("trace_" + std::to_string(k)).to_array();
        traces[k].normalization = norms(static_cast<int>(k));
        traces[k].include_exchange = c.include_exchange;
      }
      cache_hit = true;
      return traces;
    } catch (const std::exception&) {
      // corrupt or mismatched entry: recompute
    }
  }

  std::vector<TpaTrace> traces;
  traces.reserve(chirps_fs2.size());
  for (std::size_t k = 0; k < chirps_fs2.size(); ++k) {
    TpaTraceOptions to;
    to.kappa_f_eV = c.kappa_f_eV;
    to.include_exchange = c.include_exchange;
    to.chirp_s2 = fs2_to_s2(chirps_fs2[k]);
    to.nyquist_safety = c.nyquist_safety;
    to.threads = threads;
    try {
      traces.push_back(tpa_trace(source, m, delays, to));
    } catch (const ConfigError& e) {
      throw ConfigError("chirp member " + std::to_string(k) + " (" +
                        format_delay_step(chirps_fs2[k]) + " fs^2): " + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError("chirp member " + std::to_string(k) + " (" +
                           format_delay_step(chirps_fs2[k]) + " fs^2): " + e.what());
    }
  }

  if (cache.enabled) {
    detail::CacheLock lock(path);
    std::vector<ContainerSection> sections;
    sections.push_back(ContainerSection::from_array("delays", traces.front().delays_s));
    Eigen::ArrayXd norms(static_cast<int>(traces.size()));
    for (std::size_t k = 0; k < traces.size(); ++k) {
      norms(static_cast<int>(k)) = traces[k].normalization;
      sections.push_back(
          ContainerSection::from_array("trace_" + std::to_string(k), traces[k].values));
    }
    sections.push_back(ContainerSection::from_array("normalization", norms));
    detail::write_container_atomic(path, sections);
  }
  return traces;
}

struct SpectraResult {
  std::vector<Spectrum> members;
  Spectrum mean;
};

inline SpectraResult spectra_stage(const ExperimentConfig& c,
                                   const std::vector<TpaTrace>& traces) {
  SpectraResult r;
  r.members.reserve(traces.size());
  for (const auto& t : traces) r.members.push_back(compute_spectrum(t, c.spectral_window()));
  r.mean = r.members.front();
  for (std::size_t i = 1; i < r.members.size(); ++i) r.mean.values += r.members[i].values;
  r.mean.values /= static_cast<double>(r.members.size());
  return r;
}

// full rebuild per crystal length, averaged unchirped spectra
inline Spectrum baseline_stage(const ExperimentConfig& c, const MatterSystem& m, int threads) {
  if (c.baseline_lengths_m.empty())
    throw ConfigError("baseline: config has no baseline.lengths_m");
  return crystal_length_average(c.baseline_lengths_m, [&](double length) {
    ExperimentConfig cl = c;
    cl.crystal_length_m = length;
    const SchmidtDecomposition src = build_source(cl);
    TpaTraceOptions to;
    to.kappa_f_eV = c.kappa_f_eV;
    to.include_exchange = c.include_exchange;
    to.chirp_s2 = 0.0;
    to.nyquist_safety = c.nyquist_safety;
    to.threads = threads;
    const TpaTrace t = tpa_trace(src, m, cl.delay_grid(), to);
    return compute_spectrum(t, c.spectral_window());
  });
}

// ---------------------------------------------------------------- run driver

enum class RunUntil { source, trace, spectrum, variance, identify };

struct PipelineOptions {
  std::filesystem::path out_dir = "out";
  std::string cache_dir;   // empty: $VSS_CACHE_DIR, else out_dir/cache
  int threads = 0;
  bool emit_gnuplot = false;
  bool progress = false;
  RunUntil until = RunUntil::identify;
  bool single_chirp = false;  // trace/spectrum subcommands use chirps_fs2[0] only
  bool with_baseline = false;
  bool write_manifest = false;
};

struct PipelineResult {
  ExperimentConfig config;
  std::string fingerprint;
  MatterSystem matter;
  SchmidtDecomposition source;
  std::vector<TpaTrace> traces;
  std::vector<Spectrum> spectra;
  Spectrum mean_spectrum;
  VarianceResult variance;
  Identification identification;
  bool has_baseline = false;
  Spectrum baseline_spectrum;
  std::vector<Peak> baseline_peaks;
  std::vector<StageRecord> stages;
  std::vector<std::filesystem::path> files;
};

namespace detail {

inline void emit_file(const std::filesystem::path& p, const std::string& content,
                      std::vector<std::filesystem::path>& files) {
  write_text_atomic(p, content);
  files.push_back(p);
}

inline std::string trace_csv(const TpaTrace& t) {
  Eigen::ArrayXd raw = t.values * t.normalization;
  return csv_table({"tau_s", "P_normalized", "P_raw"}, {&t.delays_s, &t.values, &raw});
}

inline std::string spectra_csv(const SpectraResult& s) {
  std::vector<std::string> header = {"energy_eV", "mean"};
  std::vector<const Eigen::ArrayXd*> cols = {&s.mean.energies_eV, &s.mean.values};
  for (std::size_t i = 0; i < s.members.size(); ++i) {
    header.push_back("member_" + std::to_string(i));
    cols.push_back(&s.members[i].values);
  }
  return csv_table(header, cols);
}

inline json peaks_json(const std::vector<Peak>& peaks) {
  json arr = json::array();
  for (const auto& p : peaks)
    arr.push_back({{"energy_eV", p.energy_eV},
                   {"value", p.value},
                   {"bin", p.bin},
                   {"prominence", p.prominence}});
  return arr;
}

} // namespace detail

inline PipelineResult run_pipeline(const ExperimentConfig& config, const PipelineOptions& opt) {
  config.validate();
  PipelineResult r;
  r.config = config;
  r.fingerprint = config_fingerprint(config);
  r.matter = resolve_matter(config);

  // fail fast if the delay grid cannot resolve the fastest beat
  {
    const double dt_req = required_delay_step(r.matter, config.nyquist_safety);
    const DelayGrid delays = config.delay_grid();
    if (dt_req > 0 && !(delays.step < dt_req))
      throw ConfigError("[stage traces] delay step " + format_delay_step(delays.step) +
                        " s undersamples the fastest level beat; required delay step below " +
                        format_delay_step(dt_req) + " s");
  }

  std::filesystem::create_directories(opt.out_dir);
  const CacheStore cache = CacheStore::resolve(opt.cache_dir, opt.out_dir);

  r.source = detail::run_stage<SchmidtDecomposition>(
      "source", r.stages, opt.progress,
      [&](bool& hit) { return source_stage(config, cache, hit); });

  std::vector<double> chirps = config.chirps_fs2;
  if (opt.single_chirp) chirps.resize(1);

  if (opt.until >= RunUntil::trace) {
    r.traces = detail::run_stage<std::vector<TpaTrace>>(
        "traces", r.stages, opt.progress, [&](bool& hit) {
          return traces_stage(config, r.matter, r.source, chirps, cache, opt.threads, hit);
        });
  }

  SpectraResult spectra;
  if (opt.until >= RunUntil::spectrum) {
    spectra = detail::run_stage<SpectraResult>(
        "spectra", r.stages, opt.progress,
        [&](bool&) { return spectra_stage(config, r.traces); });
    r.spectra = spectra.members;
    r.mean_spectrum = spectra.mean;
  }

  if (opt.until >= RunUntil::variance) {
    if (chirps.size() < 2)
      throw ConfigError("[stage variance] need at least 2 chirp values for the ensemble");
    r.variance = detail::run_stage<VarianceResult>(
        "variance", r.stages, opt.progress, [&](bool&) {
          ChirpEnsemble e;
          e.chirps_s2 = config.chirps_s2();
          e.traces = r.traces;
          e.spectra = r.spectra;
          e.mean_spectrum = r.mean_spectrum;
          return relative_variance(e, config.peaks);
        });
  }

  if (opt.until >= RunUntil::identify) {
    r.identification = detail::run_stage<Identification>(
        "identify", r.stages, opt.progress, [&](bool&) {
          return identify_levels(r.variance, r.matter.epsilon_f, r.matter.epsilon_g,
                                 config.n_levels);
        });
  }

  if (opt.with_baseline) {
    r.baseline_spectrum = detail::run_stage<Spectrum>(
        "baseline", r.stages, opt.progress,
        [&](bool&) { return baseline_stage(config, r.matter, opt.threads); });
    r.baseline_peaks = detect_peaks(r.baseline_spectrum, config.peaks);
    r.has_baseline = true;
  }

  // ------------------------------------------------------------- outputs
  try {
    detail::emit_file(opt.out_dir / "config.json", config_to_json(config).dump(2) + "\n",
                      r.files);

    if (!r.traces.empty()) {
      detail::emit_file(opt.out_dir / "trace.csv", detail::trace_csv(r.traces.front()),
                        r.files);
      json sj;
      sj["schema_version"] = kConfigSchemaVersion;
      sj["fingerprint"] = r.fingerprint;
      sj["chirp_fs2"] = chirps.front();
      sj["include_exchange"] = config.include_exchange;
      sj["kappa_f_eV"] = config.kappa_f_eV;
      sj["normalization"] = r.traces.front().normalization;
      sj["n_delays"] = config.n_delays;
      sj["tau_min_ps"] = config.tau_min_ps;
      sj["tau_max_ps"] = config.tau_max_ps;
      detail::emit_file(opt.out_dir / "trace.json", sj.dump(2) + "\n", r.files);
    }

    if (opt.until >= RunUntil::spectrum && !r.spectra.empty()) {
      if (opt.single_chirp) {
        detail::emit_file(
            opt.out_dir / "spectrum.csv",
            csv_table({"energy_eV", "value"},
                      {&r.mean_spectrum.energies_eV, &r.mean_spectrum.values}),
            r.files);
      } else {
        detail::emit_file(opt.out_dir / "spectra.csv", detail::spectra_csv(spectra), r.files);
      }
    }

    if (opt.until >= RunUntil::variance) {
      json vj;
      vj["schema_version"] = kConfigSchemaVersion;
      vj["fingerprint"] = r.fingerprint;
      vj["window"] = config.window;
      vj["ensemble_size"] = chirps.size();
      vj["peaks"] = json::array();
      for (const auto& p : r.variance.peaks)
        vj["peaks"].push_back({{"energy_eV", p.energy_eV},
                               {"bin", p.bin},
                               {"mean_value", p.mean_value},
                               {"relative_variance", p.relative_variance},
                               {"sample_count", p.sample_count}});
      vj["warnings"] = r.variance.warnings;
      detail::emit_file(opt.out_dir / "variance.json", vj.dump(2) + "\n", r.files);
    }

    if (opt.until >= RunUntil::identify) {
      json lj;
      lj["schema_version"] = kConfigSchemaVersion;
      lj["fingerprint"] = r.fingerprint;
      lj["epsilon_f_eV"] = r.matter.epsilon_f;
      lj["epsilon_g_eV"] = r.matter.epsilon_g;
      lj["n_levels_requested"] = config.n_levels;
      lj["branches"] = json::array();
      for (const auto& b : r.identification.branches)
        lj["branches"].push_back({{"beat_energy_eV", b.beat_energy_eV},
                                  {"relative_variance", b.relative_variance},
                                  {"upper_eV", b.upper_eV},
                                  {"lower_eV", b.lower_eV},
                                  {"degenerate", b.degenerate}});
      lj["warnings"] = r.identification.warnings;
      detail::emit_file(opt.out_dir / "levels.json", lj.dump(2) + "\n", r.files);
    }

    if (r.has_baseline) {
      detail::emit_file(opt.out_dir / "baseline_spectrum.csv",
                        csv_table({"energy_eV", "value"},
                                  {&r.baseline_spectrum.energies_eV,
                                   &r.baseline_spectrum.values}),
                        r.files);
      json bj;
      bj["schema_version"] = kConfigSchemaVersion;
      bj["fingerprint"] = r.fingerprint;
      bj["lengths_m"] = config.baseline_lengths_m;
      bj["peaks"] = detail::peaks_json(r.baseline_peaks);
      detail::emit_file(opt.out_dir / "baseline_peaks.json", bj.dump(2) + "\n", r.files);
    }

    if (opt.emit_gnuplot) {
      std::string gp;
      gp += "set datafile separator comma\n";
      gp += "set terminal pngcairo size 1200,800\n";
      gp += "set output 'trace.png'\n";
      gp += "set xlabel 'delay (s)'\nset ylabel 'normalized TPA probability'\n";
      gp += "plot 'trace.csv' using 1:2 skip 1 with lines title 'trace'\n";
      if (opt.until >= RunUntil::spectrum) {
        gp += "set output 'spectrum.png'\n";
        gp += "set xlabel 'beat energy (eV)'\nset ylabel 'magnitude'\nset logscale y\n";
        const char* src = opt.single_chirp ? "spectrum.csv" : "spectra.csv";
        gp += std::string("plot '") + src + "' using 1:2 skip 1 with lines title 'spectrum'\n";
      }
      detail::emit_file(opt.out_dir / "plot.gp", gp, r.files);
    }

    if (opt.write_manifest) {
      json mj;
      mj["schema_version"] = kConfigSchemaVersion;
      mj["tool_version"] = std::string(version_string);
      mj["fingerprint"] = r.fingerprint;
      mj["stages"] = json::array();
      for (const auto& s : r.stages)
        mj["stages"].push_back(
            {{"name", s.name}, {"wall_ms", s.wall_ms}, {"cache_hit", s.cache_hit}});
      mj["files"] = json::array();
      std::vector<std::filesystem::path> sorted = r.files;
      std::sort(sorted.begin(), sorted.end());
      for (const auto& f : sorted)
        mj["files"].push_back({{"name", f.filename().string()},
                               {"bytes", std::filesystem::file_size(f)},
                               {"fnv1a", hash_hex(hash_file(f))}});
      detail::emit_file(opt.out_dir / "manifest.json", mj.dump(2) + "\n", r.files);
    }
  } catch (const std::exception& e) {
    // remove partial outputs so a failed run leaves no half-written files
    for (const auto& f : r.files) {
      std::error_code ec;
      std::filesystem::remove(f, ec);
    }
    throw IoError(std::string("[stage outputs] ") + e.what());
  }

  return r;
}

} // namespace vss
