#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <vss/errors.hpp>
#include <vss/spectrum.hpp>
#include <vss/tpa.hpp>

namespace vss {

struct ChirpEnsembleOptions {
  TpaTraceOptions trace;
  SpectralWindow window = SpectralWindow::hann;
};

// delay traces and beat spectra for one matter system under a set of chirps
struct ChirpEnsemble {
  std::vector<double> chirps_s2;
  std::vector<TpaTrace> traces;
  std::vector<Spectrum> spectra;
  Spectrum mean_spectrum;
};

inline ChirpEnsemble chirp_ensemble(const SchmidtDecomposition& gained,
                                    const MatterSystem& matter, const DelayGrid& delays,
                                    const std::vector<double>& chirps_s2,
                                    const ChirpEnsembleOptions& opt) {
  if (chirps_s2.size() < 2)
    throw ConfigError("ensemble: need at least 2 chirp values (variance over a single "
                      "member is meaningless)");
  if (std::set<double>(chirps_s2.begin(), chirps_s2.end()).size() < 2)
    throw ConfigError("ensemble: chirp values must not all coincide");

  ChirpEnsemble e;
  e.chirps_s2 = chirps_s2;
  e.traces.reserve(chirps_s2.size());
  e.spectra.reserve(chirps_s2.size());
  for (std::size_t i = 0; i < chirps_s2.size(); ++i) {
    TpaTraceOptions to = opt.trace;
    to.chirp_s2 = chirps_s2[i];
    const std::string where =
        "ensemble member " + std::to_string(i) + " (chirp " +
        format_delay_step(chirps_s2[i]) + " s^2): ";
    try {
      e.traces.push_back(tpa_trace(gained, matter, delays, to));
      e.spectra.push_back(compute_spectrum(e.traces.back(), opt.window));
    } catch (const ConfigError& err) {
      throw ConfigError(where + err.what());
    } catch (const NumericalError& err) {
      throw NumericalError(where + err.what());
    }
  }

  e.mean_spectrum = e.spectra.front();
  for (std::size_t i = 1; i < e.spectra.size(); ++i)
    e.mean_spectrum.values += e.spectra[i].values;
  e.mean_spectrum.values /= static_cast<double>(e.spectra.size());
  return e;
}

struct VariancePeak {
  double energy_eV = 0.0;
  int bin = 0;
  double mean_value = 0.0;        // ensemble mean of the member peak values
  double relative_variance = 0.0; // population variance / mean^2
  int sample_count = 0;           // always the full ensemble size for reported peaks
};

struct VarianceResult {
  std::vector<VariancePeak> peaks; // sorted by energy
  std::vector<std::string> warnings;
};

// Chirp-ensemble relative variance of each beat peak. Peaks are located on
// the ensemble-mean spectrum; each member contributes its local maximum
// within one bin of that location, so small chirp-induced shifts do not
// register as amplitude noise. Peaks absent from any member are excluded.
inline VarianceResult relative_variance(const ChirpEnsemble& e,
                                        const PeakOptions& popt = {}) {
  VarianceResult out;
  const auto peaks = detect_peaks(e.mean_spectrum, popt);
  const int nmem = static_cast<int>(e.spectra.size());
  const int nbin = static_cast<int>(e.mean_spectrum.values.size());
  for (const auto& p : peaks) {
    std::vector<double> vals(nmem);
    bool missing = false;
    for (int i = 0; i < nmem; ++i) {
      double v = 0.0;
      for (int b = std::max(0, p.bin - 1); b <= std::min(nbin - 1, p.bin + 1); ++b)
        v = std::max(v, e.spectra[i].values(b));
      if (v < 1e-6 * p.value) {
        out.warnings.push_back("peak at " + std::to_string(p.energy_eV) +
                               " eV is absent from ensemble member " + std::to_string(i) +
                               "; peak excluded from the variance ranking");
        missing = true;
        break;
      }
      vals[i] = v;
    }
    if (missing) continue;
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= nmem;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= nmem;
    VariancePeak vp;
    vp.energy_eV = p.energy_eV;
    vp.bin = p.bin;
    vp.mean_value = mean;
    vp.relative_variance = var / (mean * mean);
    vp.sample_count = nmem;
    out.peaks.push_back(vp);
  }
  return out;
}

struct LevelBranch {
  double beat_energy_eV = 0.0;
  double relative_variance = 0.0;
  double upper_eV = 0.0; // (eps_f + eps_g + beat) / 2
  double lower_eV = 0.0; // (eps_f + eps_g - beat) / 2
  bool degenerate = false; // beat ~ 0: both branches collapse to the midpoint
};

struct Identification {
  std::vector<LevelBranch> branches; // sorted by relative variance, most stable first
  std::vector<std::string> warnings;
};

// The chirp-stable beats (smallest relative variance) are level self-beats
// |2 eps - eps_f - eps_g|; each admits an upper and a lower level assignment.
inline Identification identify_levels(const VarianceResult& vr, double eps_f,
                                      double eps_g, int n_levels) {
  if (n_levels < 1) throw ConfigError("identify: n_levels must be >= 1");
  Identification id;
  id.warnings = vr.warnings;
  std::vector<VariancePeak> ranked = vr.peaks;
  std::sort(ranked.begin(), ranked.end(), [](const VariancePeak& a, const VariancePeak& b) {
    if (a.relative_variance != b.relative_variance)
      return a.relative_variance < b.relative_variance;
    return a.energy_eV < b.energy_eV;
  });
  if (static_cast<int>(ranked.size()) < n_levels) {
    id.warnings.push_back("requested " + std::to_string(n_levels) +
                          " levels but only " + std::to_string(ranked.size()) +
                          " stable peaks were found; reporting what is available");
  }
  const int take = std::min<int>(n_levels, static_cast<int>(ranked.size()));
  for (int k = 0; k < take; ++k) {
    LevelBranch b;
    b.beat_energy_eV = ranked[k].energy_eV;
    b.relative_variance = ranked[k].relative_variance;
    const double mid = 0.5 * (eps_f + eps_g);
    if (ranked[k].energy_eV < 1e-15) {
      b.degenerate = true;
      b.upper_eV = b.lower_eV = mid;
    } else {
      b.upper_eV = mid + 0.5 * ranked[k].energy_eV;
      b.lower_eV = mid - 0.5 * ranked[k].energy_eV;
    }
    id.branches.push_back(b);
  }
  return id;
}

// Pointwise average of the beat spectra produced per crystal length; the
// builder supplies the spectrum for one length (rebuilding the source so the
// brightness stays calibrated).
template <typename Builder>
Spectrum crystal_length_average(const std::vector<double>& lengths_m, Builder&& build) {
  if (lengths_m.empty())
    throw ConfigError("length average: need at least one crystal length");
  for (double l : lengths_m)
    if (!(l > 0)) throw ConfigError("length average: crystal lengths must be positive");
  Spectrum acc = build(lengths_m[0]);
  for (std::size_t i = 1; i < lengths_m.size(); ++i) {
    Spectrum s = build(lengths_m[i]);
    if (s.values.size() != acc.values.size() ||
        (s.energies_eV - acc.energies_eV).abs().maxCoeff() >
            1e-9 * std::max(1.0, acc.energies_eV.abs().maxCoeff()))
      throw NumericalError("length average: member spectra disagree on the energy axis");
    acc.values += s.values;
  }
  acc.values /= static_cast<double>(lengths_m.size());
  return acc;
}

} // namespace vss
