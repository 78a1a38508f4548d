#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <vss/errors.hpp>
#include <vss/tpa.hpp>
#include <vss/units.hpp>

namespace vss {

enum class SpectralWindow { hann, none };

inline SpectralWindow spectral_window_from_string(const std::string& s) {
  if (s == "hann") return SpectralWindow::hann;
  if (s == "none") return SpectralWindow::none;
  throw ConfigError("spectrum: unknown window '" + s + "' (expected 'hann' or 'none')");
}

// one-sided beat-energy magnitude spectrum of a delay trace
struct Spectrum {
  Eigen::ArrayXd energies_eV; // k-th bin at hbar 2 pi k / (M dtau)
  Eigen::ArrayXd values;      // |DFT| of the mean-subtracted, windowed trace
  double bin_eV = 0.0;
  SpectralWindow window = SpectralWindow::hann;
};

// Beat spectrum of the raw (unnormalized) delay trace. The mean is removed so
// the dc bin does not dwarf the beats, then the window tapers the ends.
inline Spectrum compute_spectrum(const TpaTrace& trace,
                                 SpectralWindow window = SpectralWindow::hann) {
  const int m = static_cast<int>(trace.values.size());
  if (m < 4) throw ConfigError("spectrum: need at least 4 trace points");
  const double dtau = trace.delays_s(1) - trace.delays_s(0);
  if (!(dtau > 0)) throw ConfigError("spectrum: delays must increase");
  for (int k = 1; k + 1 < m; ++k) {
    const double step = trace.delays_s(k + 1) - trace.delays_s(k);
    if (std::abs(step - dtau) > 1e-9 * dtau)
      throw ConfigError("spectrum: delay grid must be uniform");
  }

  Eigen::ArrayXd x = trace.values * trace.normalization;
  x -= x.mean();
  if (window == SpectralWindow::hann) {
    for (int k = 0; k < m; ++k)
      x(k) *= 0.5 * (1.0 - std::cos(2.0 * pi * k / (m - 1)));
  }

  Spectrum s;
  s.window = window;
  s.bin_eV = hbar_eV_s * 2.0 * pi / (m * dtau);
  const int nk = m / 2 + 1;
  s.energies_eV.resize(nk);
  s.values.resize(nk);
  for (int k = 0; k < nk; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (int j = 0; j < m; ++j)
      acc += x(j) * std::polar(1.0, -2.0 * pi * double(k) * double(j) / double(m));
    s.energies_eV(k) = s.bin_eV * k;
    s.values(k) = std::abs(acc);
  }
  return s;
}

struct Peak {
  double energy_eV = 0.0;
  double value = 0.0;
  int bin = 0;
  double prominence = 0.0;
};

struct PeakOptions {
  double dc_cutoff_eV = 0.01;      // ignore bins below this energy
  double prominence_rel = 1e-3;    // relative to the tallest in-band value
  double min_separation_eV = 0.002;
};

// Strict local maxima above the dc cutoff, filtered by topographic prominence
// and thinned so no two survivors sit closer than min_separation (the taller
// one wins; on ties the lower energy).
inline std::vector<Peak> detect_peaks(const Spectrum& s, const PeakOptions& opt = {}) {
  const int n = static_cast<int>(s.values.size());
  std::vector<Peak> cands;
  double band_max = 0.0;
  for (int k = 0; k < n; ++k)
    if (s.energies_eV(k) >= opt.dc_cutoff_eV) band_max = std::max(band_max, s.values(k));
  if (!(band_max > 0)) return {};

  for (int k = 1; k + 1 < n; ++k) {
    if (s.energies_eV(k) < opt.dc_cutoff_eV) continue;
    const double v = s.values(k);
    if (!(v > s.values(k - 1)) || !(v > s.values(k + 1))) continue;
    // topographic prominence: deepest saddle separating this peak from higher ground
    double lo_l = v, lo_r = v;
    for (int j = k - 1; j >= 0; --j) {
      if (s.values(j) > v) break;
      lo_l = std::min(lo_l, s.values(j));
    }
    for (int j = k + 1; j < n; ++j) {
      if (s.values(j) > v) break;
      lo_r = std::min(lo_r, s.values(j));
    }
    const double prom = v - std::max(lo_l, lo_r);
    if (prom < opt.prominence_rel * band_max) continue;
    Peak p;
    p.energy_eV = s.energies_eV(k);
    p.value = v;
    p.bin = k;
    p.prominence = prom;
    cands.push_back(p);
  }

  std::sort(cands.begin(), cands.end(), [](const Peak& a, const Peak& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.energy_eV < b.energy_eV;
  });
  std::vector<Peak> kept;
  for (const auto& c : cands) {
    bool blocked = false;
    for (const auto& k : kept)
      if (std::abs(k.energy_eV - c.energy_eV) < opt.min_separation_eV) blocked = true;
    if (!blocked) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end(),
            [](const Peak& a, const Peak& b) { return a.energy_eV < b.energy_eV; });
  return kept;
}

} // namespace vss
