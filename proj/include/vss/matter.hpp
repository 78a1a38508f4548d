#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <vss/errors.hpp>
#include <vss/units.hpp>

namespace vss {

// one intermediate level of the two-photon ladder
struct Level {
  double energy_eV = 0.0;    // \tilde{eps}_j, absolute
  double linewidth_eV = 1e-4; // kappa_j > 0, regularizes the resonant denominators
  double dipole = 1.0;        // mu_fj mu_jg / hbar^2 in model units
};

// absorbing medium: ground/final energies plus intermediate levels
struct MatterSystem {
  double epsilon_g = 0.0; // eV
  double epsilon_f = 0.0; // eV, relative ordering eps_g < levels < eps_f
  std::vector<Level> levels;

  void validate() const {
    if (levels.empty()) throw ConfigError("matter: at least one intermediate level required");
    if (!(epsilon_f > epsilon_g)) throw ConfigError("matter: epsilon_f must exceed epsilon_g");
    for (const auto& l : levels) {
      if (!(l.energy_eV > epsilon_g) || !(l.energy_eV < epsilon_f))
        throw ConfigError("matter: level " + std::to_string(l.energy_eV) +
                          " eV outside the two-photon ladder (eps_g, eps_f)");
      if (!(l.linewidth_eV > 0))
        throw ConfigError("matter: level linewidths must be positive");
    }
  }
};

// Frequency-domain two-photon transition kernel: both absorption orderings,
//   T(wa, wb) = sum_j d_j [ 1/(e_j - e_g - hbar wa - i k_j)
//                         + 1/(e_j - e_g - hbar wb - i k_j) ].
// Symmetric in (wa, wb); finite because every k_j > 0.
inline std::complex<double> transition_kernel(double omega_a, double omega_b,
                                              const MatterSystem& m) {
  using cd = std::complex<double>;
  const double ea = hbar_eV_s * omega_a;
  const double eb = hbar_eV_s * omega_b;
  cd acc(0.0, 0.0);
  for (const auto& l : m.levels) {
    const double de = l.energy_eV - m.epsilon_g;
    acc += l.dipole * (1.0 / cd(de - ea, -l.linewidth_eV) + 1.0 / cd(de - eb, -l.linewidth_eV));
  }
  return acc;
}

// largest beat energy present in a delay trace: |e_j + e_k - e_f - e_g| over
// level pairs including j = k; drives the delay-grid sampling guard
inline double max_beat_energy(const MatterSystem& m) {
  double best = 0.0;
  for (const auto& a : m.levels)
    for (const auto& b : m.levels)
      best = std::max(best, std::abs(a.energy_eV + b.energy_eV - m.epsilon_f - m.epsilon_g));
  return best;
}

} // namespace vss
