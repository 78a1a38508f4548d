#pragma once

#include <cmath>
#include <string>

#include <vss/errors.hpp>
#include <vss/units.hpp>

namespace vss {

// Nonlinear crystal with linearized dispersion about exact degenerate phase
// matching: k_j(omega) = k_j(omega_j0) + G_j (omega - omega_j0).
struct CrystalParams {
  double length_m = 0.0;
  double G_p = 0.0, G_s = 0.0, G_i = 0.0; // inverse group velocities, s/m
  double omega_p0 = 0.0, omega_s0 = 0.0, omega_i0 = 0.0; // central frequencies, rad/s
  double dispersion_window = 0.5; // validity guard, fraction of central frequency

  double lambda_p() const { return omega_to_lambda(omega_p0); }
  double lambda_s() const { return omega_to_lambda(omega_s0); }
  double lambda_i() const { return omega_to_lambda(omega_i0); }

  void validate() const {
    if (!(length_m > 0)) throw ConfigError("crystal: length must be positive");
    if (!(G_p > 0) || !(G_s > 0) || !(G_i > 0))
      throw ConfigError("crystal: inverse group velocities must be positive");
    if (!(omega_p0 > 0) || !(omega_s0 > 0) || !(omega_i0 > 0))
      throw ConfigError("crystal: central frequencies must be positive");
    // energy conservation at the centrals, equivalently 1/lambda_p = 1/lambda_s + 1/lambda_i
    if (std::abs(omega_s0 + omega_i0 - omega_p0) > 1e-9 * omega_p0)
      throw ConfigError("crystal: central frequencies violate energy conservation "
                        "(1/lambda_p != 1/lambda_s + 1/lambda_i)");
  }

  static CrystalParams degenerate(double length_m, double Gp_s_per_m, double Gs_s_per_m,
                                  double Gi_s_per_m, double omega_p0) {
    CrystalParams c;
    c.length_m = length_m;
    c.G_p = Gp_s_per_m;
    c.G_s = Gs_s_per_m;
    c.G_i = Gi_s_per_m;
    c.omega_p0 = omega_p0;
    c.omega_s0 = 0.5 * omega_p0;
    c.omega_i0 = 0.5 * omega_p0;
    c.validate();
    return c;
  }
};

// Gaussian pump pulse exp[-(tau_p^2/4)(omega_s+omega_i-omega_p0)^2]
struct PumpParams {
  double tau_p = 0.0;    // seconds
  double omega_p0 = 0.0; // rad/s

  void validate() const {
    if (!(tau_p > 0)) throw ConfigError("pump: tau_p must be positive");
    if (!(omega_p0 > 0)) throw ConfigError("pump: central frequency must be positive");
  }
};

// longitudinal wave-vector mismatch of the down-conversion process
inline double phase_mismatch(double omega_s, double omega_i, const CrystalParams& c) {
  const double w = c.dispersion_window;
  if (std::abs(omega_s - c.omega_s0) > w * c.omega_s0 ||
      std::abs(omega_i - c.omega_i0) > w * c.omega_i0)
    throw ConfigError("phase_mismatch: frequency outside the dispersion validity window (" +
                      std::to_string(w * 100) + "% of central); linearized model not applicable");
  return c.G_p * (omega_s + omega_i - c.omega_p0) - c.G_s * (omega_s - c.omega_s0) -
         c.G_i * (omega_i - c.omega_i0);
}

} // namespace vss
