#pragma once

#include <numbers>

// physical constants (CODATA 2018 exact values) and unit helpers
namespace vss {

inline constexpr double pi = std::numbers::pi;

inline constexpr double hbar_J_s = 1.054571817e-34;     // reduced Planck constant
inline constexpr double eV_in_J = 1.602176634e-19;      // one electron volt in joule
inline constexpr double hbar_eV_s = hbar_J_s / eV_in_J; // ~6.582119569e-16 eV s
inline constexpr double c_m_s = 299792458.0;            // vacuum speed of light

// config files carry explicit units in key names; convert at the boundary
constexpr double ps_to_s(double ps) { return ps * 1e-12; }
constexpr double fs2_to_s2(double fs2) { return fs2 * 1e-30; }
constexpr double mm_to_m(double mm) { return mm * 1e-3; }
constexpr double um_to_m(double um) { return um * 1e-6; }
constexpr double ps_per_m_to_s_per_m(double v) { return v * 1e-12; }

// angular frequency (rad/s) <-> photon energy (eV)
constexpr double omega_to_eV(double omega) { return hbar_eV_s * omega; }
constexpr double eV_to_omega(double e) { return e / hbar_eV_s; }

// wavelength (m) <-> angular frequency (rad/s)
constexpr double lambda_to_omega(double lambda_m) { return 2.0 * pi * c_m_s / lambda_m; }
constexpr double omega_to_lambda(double omega) { return 2.0 * pi * c_m_s / omega; }

inline constexpr char version_string[] = "1.0.0";

} // namespace vss
