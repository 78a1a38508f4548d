#pragma once

#include <complex>

#include <Eigen/Dense>

#include <vss/schmidt.hpp>

namespace vss {

// Signal-arm manipulation: delay tau plus quadratic spectral phase (chirp)
// xi_s about omega_c. Applied as pointwise spectral phases, so populations and
// singular values are untouched.
struct BeamTransform {
  double tau = 0.0;     // seconds, delay on the signal beam
  double xi_s = 0.0;    // s^2, quadratic chirp coefficient
  double omega_c = 0.0; // rad/s, chirp expansion center

  bool is_identity() const { return tau == 0.0 && xi_s == 0.0; }
};

// multiply signal mode functions by exp[i xi_s (w - w_c)^2] * exp[i w tau];
// idler modes, singular values and gain coefficients are unchanged
inline SchmidtDecomposition transform_modes(const SchmidtDecomposition& decomp,
                                            const BeamTransform& xf) {
  decomp.require_gain("transform_modes");
  SchmidtDecomposition d = decomp;
  const int ns = d.grid_s.n();
  Eigen::VectorXcd phase(ns);
  for (int i = 0; i < ns; ++i) {
    const double w = d.grid_s.values(i);
    const double dw = w - xf.omega_c;
    phase(i) = std::exp(std::complex<double>(0.0, xf.xi_s * dw * dw + w * xf.tau));
  }
  for (int i = 0; i < ns; ++i) d.modes_s.row(i) *= phase(i);
  return d;
}

} // namespace vss
