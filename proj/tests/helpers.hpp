#pragma once

// Shared fixtures: the benchmark crystal/pump/absorber used across tests and
// synthetic Schmidt decompositions with seeded complex mode functions.

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include <vss/crystal.hpp>
#include <vss/grid.hpp>
#include <vss/jsa.hpp>
#include <vss/matter.hpp>
#include <vss/schmidt.hpp>
#include <vss/units.hpp>

namespace testutil {

inline double pump_center_omega() { return vss::eV_to_omega(3.0996); }

inline vss::CrystalParams bench_crystal(double length_m = 0.005) {
  return vss::CrystalParams::degenerate(length_m, 5.4e-12, 5.2e-12, 5.6e-12,
                                        pump_center_omega());
}

inline vss::PumpParams bench_pump(double tau_p_s = 1e-12) {
  return vss::PumpParams{tau_p_s, pump_center_omega()};
}

inline vss::FrequencyGrid bench_grid(int n, double half_span = 1.25e14) {
  return vss::FrequencyGrid::centered(0.5 * pump_center_omega(), half_span, n);
}

inline vss::MatterSystem bench_matter() {
  vss::MatterSystem m;
  m.epsilon_g = 0.0;
  m.epsilon_f = 3.0996;
  m.levels = {{1.586, 2e-4, 1.0}, {1.604, 2e-4, 1.0}, {1.619, 2e-4, 1.0}};
  return m;
}

// seeded uniform double in [0, 1)
inline double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// random complex columns orthonormalized under <f,h> = sum_x w(x) f(x) conj(h(x))
inline Eigen::MatrixXcd random_modes(const vss::FrequencyGrid& g, int n_modes,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = g.n();
  Eigen::MatrixXcd m(n, n_modes);
  for (int c = 0; c < n_modes; ++c)
    for (int r = 0; r < n; ++r)
      m(r, c) = std::complex<double>(2.0 * unit_double(rng) - 1.0,
                                     2.0 * unit_double(rng) - 1.0);
  auto inner = [&g](const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    std::complex<double> s(0.0, 0.0);
    for (Eigen::Index x = 0; x < a.size(); ++x) s += g.weights(x) * a(x) * std::conj(b(x));
    return s;
  };
  for (int c = 0; c < n_modes; ++c) {
    for (int rep = 0; rep < 2; ++rep)
      for (int p = 0; p < c; ++p) m.col(c) -= inner(m.col(c), m.col(p)) * m.col(p);
    m.col(c) /= std::sqrt(inner(m.col(c), m.col(c)).real());
  }
  return m;
}

// synthetic decomposition with prescribed (normalized) singular values
inline vss::SchmidtDecomposition synth_decomp(const vss::FrequencyGrid& gs,
                                              const vss::FrequencyGrid& gi,
                                              std::vector<double> lambdas,
                                              std::uint64_t seed) {
  vss::SchmidtDecomposition d;
  d.grid_s = gs;
  d.grid_i = gi;
  const int k = static_cast<int>(lambdas.size());
  d.lambdas = Eigen::Map<Eigen::ArrayXd>(lambdas.data(), k);
  d.lambdas /= std::sqrt(d.lambdas.square().sum());
  d.modes_s = random_modes(gs, k, seed);
  d.modes_i = random_modes(gi, k, seed + 101);
  d.truncation_residual = 0.0;
  return d;
}

} // namespace testutil
