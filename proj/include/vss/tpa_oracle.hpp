#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include <vss/errors.hpp>
#include <vss/matter.hpp>
#include <vss/moments.hpp>
#include <vss/units.hpp>

namespace vss {

// Master time grid for the brute-force time-domain evaluation. Deliberately
// small: this path is a cross-check, not a production solver.
struct OracleTimeGrid {
  double t_lo = 0.0;       // first master node (s)
  double dt = 0.0;         // node spacing (s)
  int n = 0;               // number of master nodes, capped at 64
  double t2_abs_max = 0.0; // outer integral restricted to |t2| <= this
  double tail_cut = 1e-9;  // truncate the level-decay tail at this weight

  void validate() const {
    if (n < 4) throw ConfigError("oracle: need at least 4 time nodes");
    if (n > 64)
      throw ConfigError("oracle: time grid limited to 64 nodes; use the spectral path "
                        "for production-size problems");
    if (!(dt > 0)) throw ConfigError("oracle: dt must be positive");
    if (!(t2_abs_max > 0)) throw ConfigError("oracle: t2_abs_max must be positive");
    if (!(tail_cut > 0) || !(tail_cut < 1e-3))
      throw ConfigError("oracle: tail_cut must lie in (0, 1e-3)");
  }
};

struct OracleOptions {
  double kappa_f_eV = 0.0;
  bool include_exchange = true;
  double carrier_omega = 0.0; // 0 selects the mean of the two grid centers
};

namespace detail {

// exact integral of exp(-s u) against piecewise-linear interpolation on
// [0, Q dt]: node weights built from I0 = int exp(z v) dv and
// I1 = int v exp(z v) dv over one segment, z = -s
inline void segment_moments(std::complex<double> z, double dt, std::complex<double>& i0,
                            std::complex<double>& i1) {
  const std::complex<double> h = z * dt;
  if (std::abs(h) < 1e-2) {
    // series in h to avoid cancellation; truncation ~ |h|^5
    i0 = dt * (1.0 + h * (0.5 + h * (1.0 / 6.0 + h * (1.0 / 24.0 + h / 120.0))));
    i1 = dt * dt *
         (0.5 + h * (1.0 / 3.0 + h * (0.125 + h * (1.0 / 30.0 + h / 144.0))));
  } else {
    const std::complex<double> e = std::exp(h);
    i0 = (e - 1.0) / z;
    i1 = (dt * e - i0) / z;
  }
}

// weights w(q) such that int_0^{Q dt} exp(-s u) f(u) du ~ sum_q w(q) f(q dt)
inline std::vector<std::complex<double>> decay_weights(std::complex<double> s, double dt,
                                                       int q_depth) {
  using cd = std::complex<double>;
  if (q_depth <= 0) return {1.0 / s}; // constant extrapolation of f
  cd i0, i1;
  segment_moments(-s, dt, i0, i1);
  const cd c_r = i1 / dt;
  const cd c_l = i0 - c_r;
  std::vector<cd> w(q_depth + 1, cd(0.0, 0.0));
  for (int q = 0; q < q_depth; ++q) {
    const cd seg = std::exp(-s * (q * dt));
    w[q] += seg * c_l;
    w[q + 1] += seg * c_r;
  }
  return w;
}

} // namespace detail

// Brute-force two-photon excitation probability evaluated in the time domain:
// the final-state window becomes a Gaussian gate g(t2), each intermediate
// level contributes an exponential memory kernel integrated against the field
// correlations, and the optical carrier is removed analytically so the node
// spacing only has to resolve the spectral envelope. Independent of the
// spectral fast path in both discretization and ordering of operations.
inline double tpa_probability_oracle(const MomentSet& m, const MatterSystem& matter,
                                     const OracleTimeGrid& tg, const OracleOptions& opt) {
  using cd = std::complex<double>;
  matter.validate();
  tg.validate();
  if (!(opt.kappa_f_eV > 0)) throw ConfigError("oracle: kappa_f must be positive");

  const int n = tg.n;
  const double dt = tg.dt;
  const double w0 = (opt.carrier_omega > 0)
                        ? opt.carrier_omega
                        : 0.5 * (m.grid_s.center + m.grid_i.center);

  Eigen::ArrayXd tm(n);
  for (int k = 0; k < n; ++k) tm(k) = tg.t_lo + k * dt;

  // carrier-removed field synthesis matrices over (master node, grid node)
  const int ns = m.grid_s.n(), ni = m.grid_i.n();
  Eigen::MatrixXcd as(n, ns), ai(n, ni);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < ns; ++i) {
      const double w = m.grid_s.values(i);
      as(k, i) = m.grid_s.weights(i) * std::sqrt(w) * std::exp(cd(0.0, -(w - w0) * tm(k)));
    }
    for (int j = 0; j < ni; ++j) {
      const double w = m.grid_i.values(j);
      ai(k, j) = m.grid_i.weights(j) * std::sqrt(w) * std::exp(cd(0.0, -(w - w0) * tm(k)));
    }
  }

  // slow pair and autocorrelation kernels on master-node pairs
  const Eigen::MatrixXcd fker =
      as * m.psi * ai.transpose() + ai * m.psi.transpose() * as.transpose();
  const Eigen::MatrixXcd kker =
      as * m.occ_s.transpose() * as.adjoint() + ai * m.occ_i.transpose() * ai.adjoint();

  // per-level memory-kernel weights; depth bounded by the decay tail and by
  // the number of master nodes available below t2
  const int nlev = static_cast<int>(matter.levels.size());
  std::vector<cd> s_of_level(nlev);
  std::vector<int> q_full(nlev);
  std::vector<std::vector<std::vector<cd>>> wtab(nlev); // [level][depth][node]
  for (int j = 0; j < nlev; ++j) {
    const double kj = matter.levels[j].linewidth_eV / hbar_eV_s;
    const double deltaj = (matter.levels[j].energy_eV - matter.epsilon_g) / hbar_eV_s - w0;
    s_of_level[j] = cd(kj, deltaj);
    q_full[j] = static_cast<int>(std::ceil(std::log(1.0 / tg.tail_cut) / (kj * dt)));
    wtab[j].resize(q_full[j] + 1);
    for (int qd = 0; qd <= q_full[j]; ++qd)
      wtab[j][qd] = detail::decay_weights(s_of_level[j], dt, qd);
  }

  // outer-integral window and trapezoid weights
  std::vector<int> window;
  for (int k = 0; k < n; ++k)
    if (std::abs(tm(k)) <= tg.t2_abs_max * (1.0 + 1e-12)) window.push_back(k);
  if (window.size() < 2) throw ConfigError("oracle: t2 window contains fewer than 2 nodes");
  auto trap_w = [&](std::size_t idx) {
    return (idx == 0 || idx + 1 == window.size()) ? 0.5 * dt : dt;
  };

  const double sigma_t = hbar_eV_s / opt.kappa_f_eV;
  const double delta_f = (matter.epsilon_f - matter.epsilon_g) / hbar_eV_s - 2.0 * w0;

  // pair channel: A = sum_m tw g(t_m) e^{i df t_m} sum_j d_j sum_q w_j(q) F(m, m-q)
  cd amp(0.0, 0.0);
  struct Tuple {
    int m2, m1;
    cd c;
  };
  std::vector<Tuple> tuples;
  for (std::size_t idx = 0; idx < window.size(); ++idx) {
    const int k = window[idx];
    const double t2 = tm(k);
    const cd outer = trap_w(idx) * std::exp(-t2 * t2 / (2.0 * sigma_t * sigma_t)) *
                     std::exp(cd(0.0, delta_f * t2));
    for (int j = 0; j < nlev; ++j) {
      const int qd = std::min(q_full[j], k);
      const auto& wq = wtab[j][qd];
      for (int q = 0; q < static_cast<int>(wq.size()); ++q) {
        const cd c = outer * matter.levels[j].dipole * wq[q];
        amp += c * fker(k, k - q);
        if (opt.include_exchange) tuples.push_back({k, k - q, c});
      }
    }
  }

  double total = std::norm(amp);

  if (opt.include_exchange) {
    // exchange channel: double sum over memory tuples with both Wick pairings
    cd acc(0.0, 0.0);
    for (const auto& a : tuples) {
      for (const auto& b : tuples) {
        const cd pairings = kker(a.m2, b.m1) * kker(a.m1, b.m2) +
                            kker(a.m1, b.m1) * kker(a.m2, b.m2);
        acc += a.c * std::conj(b.c) * pairings;
      }
    }
    total += std::max(acc.real(), 0.0);
  }

  return total;
}

} // namespace vss
