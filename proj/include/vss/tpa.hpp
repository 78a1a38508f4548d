#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <vector>

#include <Eigen/Dense>

#include <vss/errors.hpp>
#include <vss/grid.hpp>
#include <vss/matter.hpp>
#include <vss/moments.hpp>
#include <vss/schmidt.hpp>
#include <vss/threading.hpp>
#include <vss/transform.hpp>
#include <vss/units.hpp>

namespace vss {

namespace detail {

// final-state energy filter, a Gaussian window on the two-photon energy shell
inline double final_window(double omega_sum, double delta_e_eV, double kappa_f_eV) {
  const double d = hbar_eV_s * omega_sum - delta_e_eV;
  return std::exp(-d * d / (2.0 * kappa_f_eV * kappa_f_eV));
}

// window support: |hbar*w_sum - dE| <= kappa_f * sqrt(2 ln(1/cutoff))
constexpr double kFinalWindowCutoff = 1e-12;

inline double final_window_halfwidth_eV(double kappa_f_eV) {
  return kappa_f_eV * std::sqrt(2.0 * std::log(1.0 / kFinalWindowCutoff));
}

// one retained product-grid cell of the exchange tensor
struct UnionCell {
  int ix = 0;             // index into the x-axis block grid
  int iy = 0;             // index into the y-axis block grid
  std::complex<double> w; // w_x w_y sqrt(x y) T(x,y) D_f(x+y)
  int rate = 0;           // integer delay-phase rate in units of the signal grid step
};

// cells share occupation blocks: x-axis block and y-axis block are fixed per group
struct CellGroup {
  const Eigen::MatrixXcd* occ_x = nullptr;
  const Eigen::MatrixXcd* occ_y = nullptr;
  std::vector<UnionCell> cells;
};

// collect cells with non-negligible final-window weight for one (X,Y) block pair
inline void collect_cells(const FrequencyGrid& gx, const FrequencyGrid& gy,
                          bool x_is_signal, bool y_is_signal,
                          const MatterSystem& matter, double kappa_f_eV,
                          CellGroup& out) {
  const double delta_e = matter.epsilon_f - matter.epsilon_g;
  const double half = final_window_halfwidth_eV(kappa_f_eV);
  for (int i = 0; i < static_cast<int>(gx.values.size()); ++i) {
    const double wx = gx.values(i);
    for (int j = 0; j < static_cast<int>(gy.values.size()); ++j) {
      const double wy = gy.values(j);
      if (std::abs(hbar_eV_s * (wx + wy) - delta_e) > half) continue;
      const double df = final_window(wx + wy, delta_e, kappa_f_eV);
      if (df < kFinalWindowCutoff) continue;
      UnionCell c;
      c.ix = i;
      c.iy = j;
      c.w = gx.weights(i) * gy.weights(j) * std::sqrt(wx * wy) * df *
            transition_kernel(wx, wy, matter);
      c.rate = (x_is_signal ? i : 0) + (y_is_signal ? j : 0);
      out.cells.push_back(c);
    }
  }
}

inline void build_exchange_groups(const MomentSet& m, const MatterSystem& matter,
                                  double kappa_f_eV, std::vector<CellGroup>& groups) {
  groups.clear();
  groups.resize(4);
  groups[0].occ_x = &m.occ_s; groups[0].occ_y = &m.occ_s;
  groups[1].occ_x = &m.occ_s; groups[1].occ_y = &m.occ_i;
  groups[2].occ_x = &m.occ_i; groups[2].occ_y = &m.occ_s;
  groups[3].occ_x = &m.occ_i; groups[3].occ_y = &m.occ_i;
  collect_cells(m.grid_s, m.grid_s, true, true, matter, kappa_f_eV, groups[0]);
  collect_cells(m.grid_s, m.grid_i, true, false, matter, kappa_f_eV, groups[1]);
  collect_cells(m.grid_i, m.grid_s, false, true, matter, kappa_f_eV, groups[2]);
  collect_cells(m.grid_i, m.grid_i, false, false, matter, kappa_f_eV, groups[3]);
}

// pair-channel reduced amplitude Abar = sum_ab w_a w_b sqrt(ab) T psi D_f
inline std::complex<double> pair_amplitude(const MomentSet& m, const MatterSystem& matter,
                                           double kappa_f_eV) {
  const double delta_e = matter.epsilon_f - matter.epsilon_g;
  const double half = final_window_halfwidth_eV(kappa_f_eV);
  std::complex<double> acc(0.0, 0.0);
  for (int i = 0; i < static_cast<int>(m.grid_s.values.size()); ++i) {
    const double a = m.grid_s.values(i);
    for (int j = 0; j < static_cast<int>(m.grid_i.values.size()); ++j) {
      const double b = m.grid_i.values(j);
      if (std::abs(hbar_eV_s * (a + b) - delta_e) > half) continue;
      const double df = final_window(a + b, delta_e, kappa_f_eV);
      if (df < kFinalWindowCutoff) continue;
      acc += m.grid_s.weights(i) * m.grid_i.weights(j) * std::sqrt(a * b) * df *
             transition_kernel(a, b, matter) * m.psi(i, j);
    }
  }
  return acc;
}

// Frobenius norm^2 of the exchange tensor via the occupation contraction:
// sum_{c,c'} conj(W_c) W_{c'} occ_x(x_c, x_{c'}) occ_y(y_c, y_{c'})
inline double exchange_norm2(const std::vector<CellGroup>& groups) {
  double total = 0.0;
  for (const auto& g : groups) {
    const auto& nx = *g.occ_x;
    const auto& ny = *g.occ_y;
    std::complex<double> acc(0.0, 0.0);
    for (const auto& c : g.cells) {
      for (const auto& cp : g.cells) {
        acc += std::conj(c.w) * cp.w * nx(c.ix, cp.ix) * ny(c.iy, cp.iy);
      }
    }
    total += acc.real();
  }
  return std::max(total, 0.0);
}

inline double probability_prefactor(double kappa_f_eV) {
  const double h2 = hbar_eV_s * hbar_eV_s;
  return 2.0 * pi * h2 * h2 / (kappa_f_eV * kappa_f_eV);
}

} // namespace detail

// Two-photon excitation probability of the prepared state described by the
// moment set, for a final level at epsilon_f broadened by kappa_f_eV.
// Includes the pair channel |Abar|^2 and, unless disabled, the exchange
// channel 1/2 ||B||_F^2 built from the occupations.
inline double tpa_probability(const MomentSet& m, const MatterSystem& matter,
                              double kappa_f_eV, bool include_exchange = true) {
  matter.validate();
  if (!(kappa_f_eV > 0)) throw ConfigError("tpa: final linewidth kappa_f must be positive");
  const std::complex<double> abar = detail::pair_amplitude(m, matter, kappa_f_eV);
  double body = std::norm(abar);
  if (include_exchange) {
    std::vector<detail::CellGroup> groups;
    detail::build_exchange_groups(m, matter, kappa_f_eV, groups);
    body += 0.5 * detail::exchange_norm2(groups);
  }
  return detail::probability_prefactor(kappa_f_eV) * body;
}

// Delay-scan result. values are scaled so max(values) == 1; normalization is
// the raw probability at that maximum, so raw = values * normalization.
struct TpaTrace {
  Eigen::ArrayXd delays_s;
  Eigen::ArrayXd values;
  double normalization = 0.0;
  bool include_exchange = true;
};

struct TpaTraceOptions {
  double kappa_f_eV = 1e-4;
  bool include_exchange = true;
  double chirp_s2 = 0.0;        // quadratic spectral phase applied to the signal beam
  double chirp_center = 0.0;    // expansion frequency; 0 selects the signal grid center
  double nyquist_safety = 4.0;  // delay step must resolve the fastest beat by this factor
  int threads = 0;              // 0 selects the hardware default
};

// delay step required to resolve the fastest level beat
inline double required_delay_step(const MatterSystem& matter, double safety) {
  const double ebeat = max_beat_energy(matter);
  if (!(ebeat > 0)) return 0.0; // no beat structure; any step works
  return pi * hbar_eV_s / (safety * ebeat);
}

inline std::string format_delay_step(double dt) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", dt);
  return buf;
}

// Scan the two-photon excitation probability over inter-beam delay.
// The chirp is folded into the mode functions once; delay phases are applied
// analytically, so the sweep costs O(n) per delay point after setup.
inline TpaTrace tpa_trace(const SchmidtDecomposition& gained, const MatterSystem& matter,
                          const DelayGrid& delays, const TpaTraceOptions& opt) {
  matter.validate();
  gained.require_gain("tpa_trace");
  if (!(opt.kappa_f_eV > 0)) throw ConfigError("tpa: final linewidth kappa_f must be positive");
  if (!(opt.nyquist_safety >= 1.0))
    throw ConfigError("tpa: nyquist_safety must be at least 1");

  const double dt_req = required_delay_step(matter, opt.nyquist_safety);
  if (dt_req > 0 && !(delays.step < dt_req)) {
    throw ConfigError(
        "tpa: delay step " + format_delay_step(delays.step) +
        " s undersamples the fastest level beat; required delay step below " +
        format_delay_step(dt_req) + " s");
  }

  // fold the chirp (delay handled analytically below)
  BeamTransform chirp;
  chirp.tau = 0.0;
  chirp.xi_s = opt.chirp_s2;
  chirp.omega_c = (opt.chirp_center > 0) ? opt.chirp_center : gained.grid_s.center;
  const SchmidtDecomposition base = transform_modes(gained, chirp);
  const MomentSet m0 = compute_moments(base);

  const auto& gs = m0.grid_s;
  const auto& gi = m0.grid_i;
  const int ns = static_cast<int>(gs.values.size());
  const double delta_e = matter.epsilon_f - matter.epsilon_g;
  const double half = detail::final_window_halfwidth_eV(opt.kappa_f_eV);

  // pair channel: Abar(tau) = sum_a exp(-i a tau) q_a
  Eigen::VectorXcd q = Eigen::VectorXcd::Zero(ns);
  for (int i = 0; i < ns; ++i) {
    const double a = gs.values(i);
    std::complex<double> acc(0.0, 0.0);
    for (int j = 0; j < static_cast<int>(gi.values.size()); ++j) {
      const double b = gi.values(j);
      if (std::abs(hbar_eV_s * (a + b) - delta_e) > half) continue;
      const double df = detail::final_window(a + b, delta_e, opt.kappa_f_eV);
      if (df < detail::kFinalWindowCutoff) continue;
      acc += gs.weights(i) * gi.weights(j) * std::sqrt(a * b) * df *
             transition_kernel(a, b, matter) * m0.psi(i, j);
    }
    q(i) = acc;
  }

  // exchange channel: ||B||^2(tau) = sum_D rho[D] exp(i tau dw D), where the
  // integer rate of a cell counts its signal-grid indices (idler modes carry
  // no delay phase). rho[-D] = conj(rho[D]).
  const int rate_span = 2 * (ns - 1);
  Eigen::VectorXcd rho;
  if (opt.include_exchange) {
    std::vector<detail::CellGroup> groups;
    detail::build_exchange_groups(m0, matter, opt.kappa_f_eV, groups);
    rho = Eigen::VectorXcd::Zero(2 * rate_span + 1);
    for (const auto& g : groups) {
      const auto& nx = *g.occ_x;
      const auto& ny = *g.occ_y;
      for (const auto& c : g.cells) {
        for (const auto& cp : g.cells) {
          const std::complex<double> term =
              std::conj(c.w) * cp.w * nx(c.ix, cp.ix) * ny(c.iy, cp.iy);
          rho(c.rate - cp.rate + rate_span) += term;
        }
      }
    }
  }

  const int nt = static_cast<int>(delays.values.size());
  Eigen::ArrayXd raw(nt);
  const double pref = detail::probability_prefactor(opt.kappa_f_eV);
  const double dw = gs.step;

  parallel_for_blocks(nt, 64, opt.threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const double tau = delays.values(static_cast<int>(k));
      std::complex<double> abar(0.0, 0.0);
      for (int i = 0; i < ns; ++i) {
        abar += q(i) * std::polar(1.0, -gs.values(i) * tau);
      }
      double body = std::norm(abar);
      if (opt.include_exchange) {
        double bn = rho(rate_span).real();
        std::complex<double> osc(0.0, 0.0);
        for (int d = 1; d <= rate_span; ++d) {
          osc += rho(rate_span + d) * std::polar(1.0, dw * d * tau);
        }
        bn += 2.0 * osc.real();
        body += 0.5 * std::max(bn, 0.0);
      }
      raw(static_cast<int>(k)) = pref * std::max(body, 0.0);
    }
  });

  TpaTrace out;
  out.delays_s = delays.values;
  out.include_exchange = opt.include_exchange;
  out.normalization = raw.maxCoeff();
  if (!(out.normalization > 0))
    throw NumericalError(
        "tpa: delay trace is identically zero; the final-state window does not "
        "overlap the two-photon energy shell of the grids");
  out.values = raw / out.normalization;
  return out;
}

} // namespace vss
