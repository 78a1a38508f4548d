#pragma once

#include <complex>

#include <Eigen/Dense>

#include <vss/schmidt.hpp>

namespace vss {

// Second moments of the zero-mean Gaussian twin-beam state; every fourth-order
// correlation follows from these by Wick factorization.
struct MomentSet {
  FrequencyGrid grid_s, grid_i;
  Eigen::MatrixXcd psi;   // pair amplitude <a_s(w_s) a_i(w_i)>, n_s x n_i
  Eigen::MatrixXcd occ_s; // <a_s^dag(w) a_s(w')>, Hermitian PSD
  Eigen::MatrixXcd occ_i; // <a_i^dag(w) a_i(w')>
};

// psi = sum_g u_g v_g conj(f_s) conj(f_i); occ_j = sum_g v_g^2 f_j conj(f_j)
inline MomentSet compute_moments(const SchmidtDecomposition& d) {
  d.require_gain("compute_moments");
  MomentSet m;
  m.grid_s = d.grid_s;
  m.grid_i = d.grid_i;

  Eigen::MatrixXcd s_uv = d.modes_s.conjugate();
  Eigen::MatrixXcd s_v = d.modes_s;
  Eigen::MatrixXcd i_v = d.modes_i;
  for (int g = 0; g < d.n_modes(); ++g) {
    s_uv.col(g) *= d.u(g) * d.v(g);
    s_v.col(g) *= d.v(g);
    i_v.col(g) *= d.v(g);
  }
  m.psi = s_uv * d.modes_i.adjoint(); // (w_s,w_i): sum_g u v conj(f_s) conj(f_i)
  m.occ_s = s_v * s_v.adjoint();      // (w,w'): sum_g v^2 f_s(w) conj(f_s(w'))
  m.occ_i = i_v * i_v.adjoint();
  // enforce Hermiticity against rounding
  m.occ_s = 0.5 * (m.occ_s + m.occ_s.adjoint()).eval();
  m.occ_i = 0.5 * (m.occ_i + m.occ_i.adjoint()).eval();
  return m;
}

// quadrature trace of an occupation moment = mean photon number of that beam
inline double occupation_trace(const FrequencyGrid& g, const Eigen::MatrixXcd& occ) {
  double acc = 0.0;
  for (int i = 0; i < g.n(); ++i) acc += g.weights(i) * occ(i, i).real();
  return acc;
}

namespace detail {

// K(t,t') = <E^-(t') E^+(t)> synthesized from one occupation block; the
// sqrt(w) field weighting and the quadrature weights live here. E^+ carries
// exp(-i w t), and the dagger index of occ pairs with t', so
// K(t,t') = sum occ(w',w) exp(-i w t + i w' t').
inline std::complex<double> field_autocorr(const FrequencyGrid& g, const Eigen::MatrixXcd& occ,
                                           double t, double t_prime) {
  using cd = std::complex<double>;
  const int n = g.n();
  Eigen::VectorXcd a(n), b(n);
  for (int i = 0; i < n; ++i) {
    const double w = g.values(i);
    const double ww = g.weights(i) * std::sqrt(w);
    a(i) = ww * std::exp(cd(0.0, -w * t));
    b(i) = ww * std::exp(cd(0.0, w * t_prime));
  }
  const cd out = a.transpose() * occ.transpose() * b;
  return out;
}

// <E^+(t) E^+(t')> from the pair amplitude, symmetrized over the two beams
inline std::complex<double> field_paircorr(const MomentSet& m, double t, double t_prime) {
  using cd = std::complex<double>;
  const int ns = m.grid_s.n(), ni = m.grid_i.n();
  Eigen::VectorXcd bs_t(ns), bs_tp(ns), bi_t(ni), bi_tp(ni);
  for (int i = 0; i < ns; ++i) {
    const double w = m.grid_s.values(i);
    const double ww = m.grid_s.weights(i) * std::sqrt(w);
    bs_t(i) = ww * std::exp(cd(0.0, -w * t));
    bs_tp(i) = ww * std::exp(cd(0.0, -w * t_prime));
  }
  for (int j = 0; j < ni; ++j) {
    const double w = m.grid_i.values(j);
    const double ww = m.grid_i.weights(j) * std::sqrt(w);
    bi_t(j) = ww * std::exp(cd(0.0, -w * t));
    bi_tp(j) = ww * std::exp(cd(0.0, -w * t_prime));
  }
  const cd first = bs_t.transpose() * m.psi * bi_tp;
  const cd second = bs_tp.transpose() * m.psi * bi_t;
  return first + second;
}

} // namespace detail

// Fourth-order correlation of the total field E_s + E_i,
//   G2 = <E^-(t1') E^-(t2') E^+(t2) E^+(t1)>,
// by Gaussian factorization into products of second moments:
//   G2 = K(t2,t1')K(t1,t2') + K(t1,t1')K(t2,t2') + conj(F(t2',t1')) F(t2,t1)
// with K(t,t') = <E^-(t')E^+(t)> and F(t,t') = <E^+(t)E^+(t')>.
inline std::complex<double> g2_value(const MomentSet& m, double t2, double t1, double t2p,
                                     double t1p) {
  auto K = [&](double a, double b) {
    return detail::field_autocorr(m.grid_s, m.occ_s, a, b) +
           detail::field_autocorr(m.grid_i, m.occ_i, a, b);
  };
  auto F = [&](double a, double b) { return detail::field_paircorr(m, a, b); };
  return K(t2, t1p) * K(t1, t2p) + K(t1, t1p) * K(t2, t2p) + std::conj(F(t2p, t1p)) * F(t2, t1);
}

} // namespace vss
