#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <vss/errors.hpp>
#include <vss/grid.hpp>
#include <vss/io.hpp>
#include <vss/jsa.hpp>

namespace vss {

// Paired spectral modes of the two-photon amplitude plus two-mode squeezing
// coefficients. Mode functions are orthonormal under the grids' trapezoid
// weights; singular values are grid-resolution independent.
struct SchmidtDecomposition {
  FrequencyGrid grid_s, grid_i;
  Eigen::ArrayXd lambdas;   // descending, sum of squares = 1 at full rank
  Eigen::MatrixXcd modes_s; // n_s x n_modes, column g holds f_{s,g}
  Eigen::MatrixXcd modes_i; // n_i x n_modes
  double truncation_residual = 0.0; // Frobenius norm not captured by kept modes
  double gamma = 0.0;
  Eigen::ArrayXd u, v; // cosh(gamma*lambda), sinh(gamma*lambda)
  bool gain_applied = false;

  int n_modes() const { return static_cast<int>(lambdas.size()); }

  void require_gain(const char* who) const {
    if (!gain_applied) throw ConfigError(std::string(who) + ": parametric gain not applied yet");
  }
};

// SVD of the quadrature-weighted normalized amplitude. The amplitude expands
// as values/norm = sum_g lambda_g conj(f_{s,g}(w_s)) conj(f_{i,g}(w_i)).
inline SchmidtDecomposition schmidt_decompose(const JointSpectralAmplitude& jsa, int n_modes) {
  const int ns = jsa.grid_s.n(), ni = jsa.grid_i.n();
  if (n_modes < 1 || n_modes > std::min(ns, ni))
    throw ConfigError("schmidt_decompose: n_modes must be in [1, min(n_s, n_i)]");
  if (!jsa.values.allFinite())
    throw NumericalError("schmidt_decompose: amplitude contains non-finite entries");
  if (!(jsa.norm > 0)) throw NumericalError("schmidt_decompose: zero-norm amplitude");

  const Eigen::ArrayXd ss = jsa.grid_s.weights.sqrt();
  const Eigen::ArrayXd si = jsa.grid_i.weights.sqrt();
  Eigen::MatrixXcd M = jsa.values / jsa.norm;
  for (int i = 0; i < ns; ++i) M.row(i) *= ss(i);
  for (int j = 0; j < ni; ++j) M.col(j) *= si(j);

  Eigen::BDCSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    const double fn = M.norm();
    throw NumericalError("schmidt_decompose: SVD did not converge (matrix " + std::to_string(ns) +
                         "x" + std::to_string(ni) + ", Frobenius norm " + std::to_string(fn) +
                         ", max |entry| " + std::to_string(M.cwiseAbs().maxCoeff()) + ")");
  }

  SchmidtDecomposition d;
  d.grid_s = jsa.grid_s;
  d.grid_i = jsa.grid_i;
  d.lambdas = svd.singularValues().head(n_modes).array();
  d.modes_s = svd.matrixU().leftCols(n_modes).conjugate();
  for (int i = 0; i < ns; ++i) d.modes_s.row(i) /= ss(i);
  d.modes_i = svd.matrixV().leftCols(n_modes);
  for (int j = 0; j < ni; ++j) d.modes_i.row(j) /= si(j);
  d.truncation_residual = std::sqrt(std::max(0.0, 1.0 - d.lambdas.square().sum()));
  return d;
}

// reconstruction sum_g lambda_g conj(f_{s,g}(w_s)) conj(f_{i,g}(w_i)); for validation
inline Eigen::MatrixXcd schmidt_reconstruct(const SchmidtDecomposition& d) {
  Eigen::MatrixXcd scaled = d.modes_s.conjugate();
  for (int g = 0; g < d.n_modes(); ++g) scaled.col(g) *= d.lambdas(g);
  return scaled * d.modes_i.adjoint();
}

// two-mode squeezing coefficients per Schmidt pair at dimensionless gain gamma
inline SchmidtDecomposition apply_gain(const SchmidtDecomposition& decomp, double gamma) {
  if (!(gamma >= 0)) throw ConfigError("apply_gain: gamma must be non-negative");
  SchmidtDecomposition d = decomp;
  d.gamma = gamma;
  d.u = (gamma * d.lambdas).cosh();
  d.v = (gamma * d.lambdas).sinh();
  d.gain_applied = true;
  return d;
}

// mean photon number per beam, sum_g v_g^2 (identical for signal and idler)
inline double mean_photon_number(const SchmidtDecomposition& d) {
  d.require_gain("mean_photon_number");
  return d.v.square().sum();
}

// invert the monotone map gamma -> sum_g sinh^2(gamma lambda_g) by bisection
inline double calibrate_gain(const SchmidtDecomposition& decomp, double target_N,
                             double rel_tol = 1e-6, int max_iter = 200) {
  if (!(target_N > 0)) throw ConfigError("calibrate_gain: target photon number must be positive");
  const Eigen::ArrayXd& lam = decomp.lambdas;
  if (!(lam.maxCoeff() > 0)) throw NumericalError("calibrate_gain: all singular values are zero");
  auto N_of = [&](double g) { return (g * lam).sinh().square().sum(); };

  int it = 0;
  double lo = 0.0, hi = 1.0;
  while (N_of(hi) < target_N) {
    hi *= 2.0;
    if (++it > max_iter || !std::isfinite(N_of(hi)))
      throw NumericalError("calibrate_gain: bracketing failed (target unreachable)");
  }
  double mid = hi;
  for (; it < max_iter; ++it) {
    mid = 0.5 * (lo + hi);
    const double N = N_of(mid);
    if (std::abs(N - target_N) <= rel_tol * target_N) return mid;
    (N < target_N ? lo : hi) = mid;
  }
  throw NumericalError("calibrate_gain: no convergence within " + std::to_string(max_iter) +
                       " iterations");
}

inline void save_schmidt(const std::filesystem::path& p, const SchmidtDecomposition& d) {
  std::vector<ContainerSection> s;
  Eigen::ArrayXd meta(6);
  meta << d.grid_s.center, d.grid_s.half_span, static_cast<double>(d.grid_s.n()),
      d.grid_i.center, d.grid_i.half_span, static_cast<double>(d.grid_i.n());
  s.push_back(ContainerSection::from_array("grid_meta", meta));
  s.push_back(ContainerSection::from_array("lambdas", d.lambdas));
  s.push_back(ContainerSection::from_matrix("modes_s", d.modes_s));
  s.push_back(ContainerSection::from_matrix("modes_i", d.modes_i));
  Eigen::ArrayXd extra(3);
  extra << d.truncation_residual, d.gamma, d.gain_applied ? 1.0 : 0.0;
  s.push_back(ContainerSection::from_array("extra", extra));
  write_container(p, s);
}

inline SchmidtDecomposition load_schmidt(const std::filesystem::path& p) {
  auto m = read_container(p);
  SchmidtDecomposition d;
  const auto meta = m.at("grid_meta").to_array();
  d.grid_s = FrequencyGrid::centered(meta(0), meta(1), static_cast<int>(meta(2)));
  d.grid_i = FrequencyGrid::centered(meta(3), meta(4), static_cast<int>(meta(5)));
  d.lambdas = m.at("lambdas").to_array();
  d.modes_s = m.at("modes_s").to_matrix();
  d.modes_i = m.at("modes_i").to_matrix();
  const auto extra = m.at("extra").to_array();
  d.truncation_residual = extra(0);
  if (extra(2) != 0.0) return apply_gain(d, extra(1));
  return d;
}

} // namespace vss
