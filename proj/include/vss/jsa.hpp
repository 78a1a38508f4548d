#pragma once

#include <cmath>
#include <complex>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include <vss/crystal.hpp>
#include <vss/errors.hpp>
#include <vss/grid.hpp>
#include <vss/io.hpp>

namespace vss {

inline double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

// Two-photon spectral amplitude on a rectangular frequency grid. `values` is
// unnormalized (overall constant arbitrary); `norm` is the L2 quadrature norm
// so values/norm has unit norm under the trapezoid weights.
struct JointSpectralAmplitude {
  FrequencyGrid grid_s, grid_i;
  Eigen::MatrixXcd values; // n_s x n_i
  double norm = 0.0;
  bool edge_warning = false; // |values| at grid boundary exceeds 1e-3 of max
  double edge_ratio = 0.0;

  double quadrature_norm() const {
    const Eigen::ArrayXd& ws = grid_s.weights;
    const Eigen::ArrayXd& wi = grid_i.weights;
    double acc = 0.0;
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      for (Eigen::Index i = 0; i < values.rows(); ++i)
        acc += ws(i) * wi(j) * std::norm(values(i, j));
    return std::sqrt(acc);
  }
};

// amplitude = sqrt(ws*wi) * pump envelope * crystal response
// crystal response: integral of exp(i dk z) over the crystal length in closed
// form, L * sinc(dk L / 2) * exp(-i dk L / 2)
inline JointSpectralAmplitude build_jsa(const FrequencyGrid& grid_s, const FrequencyGrid& grid_i,
                                        const CrystalParams& crystal, const PumpParams& pump) {
  crystal.validate();
  pump.validate();
  if (grid_s.values(0) <= 0 || grid_i.values(0) <= 0)
    throw ConfigError("build_jsa: grids must contain only positive frequencies");

  JointSpectralAmplitude jsa;
  jsa.grid_s = grid_s;
  jsa.grid_i = grid_i;
  const int ns = grid_s.n(), ni = grid_i.n();
  jsa.values.resize(ns, ni);

  const double L = crystal.length_m;
  const double tp2_4 = 0.25 * pump.tau_p * pump.tau_p;
  using cd = std::complex<double>;
  for (int j = 0; j < ni; ++j) {
    const double wi_ = grid_i.values(j);
    for (int i = 0; i < ns; ++i) {
      const double ws_ = grid_s.values(i);
      const double dk = phase_mismatch(ws_, wi_, crystal);
      const double detp = ws_ + wi_ - pump.omega_p0;
      const double envelope = std::exp(-tp2_4 * detp * detp);
      const double arg = 0.5 * dk * L;
      const cd crystal_response = L * sinc(arg) * std::exp(cd(0.0, -arg));
      jsa.values(i, j) = std::sqrt(ws_ * wi_) * envelope * crystal_response;
    }
  }

  jsa.norm = jsa.quadrature_norm();
  if (!(jsa.norm > 0)) throw NumericalError("build_jsa: amplitude is identically zero");

  // grid-coverage check: warn when the boundary still carries weight
  const double peak = jsa.values.cwiseAbs().maxCoeff();
  double edge = 0.0;
  edge = std::max(edge, jsa.values.row(0).cwiseAbs().maxCoeff());
  edge = std::max(edge, jsa.values.row(ns - 1).cwiseAbs().maxCoeff());
  edge = std::max(edge, jsa.values.col(0).cwiseAbs().maxCoeff());
  edge = std::max(edge, jsa.values.col(ni - 1).cwiseAbs().maxCoeff());
  jsa.edge_ratio = edge / peak;
  jsa.edge_warning = jsa.edge_ratio > 1e-3;
  return jsa;
}

// container round-trip so downstream stages can re-run without recomputation
inline void save_jsa(const std::filesystem::path& p, const JointSpectralAmplitude& jsa) {
  std::vector<ContainerSection> s;
  Eigen::ArrayXd meta(6);
  meta << jsa.grid_s.center, jsa.grid_s.half_span, static_cast<double>(jsa.grid_s.n()),
      jsa.grid_i.center, jsa.grid_i.half_span, static_cast<double>(jsa.grid_i.n());
  s.push_back(ContainerSection::from_array("grid_meta", meta));
  s.push_back(ContainerSection::from_matrix("values", jsa.values));
  Eigen::ArrayXd extra(3);
  extra << jsa.norm, jsa.edge_warning ? 1.0 : 0.0, jsa.edge_ratio;
  s.push_back(ContainerSection::from_array("extra", extra));
  write_container(p, s);
}

inline JointSpectralAmplitude load_jsa(const std::filesystem::path& p) {
  auto m = read_container(p);
  JointSpectralAmplitude jsa;
  const auto meta = m.at("grid_meta").to_array();
  jsa.grid_s = FrequencyGrid::centered(meta(0), meta(1), static_cast<int>(meta(2)));
  jsa.grid_i = FrequencyGrid::centered(meta(3), meta(4), static_cast<int>(meta(5)));
  jsa.values = m.at("values").to_matrix();
  const auto extra = m.at("extra").to_array();
  jsa.norm = extra(0);
  jsa.edge_warning = extra(1) != 0.0;
  jsa.edge_ratio = extra(2);
  return jsa;
}

} // namespace vss
