#pragma once

#include <Eigen/Dense>
#include <string>

#include <vss/errors.hpp>

namespace vss {

// uniform angular-frequency grid with trapezoid quadrature weights
struct FrequencyGrid {
  double center = 0.0;    // rad/s
  double half_span = 0.0; // rad/s
  double step = 0.0;      // rad/s
  Eigen::ArrayXd values;  // strictly increasing, uniform, centered
  Eigen::ArrayXd weights; // trapezoid rule

  int n() const { return static_cast<int>(values.size()); }

  static FrequencyGrid centered(double center, double half_span, int n_points) {
    if (n_points < 2)
      throw ConfigError("FrequencyGrid: n_points must be >= 2, got " + std::to_string(n_points));
    if (!(half_span > 0))
      throw ConfigError("FrequencyGrid: half_span must be positive");
    if (!(center - half_span > 0))
      throw ConfigError("FrequencyGrid: frequencies must stay positive (center - half_span <= 0)");
    FrequencyGrid g;
    g.center = center;
    g.half_span = half_span;
    g.step = 2.0 * half_span / (n_points - 1);
    g.values.resize(n_points);
    // offsets mirror exactly about the center (sign-symmetric products)
    const double h = 0.5 * (n_points - 1);
    for (int i = 0; i < n_points; ++i) g.values(i) = center + g.step * (i - h);
    g.weights = Eigen::ArrayXd::Constant(n_points, g.step);
    g.weights(0) = 0.5 * g.step;
    g.weights(n_points - 1) = 0.5 * g.step;
    return g;
  }

  bool same_axis(const FrequencyGrid& o, double rel_tol = 1e-12) const {
    if (n() != o.n()) return false;
    const double scale = std::max(std::abs(center) + half_span, 1.0);
    return (values - o.values).abs().maxCoeff() <= rel_tol * scale;
  }
};

// uniform delay grid (seconds)
struct DelayGrid {
  Eigen::ArrayXd values;
  double step = 0.0;

  int n() const { return static_cast<int>(values.size()); }

  static DelayGrid linspace(double tau_min, double tau_max, int n_points) {
    if (n_points < 2) throw ConfigError("DelayGrid: n_points must be >= 2");
    if (!(tau_max > tau_min)) throw ConfigError("DelayGrid: tau_max must exceed tau_min");
    DelayGrid d;
    d.step = (tau_max - tau_min) / (n_points - 1);
    d.values.resize(n_points);
    for (int i = 0; i < n_points; ++i) d.values(i) = tau_min + d.step * i;
    return d;
  }
};

} // namespace vss
