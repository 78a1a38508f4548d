#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include <vss/jsa.hpp>
#include <vss/matter.hpp>
#include <vss/moments.hpp>
#include <vss/schmidt.hpp>
#include <vss/spectrum.hpp>
#include <vss/tpa.hpp>
#include <vss/transform.hpp>
#include <vss/units.hpp>

#include "helpers.hpp"

using Catch::Approx;
using cd = std::complex<double>;
using vss::ConfigError;
using vss::DelayGrid;
using vss::FrequencyGrid;
using vss::MatterSystem;
using vss::NumericalError;
using vss::TpaTraceOptions;

namespace {

// unequal signal/idler grids; the final level is centered on their sum shell
struct Fixture {
  vss::SchmidtDecomposition gained;
  MatterSystem matter;
};

Fixture two_level_fixture() {
  const double ws0 = 0.5 * testutil::pump_center_omega();
  const auto gs = FrequencyGrid::centered(ws0, 8e13, 24);
  const auto gi = FrequencyGrid::centered(ws0 + 4e12, 6e13, 20);

  Fixture f;
  f.gained = vss::apply_gain(testutil::synth_decomp(gs, gi, {0.75, 0.5, 0.35}, 2024), 1.0);
  f.matter.epsilon_g = 0.0;
  f.matter.epsilon_f = vss::hbar_eV_s * (gs.center + gi.center);
  f.matter.levels = {{1.52, 2e-4, 1.0}, {1.58, 2e-4, 0.6}};
  return f;
}

} // namespace

TEST_CASE("vacuum input cannot be excited") {
  auto f = two_level_fixture();
  const auto vac = vss::compute_moments(vss::apply_gain(f.gained, 0.0));
  CHECK(vss::tpa_probability(vac, f.matter, 2e-3, true) == 0.0);
  CHECK(vss::tpa_probability(vac, f.matter, 2e-3, false) == 0.0);
}

TEST_CASE("probability is positive and the exchange channel adds to it") {
  auto f = two_level_fixture();
  const auto m = vss::compute_moments(f.gained);
  const double p_pair = vss::tpa_probability(m, f.matter, 2e-3, false);
  const double p_full = vss::tpa_probability(m, f.matter, 2e-3, true);
  CHECK(p_pair > 0.0);
  CHECK(p_full > p_pair);
}

TEST_CASE("probability scales with the fourth power of a dipole rescale") {
  auto f = two_level_fixture();
  const auto m = vss::compute_moments(f.gained);
  const double p0 = vss::tpa_probability(m, f.matter, 2e-3, true);

  auto scaled = f.matter;
  const double s = 1.7;
  for (auto& l : scaled.levels) l.dipole *= s;
  const double p1 = vss::tpa_probability(m, scaled, 2e-3, true);
  CHECK(p1 == Approx(s * s * p0).epsilon(1e-12));

  // the normalized trace is invariant under the same rescale
  const auto delays = DelayGrid::linspace(-0.4e-12, 0.4e-12, 128);
  TpaTraceOptions opt;
  opt.kappa_f_eV = 2e-3;
  const auto t0 = vss::tpa_trace(f.gained, f.matter, delays, opt);
  const auto t1 = vss::tpa_trace(f.gained, scaled, delays, opt);
  CHECK((t0.values - t1.values).abs().maxCoeff() <= 1e-12);
  CHECK(t1.normalization == Approx(s * s * t0.normalization).epsilon(1e-12));
}

TEST_CASE("flat final window reduces to the bare kernel contraction") {
  const auto g = FrequencyGrid::centered(2.3e15, 1e13, 12);
  const auto d = vss::apply_gain(testutil::synth_decomp(g, g, {0.8, 0.5}, 5), 0.7);
  const auto m = vss::compute_moments(d);

  MatterSystem matter;
  matter.epsilon_g = 0.0;
  matter.epsilon_f = 3.0;
  matter.levels = {{1.5, 5e-4, 1.0}};

  const double kappa_f = 1e6; // window flat to machine precision on this grid
  const double p = vss::tpa_probability(m, matter, kappa_f, false);

  cd abar(0.0, 0.0);
  for (int i = 0; i < g.n(); ++i)
    for (int j = 0; j < g.n(); ++j) {
      const double a = g.values(i), b = g.values(j);
      abar += g.weights(i) * g.weights(j) * std::sqrt(a * b) *
              vss::transition_kernel(a, b, matter) * m.psi(i, j);
    }
  const double pref = 2.0 * vss::pi * std::pow(vss::hbar_eV_s, 4) / (kappa_f * kappa_f);
  CHECK(p == Approx(pref * std::norm(abar)).epsilon(1e-8));
}

TEST_CASE("delay sweep equals the level-by-level literal evaluation") {
  auto f = two_level_fixture();
  const auto delays = DelayGrid::linspace(-0.45e-12, 0.45e-12, 128);

  TpaTraceOptions opt;
  opt.kappa_f_eV = 2e-3;
  opt.include_exchange = true;
  opt.chirp_s2 = 6e-30;
  opt.chirp_center = 0.0; // defaults to the signal grid center
  const auto trace = vss::tpa_trace(f.gained, f.matter, delays, opt);

  REQUIRE(trace.values.size() == 128);
  CHECK(trace.values.minCoeff() >= 0.0);
  CHECK(trace.values.maxCoeff() == 1.0); // exact: peak divided by itself

  const double max_raw = trace.normalization;
  REQUIRE(max_raw > 0.0);
  for (int k = 0; k < delays.n(); ++k) {
    vss::BeamTransform xf;
    xf.tau = delays.values(k);
    xf.xi_s = opt.chirp_s2;
    xf.omega_c = f.gained.grid_s.center;
    const auto m = vss::compute_moments(vss::transform_modes(f.gained, xf));
    const double literal = vss::tpa_probability(m, f.matter, opt.kappa_f_eV, true);
    CHECK(std::abs(trace.values(k) * trace.normalization - literal) <= 1e-10 * max_raw);
  }
}

TEST_CASE("undersampled delay grids are rejected with both steps spelled out") {
  auto f = two_level_fixture();
  const auto coarse = DelayGrid::linspace(-1e-12, 1e-12, 16);
  TpaTraceOptions opt;
  opt.kappa_f_eV = 2e-3;

  const double dt_req = vss::required_delay_step(f.matter, opt.nyquist_safety);
  REQUIRE(coarse.step >= dt_req);
  try {
    vss::tpa_trace(f.gained, f.matter, coarse, opt);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(vss::format_delay_step(coarse.step)) != std::string::npos);
    CHECK(msg.find(vss::format_delay_step(dt_req)) != std::string::npos);
  }
}

TEST_CASE("required delay step follows the fastest beat") {
  MatterSystem m;
  m.epsilon_g = 0.1;
  m.epsilon_f = 3.0;
  m.levels = {{1.5, 1e-4, 1.0}, {1.7, 1e-4, 1.0}}; // fastest beat 0.3 eV
  CHECK(vss::required_delay_step(m, 4.0) ==
        Approx(vss::pi * vss::hbar_eV_s / (4.0 * 0.3)).epsilon(1e-12));
  CHECK(vss::required_delay_step(m, 1.0) ==
        Approx(vss::pi * vss::hbar_eV_s / 0.3).epsilon(1e-12));

  m.epsilon_g = 0.0;
  m.levels = {{1.5, 1e-4, 1.0}}; // 2*1.5 - 3.0 - 0.0 == 0 exactly: no constraint
  CHECK(vss::required_delay_step(m, 4.0) == 0.0);
}

TEST_CASE("single level imprints its beat energy on the delay trace") {
  const auto g = testutil::bench_grid(96);
  const auto jsa = vss::build_jsa(g, g, testutil::bench_crystal(), testutil::bench_pump());
  auto d = vss::schmidt_decompose(jsa, 96);
  d = vss::apply_gain(d, vss::calibrate_gain(d, 100.0));

  // Pin the level and its two-photon mirror onto grid samples so the beat
  // position is not blurred by pole-sampling quantisation (kappa_j << grid step).
  MatterSystem matter;
  matter.epsilon_g = 0.0;
  matter.epsilon_f = vss::hbar_eV_s * (g.values(19) + g.values(76));
  matter.levels = {{vss::hbar_eV_s * g.values(19), 2e-4, 1.0}};
  const double beat = vss::hbar_eV_s * (g.values(76) - g.values(19)); // ~0.0987 eV

  const auto delays = DelayGrid::linspace(-1e-12, 1e-12, 512);
  TpaTraceOptions opt;
  opt.kappa_f_eV = 4e-4;
  opt.include_exchange = false;
  const auto trace = vss::tpa_trace(d, matter, delays, opt);

  const auto spec = vss::compute_spectrum(trace);
  const auto peaks = vss::detect_peaks(spec);
  REQUIRE(!peaks.empty());
  const auto tallest = *std::max_element(
      peaks.begin(), peaks.end(),
      [](const vss::Peak& a, const vss::Peak& b) { return a.value < b.value; });
  CHECK(std::abs(tallest.energy_eV - beat) <= spec.bin_eV);
}

TEST_CASE("unequal group delays break the trace symmetry") {
  const double wp = testutil::pump_center_omega();
  const auto crystal = vss::CrystalParams::degenerate(0.005, 5.4e-12, 5.2e-12, 5.9e-12, wp);
  const auto g = testutil::bench_grid(64);
  const auto jsa = vss::build_jsa(g, g, crystal, testutil::bench_pump());
  auto d = vss::schmidt_decompose(jsa, 64);
  d = vss::apply_gain(d, vss::calibrate_gain(d, 20.0));

  MatterSystem matter;
  matter.epsilon_g = 0.0;
  matter.epsilon_f = 3.0996;
  matter.levels = {{1.52, 2e-4, 1.0}, {1.58, 2e-4, 1.0}};

  const auto delays = DelayGrid::linspace(-0.3e-12, 0.3e-12, 256);
  TpaTraceOptions opt;
  opt.kappa_f_eV = 4e-4;
  opt.include_exchange = false;
  const auto trace = vss::tpa_trace(d, matter, delays, opt);

  double asym = 0.0;
  for (int k = 0; k < 256; ++k)
    asym = std::max(asym, std::abs(trace.values(k) - trace.values(255 - k)));
  CHECK(asym > 1e-3);
}

TEST_CASE("trace rejects invalid setups") {
  auto f = two_level_fixture();
  const auto delays = DelayGrid::linspace(-0.4e-12, 0.4e-12, 128);

  TpaTraceOptions opt;
  opt.kappa_f_eV = 0.0;
  CHECK_THROWS_AS(vss::tpa_trace(f.gained, f.matter, delays, opt), ConfigError);

  opt.kappa_f_eV = 2e-3;
  opt.nyquist_safety = 0.5;
  CHECK_THROWS_AS(vss::tpa_trace(f.gained, f.matter, delays, opt), ConfigError);

  opt.nyquist_safety = 4.0;
  auto ungained = f.gained;
  ungained.gain_applied = false;
  CHECK_THROWS_AS(vss::tpa_trace(ungained, f.matter, delays, opt), ConfigError);

  const auto m = vss::compute_moments(f.gained);
  CHECK_THROWS_AS(vss::tpa_probability(m, f.matter, -1.0, true), ConfigError);
}

TEST_CASE("a final window off the energy shell yields an identically zero trace") {
  auto f = two_level_fixture();
  auto far = f.matter;
  far.epsilon_f = f.matter.epsilon_f + 0.4; // grid sums never reach it
  far.levels = {{1.7, 2e-4, 1.0}};

  const auto delays = DelayGrid::linspace(-0.1e-12, 0.1e-12, 64);
  TpaTraceOptions opt;
  opt.kappa_f_eV = 1e-4;
  CHECK_THROWS_AS(vss::tpa_trace(f.gained, far, delays, opt), NumericalError);
}
