#include <catch2/catch_amalgamated.hpp>

#include <vss/grid.hpp>

using Catch::Approx;
using vss::ConfigError;
using vss::DelayGrid;
using vss::FrequencyGrid;

TEST_CASE("centered frequency grid geometry") {
  const double c = 2.0e15, h = 1.0e14;
  const auto g = FrequencyGrid::centered(c, h, 65);

  REQUIRE(g.n() == 65);
  CHECK(g.center == c);
  CHECK(g.half_span == h);
  CHECK(g.step == Approx(2.0 * h / 64).epsilon(1e-15));
  CHECK(g.values(0) == Approx(c - h).epsilon(1e-15));
  CHECK(g.values(64) == Approx(c + h).epsilon(1e-15));

  // offsets mirror exactly about the center
  for (int i = 0; i < g.n(); ++i)
    CHECK(g.values(i) + g.values(g.n() - 1 - i) == Approx(2.0 * c).epsilon(1e-14));
  for (int i = 1; i < g.n(); ++i)
    CHECK(g.values(i) - g.values(i - 1) == Approx(g.step).epsilon(1e-12));
}

TEST_CASE("trapezoid weights integrate a constant exactly") {
  const auto g = FrequencyGrid::centered(3.0e15, 2.0e14, 17);
  CHECK(g.weights(0) == Approx(0.5 * g.step).epsilon(1e-15));
  CHECK(g.weights(16) == Approx(0.5 * g.step).epsilon(1e-15));
  for (int i = 1; i < 16; ++i) CHECK(g.weights(i) == Approx(g.step).epsilon(1e-15));
  CHECK(g.weights.sum() == Approx(2.0 * g.half_span).epsilon(1e-13));
}

TEST_CASE("frequency grid construction rejects bad parameters") {
  CHECK_THROWS_AS(FrequencyGrid::centered(1e15, 1e14, 1), ConfigError);
  CHECK_THROWS_AS(FrequencyGrid::centered(1e15, 0.0, 8), ConfigError);
  CHECK_THROWS_AS(FrequencyGrid::centered(1e15, -1e13, 8), ConfigError);
  // grid must not reach zero or negative frequencies
  CHECK_THROWS_AS(FrequencyGrid::centered(1e14, 1e14, 8), ConfigError);
  CHECK_THROWS_AS(FrequencyGrid::centered(5e13, 1e14, 8), ConfigError);
}

TEST_CASE("same_axis compares sampled values") {
  const auto a = FrequencyGrid::centered(2.0e15, 1.0e14, 33);
  const auto b = FrequencyGrid::centered(2.0e15, 1.0e14, 33);
  const auto c = FrequencyGrid::centered(2.0e15, 1.0e14, 34);
  auto d = FrequencyGrid::centered(2.0e15 * (1.0 + 1e-6), 1.0e14, 33);

  CHECK(a.same_axis(b));
  CHECK_FALSE(a.same_axis(c)); // different size
  CHECK_FALSE(a.same_axis(d)); // shifted center
  CHECK(a.same_axis(d, 1e-5)); // but within a loose tolerance
}

TEST_CASE("delay grid linspace") {
  const auto d = DelayGrid::linspace(-1e-12, 1e-12, 5);
  REQUIRE(d.n() == 5);
  CHECK(d.step == Approx(5e-13).epsilon(1e-15));
  CHECK(d.values(0) == Approx(-1e-12).epsilon(1e-15));
  CHECK(d.values(2) == Approx(0.0).margin(1e-27));
  CHECK(d.values(4) == Approx(1e-12).epsilon(1e-15));

  CHECK_THROWS_AS(DelayGrid::linspace(0.0, 1e-12, 1), ConfigError);
  CHECK_THROWS_AS(DelayGrid::linspace(1e-12, 1e-12, 4), ConfigError);
  CHECK_THROWS_AS(DelayGrid::linspace(1e-12, -1e-12, 4), ConfigError);
}
