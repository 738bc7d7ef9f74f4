#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fixtures.hpp"
#include "wf/errors.hpp"
#include "wf/metrics.hpp"

using namespace wf;

namespace {

double npv_annual(std::span<const double> c, std::span<const double> t, double r) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += c[i] / std::pow(1.0 + r, t[i]);
  return s;
}

double npv_spread(std::span<const double> c, std::span<const double> t, std::span<const double> d, double z) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * d[i] * std::exp(-t[i] * z);
  return s;
}

}  // namespace

TEST_CASE("irr examples") {
  const std::vector<double> one{110.0}, t1{1.0};
  CHECK(irr(one, t1, 100.0) == doctest::Approx(0.10).epsilon(1e-12));
  const std::vector<double> flat{30.0, 30.0, 40.0}, t3{0.5, 1.0, 1.5};
  CHECK(std::abs(irr(flat, t3, 100.0)) < 1e-12);
  const std::vector<double> par{5.0, 105.0}, t2{1.0, 2.0};
  CHECK(irr(par, t2, 100.0) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(std::abs(npv_annual(par, t2, 0.05) - 100.0) < 1e-12);

  CHECK_THROWS_WITH_AS(irr(one, t1, 1e-6), doctest::Contains("IRR not bracketed"), NumericalError);
  const std::vector<double> negative{-1.0};
  CHECK_THROWS_AS(irr(negative, t1, 1.0), ConfigError);
  CHECK_THROWS_AS(irr(one, t1, 0.0), ConfigError);
}

TEST_CASE("z-spread examples") {
  const std::vector<double> c{4.0, 4.0, 104.0}, t{1.0, 2.0, 3.0};
  std::vector<double> d(3);
  const double r = 0.02, s = 0.0137;
  for (std::size_t i = 0; i < 3; ++i) d[i] = std::exp(-r * t[i]);
  CHECK(std::abs(z_spread(c, t, d, npv_spread(c, t, d, 0.0))) < 1e-12);
  double p = 0.0;
  for (std::size_t i = 0; i < 3; ++i) p += c[i] * std::exp(-(r + s) * t[i]);
  CHECK(std::abs(z_spread(c, t, d, p) - s) < 1e-10);
  CHECK_THROWS_WITH_AS(z_spread(c, t, d, 1e-9), doctest::Contains("Z-spread not bracketed"), NumericalError);
}

TEST_CASE("inverses and monotonicity on random instances") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 200; ++n) {
    const std::size_t m = 1 + static_cast<std::size_t>(u(rng) * 20);
    std::vector<double> c(m), t(m), d(m);
    double time = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      time += 0.1 + u(rng);
      t[i] = time;
      c[i] = 10.0 * u(rng) + 0.01;
      d[i] = std::pow(1.0 + 0.04 * u(rng), -time);
    }
    const double rate = -0.05 + 0.3 * u(rng);
    const double price = npv_annual(c, t, rate);
    const double r1 = irr(c, t, price);
    CHECK(std::abs(npv_annual(c, t, r1) - price) <= 1e-9 * price);
    CHECK(r1 == doctest::Approx(rate).epsilon(1e-8));
    CHECK(irr(c, t, price * 1.01) < r1);

    const double zp = npv_spread(c, t, d, rate);
    const double z1 = z_spread(c, t, d, zp);
    CHECK(std::abs(npv_spread(c, t, d, z1) - zp) <= 1e-9 * zp);
    CHECK(z_spread(c, t, d, zp * 1.01) < z1);
  }
}

TEST_CASE("annuity") {
  const std::vector<double> plan(7, 50.0), ones(7, 1.0);
  const auto a = annuity(plan, ones, ones, 50.0);
  CHECK(a.value == doctest::Approx(700.0));
  CHECK_FALSE(a.guarded);
  const auto g = annuity(plan, ones, ones, 50.0, 50.0);
  CHECK(g.guarded);
  CHECK(g.value == 0.0);
  // lapse shifts onto later discount factors
  const std::vector<double> plan2{10.0, 5.0}, disc{1.0, 0.9, 0.8}, years{0.5, 0.5, 0.5};
  CHECK(annuity(plan2, disc, years, 10.0, 0.0, 1).value == doctest::Approx(100.0 / 10.0 * (0.9 * 10 * 0.5 + 0.8 * 5 * 0.5)));
  CHECK_THROWS_AS(annuity(plan2, disc, years, 10.0, 0.0, 2), ConfigError);
}

TEST_CASE("asw") {
  CHECK(asw(100.0, 100.0, 400.0).value == 0.0);
  CHECK(asw(100.0, 99.0, 400.0).value == doctest::Approx(0.0025));
  CHECK(asw(100.0, 99.0, 400.0).value > 0.0);
  const auto g = asw(100.0, 99.0, 0.0);
  CHECK(g.guarded);
  CHECK(std::isfinite(g.value));
}

TEST_CASE("tranche metrics at the null price") {
  const auto setup = fixture::toy_setup();
  const auto m = tranche_metrics(setup);
  const auto flows = null_scenario_flows(setup);
  for (std::size_t t = 0; t < kTrancheCount; ++t) {
    CAPTURE(t);
    CHECK(m[t].asw.value == 0.0);
    CHECK(m[t].observed_price == m[t].null_price);
    // the flat 3% curve is the discount rate, so it is the IRR and the spread vanishes
    REQUIRE(m[t].irr.has_value());
    CHECK(*m[t].irr == doctest::Approx(0.03).epsilon(1e-9));
    CHECK(std::abs(*m[t].z_spread) < 1e-9);

    // spreadsheet fold of the annuity: opening balance x D x half a year
    double a = 0.0, bal = setup.deal[t].notional;
    for (std::size_t j = 0; j < setup.base.size(); ++j) {
      a += setup.curve.discount(setup.base.times[j]) * bal * 0.5;
      bal = flows.periods[j].outstanding[t];
    }
    CHECK(m[t].annuity.value == doctest::Approx(100.0 / setup.deal[t].notional * a).epsilon(1e-12));
  }
}

TEST_CASE("tranche metrics at a lower observed price") {
  const auto setup = fixture::toy_setup();
  const auto null = tranche_metrics(setup);
  std::array<double, kTrancheCount> observed{};
  for (std::size_t t = 0; t < kTrancheCount; ++t) observed[t] = 0.99 * null[t].null_price;
  const auto m = tranche_metrics(setup, observed);
  for (std::size_t t = 0; t < kTrancheCount; ++t) {
    CHECK(m[t].asw.value > 0.0);
    CHECK(m[t].asw.value == doctest::Approx(0.01 * null[t].null_price / m[t].annuity.value));
    CHECK(*m[t].irr > 0.03);
    CHECK(*m[t].z_spread > 0.0);
  }
}

TEST_CASE("a worthless tranche has no yield") {
  const auto setup = fixture::toy_setup();
  const auto null = tranche_metrics(setup);
  std::array<double, kTrancheCount> observed{};
  for (std::size_t t = 0; t < kTrancheCount; ++t) observed[t] = null[t].null_price;
  observed[kJunior] = 0.0;
  const auto m = tranche_metrics(setup, observed);
  CHECK_FALSE(m[kJunior].irr.has_value());
  CHECK_FALSE(m[kJunior].z_spread.has_value());
  CHECK(m[kJunior].asw.value > 0.0);
  CHECK(m[kSenior].irr.has_value());
  observed[kJunior] = -1.0;
  CHECK_THROWS_AS(tranche_metrics(setup, observed), ConfigError);
}
