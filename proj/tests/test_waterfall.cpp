#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "wf/assetpool.hpp"
#include "wf/errors.hpp"
#include "wf/waterfall.hpp"

using namespace wf;

namespace {

const EngineParams kTable3{0.1053, 0.0, 0.8646, 4.6305, 0.5, 0.7571};

CashFlowSchedule toy_base() { return base_scenario(toy_pool()); }

// Plain spreadsheet fold of the priority of payments with zero fees and
// reserve: one row per period, one column per step.
struct ManualRow {
  double s_int, m_int, j_int, l_int, s_prin, m_prin, j_prin, l_prin, residual;
};

std::vector<ManualRow> manual_fold(const std::vector<double>& cf, const std::vector<double>& profile, double fix,
                                   double link) {
  double S = 135.0, M = 31.5, J = 13.5, L = 5.805, deferred = 0.0, cum = 0.0;
  std::vector<ManualRow> rows;
  for (std::size_t j = 0; j < cf.size(); ++j) {
    const bool last = j + 1 == cf.size();
    ManualRow r{};
    double cash = cf[j];
    cum += cf[j];
    const bool on = cum / profile[j] >= 0.9;
    r.l_int = std::min(L * (fix + 0.002) * 0.5, cash);
    cash -= r.l_int;
    r.s_int = std::min(S * (fix + 0.025) * 0.5, cash);
    cash -= r.s_int;
    const double mdue = M * (fix + 0.05) * 0.5;
    const double mcur = on ? std::min(mdue, cash) : 0.0;
    cash -= mcur;
    deferred += mdue - mcur;
    r.l_prin = std::min(link * std::min(S, cash), L);
    cash -= r.l_prin;
    r.s_prin = std::min(S, cash);
    cash -= r.s_prin;
    const double dpay = (on || last) ? std::min(deferred, cash) : 0.0;
    cash -= dpay;
    deferred -= dpay;
    r.m_int = mcur + dpay;
    r.m_prin = std::min(M, cash);
    cash -= r.m_prin;
    r.j_int = std::min(J * 0.10 * 0.5, cash);
    cash -= r.j_int;
    r.j_prin = std::min(J, cash);
    cash -= r.j_prin;
    r.residual = cash;
    S -= r.s_prin;
    M -= r.m_prin;
    J -= r.j_prin;
    L -= r.l_prin;
    rows.push_back(r);
  }
  return rows;
}

std::vector<double> random_path(std::uint64_t path) {
  const auto base = toy_base();
  std::mt19937_64 rng(path);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EngineParams p{0.4 * u(rng), 0.0, u(rng), 1.5 + 6.0 * u(rng), u(rng), 0.3 + 1.2 * u(rng)};
  return compose_engines(base, p, {}, 42, path);
}

void check_invariants(const TrancheCashFlows& f, const DealConfig& deal, double fixing) {
  std::array<double, kTrancheCount> prev{};
  for (std::size_t t = 0; t < kTrancheCount; ++t) prev[t] = deal[t].notional;
  for (std::size_t j = 0; j < f.periods.size(); ++j) {
    const auto& a = f.periods[j];
    const double in = a.available;
    REQUIRE(std::abs(in - a.paid_out() - a.reserve) <= 1e-9 * std::max(1.0, in));
    for (std::size_t t = 0; t < kTrancheCount; ++t) {
      REQUIRE(a.outstanding[t] <= prev[t]);
      REQUIRE(a.outstanding[t] >= 0.0);
      REQUIRE(a.principal[t] >= 0.0);
      REQUIRE(a.interest[t] >= 0.0);
      if (t != kMezzanine) REQUIRE(a.interest[t] <= prev[t] * deal[t].coupon_rate(fixing) * 0.5 + 1e-12);
    }
    // nothing junior is repaid while a senior class is outstanding
    if (a.outstanding[kSenior] > 0.0) {
      REQUIRE(a.principal[kMezzanine] == 0.0);
      REQUIRE(a.principal[kJunior] == 0.0);
    }
    if (a.outstanding[kMezzanine] > 0.0) REQUIRE(a.principal[kJunior] == 0.0);
    if (a.outstanding[kJunior] > 0.0) REQUIRE(a.junior_variable == 0.0);
    prev = a.outstanding;
  }
}

}  // namespace

TEST_CASE("ccr") {
  const std::vector<double> profile{10.0, 20.0, 0.0};
  WaterfallState s;
  s.cumulative_collections = 10.0;
  CHECK(ccr(s, profile, 1e-12) == 1.0);
  s.period = 1;
  s.cumulative_collections = 18.0;
  CHECK(ccr(s, profile, 1e-12) == doctest::Approx(0.9));
  s.cumulative_collections = 0.0;
  CHECK(ccr(s, profile, 1e-12) == 0.0);
  s.period = 2;
  bool guarded = false;
  s.cumulative_collections = 1e-12;
  CHECK(ccr(s, profile, 1e-12, &guarded) == doctest::Approx(1.0));
  CHECK(guarded);
}

TEST_CASE("toy deal") {
  const auto base = toy_base();
  const auto deal = toy_deal(base);
  CHECK(deal[kSenior].notional == 135.0);
  CHECK(deal[kMezzanine].notional == 31.5);
  CHECK(deal[kJunior].notional == 13.5);
  CHECK(deal[kLrl].notional == 5.805);
  CHECK(deal[kSenior].coupon_rate(0.01) == doctest::Approx(0.035));
  CHECK(deal[kJunior].coupon_rate(0.01) == 0.10);
  CHECK(deal.lrl_link_ratio == doctest::Approx(0.043));
  CHECK_NOTHROW(deal.validate(base.size()));
  auto bad = deal;
  bad.contractual_profile[3] = 0.0;
  CHECK_THROWS_AS(bad.validate(base.size()), ConfigError);
  CHECK(parse_mode("smooth") == Mode::smooth);
  CHECK_THROWS_AS(parse_mode("fuzzy"), ConfigError);
}

TEST_CASE("zero cash: nothing paid, Mezzanine interest deferred") {
  const auto base = toy_base();
  const auto deal = toy_deal(base);
  const auto s0 = initial_state<double>(deal);
  auto [s1, a] = run_waterfall_period<double>(0.0, s0, deal, 0.03, Mode::exact, {}, false);
  CHECK(a.paid_out() == 0.0);
  CHECK(s1.outstanding == s0.outstanding);
  CHECK(s1.deferred_interest == doctest::Approx(31.5 * 0.08 * 0.5));
  CHECK_THROWS_AS(run_waterfall_period<double>(-1.0, s0, deal, 0.03, Mode::exact, {}, false), ConfigError);
  auto nan_state = s0;
  nan_state.reserve = NAN;
  CHECK_THROWS_WITH_AS(run_waterfall_period<double>(1.0, nan_state, deal, 0.03, Mode::exact, {}, false),
                       doctest::Contains("reserve"), NumericalError);

  // a whole life without collections
  const std::vector<double> zeros(base.size(), 0.0), fix(base.size(), 0.03);
  const auto f = run_waterfall<double>(zeros, deal, fix, Mode::exact, {});
  const auto& last = f.periods.back();
  for (std::size_t t = 0; t < kTrancheCount; ++t) CHECK(last.outstanding[t] == deal[t].notional);
  CHECK(last.deferred_interest == doctest::Approx(base.size() * 31.5 * 0.08 * 0.5));
}

TEST_CASE("saturating cash redeems everything in order") {
  const auto deal = toy_deal(toy_base());
  const auto s0 = initial_state<double>(deal);
  const double cash = 1000.0;
  auto [s1, a] = run_waterfall_period<double>(cash, s0, deal, 0.03, Mode::exact, {}, false);
  for (std::size_t t = 0; t < kTrancheCount; ++t) {
    CHECK(s1.outstanding[t] == 0.0);
    CHECK(a.principal[t] == deal[t].notional);
  }
  CHECK(a.interest[kSenior] == doctest::Approx(135.0 * 0.055 * 0.5));
  CHECK(a.interest[kMezzanine] == doctest::Approx(31.5 * 0.08 * 0.5));
  CHECK(a.interest[kJunior] == doctest::Approx(13.5 * 0.10 * 0.5));
  CHECK(a.interest[kLrl] == doctest::Approx(5.805 * 0.032 * 0.5));
  double due = 0.0;
  for (std::size_t t = 0; t < kTrancheCount; ++t) due += a.interest[t] + a.principal[t];
  CHECK(a.junior_variable == doctest::Approx(cash - due));
}

TEST_CASE("hand trace: CCR 0.8 defers Mezzanine interest") {
  const auto deal = toy_deal(toy_base());
  const double profile = deal.contractual_profile[0];
  const double cash = 0.8 * profile;
  const double fix = 0.03;
  auto [s1, a] = run_waterfall_period<double>(cash, initial_state<double>(deal), deal, fix, Mode::exact, {}, false);
  CHECK(a.ccr == doctest::Approx(0.8));
  // by hand: LRL interest, Senior interest, then everything left to principal
  const double lrl_int = 5.805 * 0.032 * 0.5;       // 0.09288
  const double sen_int = 135.0 * 0.055 * 0.5;       // 3.7125
  const double left = cash - lrl_int - sen_int;
  const double lrl_prin = 5.805 / 135.0 * left;
  CHECK(a.interest[kLrl] == doctest::Approx(lrl_int));
  CHECK(a.interest[kSenior] == doctest::Approx(sen_int));
  CHECK(a.interest[kMezzanine] == 0.0);
  CHECK(s1.deferred_interest == doctest::Approx(31.5 * 0.08 * 0.5));  // 1.26
  CHECK(a.principal[kLrl] == doctest::Approx(lrl_prin));
  CHECK(a.principal[kSenior] == doctest::Approx(left - lrl_prin));
  CHECK(a.junior_variable == 0.0);
}

TEST_CASE("base scenario run matches a manual fold") {
  const auto base = toy_base();
  const auto deal = toy_deal(base);
  const std::vector<double> fix(base.size(), 0.0303);
  const auto f = run_waterfall<double>(base.amounts, deal, fix, Mode::exact, {});
  const auto rows = manual_fold(base.amounts, deal.contractual_profile, 0.0303, deal.lrl_link_ratio);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const auto& a = f.periods[j];
    const auto& r = rows[j];
    CAPTURE(j);
    CHECK(a.interest[kSenior] == doctest::Approx(r.s_int).epsilon(1e-12));
    CHECK(a.interest[kMezzanine] == doctest::Approx(r.m_int).epsilon(1e-12));
    CHECK(a.interest[kJunior] == doctest::Approx(r.j_int).epsilon(1e-12));
    CHECK(a.interest[kLrl] == doctest::Approx(r.l_int).epsilon(1e-12));
    CHECK(a.principal[kSenior] == doctest::Approx(r.s_prin).epsilon(1e-12));
    CHECK(a.principal[kMezzanine] == doctest::Approx(r.m_prin).epsilon(1e-12));
    CHECK(a.principal[kJunior] == doctest::Approx(r.j_prin).epsilon(1e-12));
    CHECK(a.principal[kLrl] == doctest::Approx(r.l_prin).epsilon(1e-12));
    CHECK(a.junior_variable == doctest::Approx(r.residual).epsilon(1e-12));
  }
  CHECK(f.periods.back().outstanding[kSenior] == 0.0);
}

TEST_CASE("invariants on random paths") {
  const auto base = toy_base();
  auto deal = toy_deal(base);
  const std::vector<double> fix(base.size(), 0.03);
  for (int variant = 0; variant < 2; ++variant) {
    if (variant == 1) {
      deal.senior_fees = 0.2;
      deal.servicer_fee_rate = 0.02;
      deal.reserve_target_rate = 0.03;
    }
    for (std::uint64_t p = 0; p < 500; ++p) {
      const auto cf = random_path(p);
      check_invariants(run_waterfall<double>(cf, deal, fix, Mode::exact, {}), deal, 0.03);
    }
  }
}

TEST_CASE("fees and reserve") {
  const auto base = toy_base();
  auto deal = toy_deal(base);
  deal.senior_fees = 0.3;
  deal.servicer_fee_rate = 0.05;
  deal.reserve_target_rate = 0.02;
  const std::vector<double> fix(base.size(), 0.03);
  const auto f = run_waterfall<double>(base.amounts, deal, fix, Mode::exact, {});
  CHECK(f.periods[0].senior_expenses == 0.3);
  CHECK(f.periods[0].servicer_fees == doctest::Approx(0.05 * base.amounts[0]));
  CHECK(f.periods[0].reserve == doctest::Approx(0.02 * 135.0));
  CHECK(f.periods[1].available == doctest::Approx(base.amounts[1] + f.periods[0].reserve));
  CHECK(f.periods.back().reserve == 0.0);
}

TEST_CASE("Senior principal is monotone in collections within a trigger regime") {
  const auto base = toy_base();
  const std::vector<double> fix(base.size(), 0.03);
  auto on = toy_deal(base);
  on.ccr_threshold = 1e-9;  // collections are strictly positive, so always on
  auto off = toy_deal(base);
  for (auto& x : off.contractual_profile) x *= 1e6;  // CCR stays far below 0.9
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (const auto* deal : {&on, &off}) {
    for (std::uint64_t p = 0; p < 200; ++p) {
      const auto lo = random_path(p);
      auto hi = lo;
      for (auto& x : hi) x *= 1.0 + u(rng);
      const auto a = run_waterfall<double>(lo, *deal, fix, Mode::exact, {});
      const auto b = run_waterfall<double>(hi, *deal, fix, Mode::exact, {});
      double ca = 0.0, cb = 0.0;
      for (std::size_t j = 0; j < lo.size(); ++j) {
        ca += a.periods[j].principal[kSenior];
        cb += b.periods[j].principal[kSenior];
        REQUIRE(cb >= ca - 1e-9);
        REQUIRE((a.periods[j].ccr < 1e-3) == (deal == &off));
      }
    }
  }
}

TEST_CASE("smooth mode tracks exact mode on the base scenario") {
  const auto base = toy_base();
  const auto deal = toy_deal(base);
  const std::vector<double> fix(base.size(), 0.03);
  for (double trigger_k : {200.0, 1000.0}) {
    SmoothingConfig s;
    s.trigger_k = trigger_k;
    const auto e = run_waterfall<double>(base.amounts, deal, fix, Mode::exact, s);
    const auto m = run_waterfall<double>(base.amounts, deal, fix, Mode::smooth, s);
    for (std::size_t t = 0; t < kTrancheCount; ++t) {
      double pe = 0.0, pm = 0.0;
      for (std::size_t j = 0; j < base.size(); ++j) {
        const double d = std::pow(1.03, -base.times[j]);
        pe += d * e.periods[j].flow(t);
        pm += d * m.periods[j].flow(t);
      }
      CAPTURE(t);
      CHECK(std::abs(pe - pm) / deal[t].notional * 1e4 < 5.0);
    }
  }
}

TEST_CASE("smooth mode conserves cash") {
  const auto base = toy_base();
  const auto deal = toy_deal(base);
  const std::vector<double> fix(base.size(), 0.03);
  for (std::uint64_t p = 0; p < 100; ++p) {
    const auto f = run_waterfall<double>(random_path(p), deal, fix, Mode::smooth, {});
    for (const auto& a : f.periods) REQUIRE(std::abs(a.available - a.paid_out() - a.reserve) < 1e-9);
  }
}
