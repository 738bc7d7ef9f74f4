#include "wf/metrics.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>

#include "wf/errors.hpp"

namespace wf {

namespace {

void check_inputs(std::span<const double> flows, std::span<const double> times, double price, const char* who) {
  require(flows.size() == times.size(), std::string(who) + ": flows and times differ in length");
  require(std::isfinite(price) && price > 0.0, std::string(who) + ": price must be > 0");
  bool positive = false;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    require(std::isfinite(flows[i]) && std::isfinite(times[i]), std::string(who) + ": non-finite input");
    if (i > 0) require(times[i] > times[i - 1], std::string(who) + ": times must be increasing");
    positive = positive || flows[i] > 0.0;
  }
  require(positive, std::string(who) + ": at least one positive flow required");
}

// Root of f on [lo, hi] with |f| <= tol at the returned point.
template <class F>
double solve(F f, double lo, double hi, double tol, const char* what) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (!(std::isfinite(flo) && std::isfinite(fhi)) || (flo > 0.0) == (fhi > 0.0))
    throw NumericalError(std::string(what) + " not bracketed");
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                                        boost::math::tools::eps_tolerance<double>(52), iters);
  const double fa = std::abs(f(a)), fb = std::abs(f(b));
  const double root = fa <= fb ? a : b;
  if (std::min(fa, fb) > tol) throw NumericalError(std::string(what) + " did not converge");
  return root;
}

}  // namespace

double irr(std::span<const double> flows, std::span<const double> times, double price) {
  check_inputs(flows, times, price, "irr");
  auto npv = [&](double r) {
    double s = 0.0;
    for (std::size_t i = 0; i < flows.size(); ++i) s += flows[i] * std::pow(1.0 + r, -times[i]);
    return s - price;
  };
  return solve(npv, -0.99, 10.0, 1e-10 * price, "IRR");
}

double z_spread(std::span<const double> flows, std::span<const double> times, std::span<const double> discounts,
                double price) {
  check_inputs(flows, times, price, "z_spread");
  require(discounts.size() == flows.size(), "z_spread: discounts and flows differ in length");
  auto npv = [&](double z) {
    double s = 0.0;
    for (std::size_t i = 0; i < flows.size(); ++i) s += flows[i] * discounts[i] * std::exp(-times[i] * z);
    return s - price;
  };
  return solve(npv, -1.0, 10.0, 1e-10 * price, "Z-spread");
}

GuardedValue annuity(std::span<const double> plan, std::span<const double> discounts,
                     std::span<const double> year_fractions, double notional, double last_amount, std::size_t lapse,
                     double eps) {
  require(eps > 0.0, "annuity: eps must be > 0");
  require(plan.size() + lapse <= discounts.size() && plan.size() + lapse <= year_fractions.size(),
          "annuity: plan plus lapse exceeds the discount grid");
  GuardedValue out;
  double denom = notional - last_amount;
  if (denom < eps) {
    denom = eps;
    out.guarded = true;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < plan.size(); ++i)
    s += discounts[i + lapse] * (plan[i] - last_amount) * year_fractions[i + lapse];
  out.value = 100.0 / denom * s;
  return out;
}

GuardedValue asw(double null_price, double price, double annuity_value, double eps) {
  GuardedValue out;
  double a = annuity_value;
  if (std::abs(a) < eps) {
    a = a < 0.0 ? -eps : eps;
    out.guarded = true;
  }
  out.value = (null_price - price) / a;
  return out;
}

std::array<TrancheMetrics, kTrancheCount> tranche_metrics(const PricingSetup& setup,
                                                          std::span<const double, kTrancheCount> observed) {
  const auto flows = null_scenario_flows(setup);
  const auto& times = setup.base.times;
  const std::size_t n = times.size();
  std::vector<double> discounts(n), years(n, setup.base.period_length);
  for (std::size_t i = 0; i < n; ++i) discounts[i] = setup.curve.discount(times[i]);

  std::array<TrancheMetrics, kTrancheCount> out;
  for (std::size_t t = 0; t < kTrancheCount; ++t) {
    const double notional = setup.deal[t].notional;
    const auto c = flows.flows(t);
    // balance outstanding over each period
    std::vector<double> plan(n);
    for (std::size_t i = 0; i < n; ++i) plan[i] = i == 0 ? notional : flows.periods[i - 1].outstanding[t];

    auto& m = out[t];
    m.name = setup.deal[t].name;
    m.null_price = 100.0 * pv<double>(c, times, setup.curve) / notional;
    m.observed_price = observed[t];
    const double p = observed[t] * notional / 100.0;
    require(p >= 0.0, std::string("metrics: negative observed price for ") + m.name);
    if (p > 0.0) {
      m.irr = irr(c, times, p);
      m.z_spread = z_spread(c, times, discounts, p);
    }
    m.annuity = annuity(plan, discounts, years, notional);
    m.asw = asw(m.null_price, m.observed_price, m.annuity.value);
  }
  return out;
}

std::array<TrancheMetrics, kTrancheCount> tranche_metrics(const PricingSetup& setup) {
  const auto flows = null_scenario_flows(setup);
  std::array<double, kTrancheCount> p0{};
  for (std::size_t t = 0; t < kTrancheCount; ++t)
    p0[t] = 100.0 * pv<double>(flows.flows(t), setup.base.times, setup.curve) / setup.deal[t].notional;
  return tranche_metrics(setup, p0);
}

}  // namespace wf
