#pragma once
// =============================================================================
// Monte Carlo tranche valuation
//
// Per path: engines -> waterfall -> discounted tranche flows. Prices are the
// path-mean PV over the initial notional, in points (100 = par). Random draws
// for all paths are generated once per pricer, so every repricing with
// different parameters, curve or base scaling uses common random numbers.
// =============================================================================

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wf/autodiff.hpp"
#include "wf/engines.hpp"
#include "wf/waterfall.hpp"

namespace wf {

// Zero curve with annually compounded rates, D(t) = (1 + r(t))^-t. Rates are
// interpolated linearly in time and extrapolated flat.
class DiscountCurve {
 public:
  DiscountCurve() : DiscountCurve({1.0}, {0.0}) {}
  DiscountCurve(std::vector<double> times, std::vector<double> zero_rates);
  static DiscountCurve flat(double rate) { return DiscountCurve({1.0}, {rate}); }

  double zero_rate(double t) const;
  double discount(double t) const;
  // D(from, to) = D(to) / D(from)
  double discount(double from, double to) const { return discount(to) / discount(from); }
  DiscountCurve shifted(double bump) const;
  // Simple forward rate over each period (t - period, t].
  std::vector<double> forward_fixings(std::span<const double> times, double period) const;

  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& zero_rates() const { return rates_; }

 private:
  std::vector<double> times_;
  std::vector<double> rates_;
};

// sum_i flows_i D(t_i)
template <class T>
T pv(std::span<const T> flows, std::span<const double> times, const DiscountCurve& curve) {
  T total = T(0.0);
  for (std::size_t i = 0; i < flows.size(); ++i) total = total + flows[i] * curve.discount(times[i]);
  return total;
}

// What a +1bp DV01 bump moves. `index` shifts the fixings that set the
// floating coupons and keeps discounting fixed; `discount` shifts only the
// discount curve; `parallel` shifts the curve and re-derives (or shifts) the
// fixings with it.
enum class RateBump { index, discount, parallel };
const char* to_string(RateBump bump);
RateBump parse_rate_bump(const std::string& text);

struct PricingSetup {
  DealConfig deal;
  CashFlowSchedule base;
  DiscountCurve curve;
  std::optional<std::vector<double>> index_fixings;  // default: curve forwards
  SmoothingConfig smoothing;
  RateBump dv01_bump = RateBump::index;

  void validate() const;
  std::vector<double> fixings_for(const DiscountCurve& curve, double bump) const;
};

struct SimulationOptions {
  std::size_t n_paths = 10'000;
  std::uint64_t seed = 42;
  unsigned workers = 1;
};

struct TranchePrice {
  std::string name;
  double notional = 0.0;
  double price = 0.0;      // mean PV / notional * 100
  double std_error = 0.0;  // of the price
  std::vector<double> samples;  // per-path price
};

struct PriceReport {
  std::array<TranchePrice, kTrancheCount> tranches;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  Mode mode = Mode::exact;
  double mean_collections = 0.0;  // undiscounted, per path
  double mean_collections_pv = 0.0;

  std::array<double, kTrancheCount> prices() const;
};

struct SensitivityReport {
  PriceReport prices;  // smooth mode
  // d price / d param on the 100-price scale, indexed [tranche][Param]
  std::array<std::array<double, kParamCount>, kTrancheCount> gradient{};
  RateBump dv01_bump = RateBump::index;
  std::array<double, kTrancheCount> dv01{};       // +1bp under dv01_bump
  std::array<double, kTrancheCount> dv01_down{};  // price(-1bp) - price under dv01_bump
  // +1bp under each convention, for comparison
  std::array<std::array<double, kTrancheCount>, 3> dv01_by_bump{};
  std::array<double, kTrancheCount> bv01{};       // +1 currency unit of expected collections
};

struct ForwardPoint {
  double date = 0.0;
  std::array<double, kTrancheCount> price{};           // % of path outstanding, par once redeemed
  std::array<double, kTrancheCount> remaining_value{};  // expected PV at date of later flows, currency
};

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;
};

class MonteCarloPricer {
 public:
  MonteCarloPricer(PricingSetup setup, SimulationOptions options);

  PriceReport price(const EngineParams& params, Mode mode) const;
  // Mean prices only; the hot loop of calibration.
  std::array<double, kTrancheCount> mean_prices(const EngineParams& params, Mode mode) const;
  SensitivityReport sensitivities(const EngineParams& params) const;
  std::vector<ForwardPoint> forward_prices(const EngineParams& params, std::span<const double> eval_dates,
                                           Mode mode) const;

  // Tranche cash flows of a single path (exposed for tests and reports).
  TrancheCashFlows path_flows(const EngineParams& params, std::size_t path, Mode mode) const;
  std::vector<double> path_collections(const EngineParams& params, std::size_t path) const;

  const PricingSetup& setup() const { return setup_; }
  const SimulationOptions& options() const { return options_; }

 private:
  struct Scenario {
    DiscountCurve curve;
    std::vector<double> fixings;
    double base_scale = 1.0;
  };
  Scenario rate_scenario(RateBump bump, double size) const;
  PriceReport price_impl(const EngineParams& params, Mode mode, const Scenario& scenario, bool keep_samples) const;
  Scenario base_scenario() const;

  PricingSetup setup_;
  SimulationOptions options_;
  std::vector<PathDraws> draws_;
};

PriceReport price_tranches(const DealConfig& deal, const CashFlowSchedule& base, const EngineParams& params,
                           const DiscountCurve& curve, std::size_t n_paths, std::uint64_t seed, Mode mode,
                           const SmoothingConfig& smoothing = {});

// Throws ConfigError unless mode is smooth.
SensitivityReport sensitivities(const PricingSetup& setup, const EngineParams& params, const SimulationOptions& options,
                                Mode mode = Mode::smooth);

// Deterministic (null-scenario) tranche flows: the base schedule through the
// exact waterfall with no engines applied.
TrancheCashFlows null_scenario_flows(const PricingSetup& setup);

Histogram price_distribution(std::span<const double> samples, std::size_t bins);
// Local maxima of a Gaussian KDE (Silverman bandwidth times `bandwidth_scale`)
// that reach at least `min_height` of the global maximum.
std::size_t count_modes(std::span<const double> samples, double bandwidth_scale = 1.0, double min_height = 0.05);

}  // namespace wf
