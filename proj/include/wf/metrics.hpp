#pragma once
// Single-scenario valuation metrics: IRR, Z-spread, annuity, asset swap spread.

#include <array>
#include <optional>
#include <span>
#include <string>

#include "wf/pricing.hpp"

namespace wf {

// r such that sum C_i (1 + r)^-t_i = price, searched on (-0.99, 10).
double irr(std::span<const double> flows, std::span<const double> times, double price);

// z such that sum C_i D_i exp(-t_i z) = price, searched on [-1, 10].
double z_spread(std::span<const double> flows, std::span<const double> times, std::span<const double> discounts,
                double price);

struct GuardedValue {
  double value = 0.0;
  bool guarded = false;
};

// 100 / max(N - L, eps) * sum_i D_{i+T} (A_i - L) Y_{i+T}
GuardedValue annuity(std::span<const double> plan, std::span<const double> discounts,
                     std::span<const double> year_fractions, double notional, double last_amount = 0.0,
                     std::size_t lapse = 0, double eps = 1e-12);

// (P0 - P) / A, with |A| < eps replaced by +-eps and flagged.
GuardedValue asw(double null_price, double price, double annuity_value, double eps = 1e-12);

struct TrancheMetrics {
  std::string name;
  double null_price = 0.0;      // price points
  double observed_price = 0.0;  // price points
  // empty when the observed price is 0: a worthless claim has no finite yield
  std::optional<double> irr;
  std::optional<double> z_spread;
  GuardedValue annuity;
  GuardedValue asw;
};

// Metrics of every tranche on the null-scenario flows. Observed prices are in
// price points; the null-scenario price is used where none is given.
std::array<TrancheMetrics, kTrancheCount> tranche_metrics(const PricingSetup& setup,
                                                          std::span<const double, kTrancheCount> observed);
std::array<TrancheMetrics, kTrancheCount> tranche_metrics(const PricingSetup& setup);

}  // namespace wf
