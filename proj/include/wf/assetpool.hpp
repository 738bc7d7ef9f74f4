#pragma once
// Toy collateral pool: assets earn semi-annual net rent until they are sold at
// a copula-correlated exponential time, then pay their depreciated value.

#include <vector>

#include "wf/engines.hpp"
#include "wf/sampling.hpp"

namespace wf {

struct AssetTypeSpec {
  double v0 = 1.0;           // initial value
  double lambda_rate = 0.5;  // annual sale intensity
  double delta = 1.0;        // annual price decay factor
  int count = 1;
};

struct PoolConfig {
  std::vector<AssetTypeSpec> asset_types;
  double rent_yield = 0.05;  // annual, on v0
  double fee = 0.10;         // collection fee on rent
  double horizon = 10.0;     // years
  double rho = 0.5;          // sale-time copula correlation
  double period = 0.5;       // years per grid step

  void validate() const;
  std::size_t n_periods() const;
  std::size_t n_assets() const;
};

// The pool from the worked example: 5 types x 20 assets, 10 years, semi-annual.
PoolConfig toy_pool();

struct PoolPath {
  CashFlowSchedule schedule;
  std::vector<double> sale_time;         // effective (offset) sale time, years
  std::vector<std::size_t> sale_period;  // 1-based grid index of the sale flow
};

// One simulated path. Sale times consume `sale_stream`, offsets `offset_stream`.
PoolPath simulate_pool_path(const PoolConfig& config, RandomStream& sale_stream, RandomStream& offset_stream);
CashFlowSchedule simulate_pool(const PoolConfig& config, std::uint64_t seed, std::uint64_t path);

// Analytic per-period expectation of simulate_pool.
CashFlowSchedule base_scenario(const PoolConfig& config);

}  // namespace wf
