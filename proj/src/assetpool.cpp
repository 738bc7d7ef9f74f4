#include "wf/assetpool.hpp"

#include <algorithm>
#include <cmath>

#include "wf/errors.hpp"

namespace wf {

namespace {

// The effective sale time is Ts + h with h in {0, 1/2} year.
constexpr double kHalfYear = 0.5;

}  // namespace

void PoolConfig::validate() const {
  require(!asset_types.empty(), "pool: at least one asset type required");
  for (std::size_t i = 0; i < asset_types.size(); ++i) {
    const auto& a = asset_types[i];
    const std::string where = "pool.asset_types[" + std::to_string(i) + "].";
    require(a.v0 > 0.0, where + "v0 must be > 0");
    require(a.lambda_rate > 0.0, where + "lambda_rate must be > 0");
    require(a.delta > 0.0 && a.delta <= 1.0, where + "delta must lie in (0, 1]");
    require(a.count >= 1, where + "count must be >= 1");
  }
  require(rent_yield >= 0.0, "pool.rent_yield must be >= 0");
  require(fee >= 0.0 && fee < 1.0, "pool.fee must lie in [0, 1)");
  require(horizon > 0.0, "pool.horizon must be > 0");
  require(rho >= 0.0 && rho <= 1.0, "pool.rho must lie in [0, 1]");
  require(period > 0.0 && period <= horizon, "pool.period must lie in (0, horizon]");
}

std::size_t PoolConfig::n_periods() const {
  return static_cast<std::size_t>(std::llround(horizon / period));
}

std::size_t PoolConfig::n_assets() const {
  std::size_t n = 0;
  for (const auto& a : asset_types) n += static_cast<std::size_t>(a.count);
  return n;
}

PoolConfig toy_pool() {
  PoolConfig c;
  const double v0[] = {1.0, 1.5, 2.0, 2.5, 3.0};
  const double lambda[] = {0.5, 0.4, 0.45, 0.35, 0.3};
  const double delta[] = {0.98, 0.97, 0.99, 0.96, 0.95};
  for (int i = 0; i < 5; ++i) c.asset_types.push_back({v0[i], lambda[i], delta[i], 20});
  c.rent_yield = 0.05;
  c.fee = 0.10;
  c.horizon = 10.0;
  c.rho = 0.5;
  c.period = 0.5;
  return c;
}

PoolPath simulate_pool_path(const PoolConfig& config, RandomStream& sale_stream, RandomStream& offset_stream) {
  config.validate();
  const std::size_t n = config.n_periods();
  std::vector<double> lambdas;
  std::vector<int> counts;
  for (const auto& a : config.asset_types) {
    lambdas.push_back(a.lambda_rate);
    counts.push_back(a.count);
  }
  const std::vector<double> ts = copula_exponential_times(lambdas, counts, config.rho, sale_stream);

  PoolPath path;
  std::vector<double> amounts(n, 0.0);
  path.sale_time.reserve(ts.size());
  path.sale_period.reserve(ts.size());
  std::size_t k = 0;
  for (const auto& a : config.asset_types) {
    const double rent = a.v0 * config.rent_yield * config.period * (1.0 - config.fee);
    for (int c = 0; c < a.count; ++c, ++k) {
      const double effective = ts[k] + (offset_stream.coin() ? kHalfYear : 0.0);
      // Flows land on the next grid point at or after the effective sale time.
      const auto grid = static_cast<std::size_t>(std::max(1.0, std::ceil(effective / config.period)));
      std::size_t sale = grid;
      double proceeds = a.v0 * std::pow(a.delta, effective);
      std::size_t rent_periods = grid - 1;
      if (grid > n) {
        sale = n;
        proceeds = a.v0 * std::pow(a.delta, config.horizon);
        rent_periods = n;
      }
      for (std::size_t j = 0; j < rent_periods; ++j) amounts[j] += rent;
      amounts[sale - 1] += proceeds;
      path.sale_time.push_back(effective);
      path.sale_period.push_back(sale);
    }
  }
  path.schedule = CashFlowSchedule::on_grid(std::move(amounts), config.period);
  return path;
}

CashFlowSchedule simulate_pool(const PoolConfig& config, std::uint64_t seed, std::uint64_t path) {
  auto sale = RandomStream::for_path(seed, path, StreamPurpose::pool_sale);
  auto offset = RandomStream::for_path(seed, path, StreamPurpose::pool_offset);
  return simulate_pool_path(config, sale, offset).schedule;
}

CashFlowSchedule base_scenario(const PoolConfig& config) {
  config.validate();
  const std::size_t n = config.n_periods();
  const double dt = config.period;
  std::vector<double> amounts(n, 0.0);
  for (const auto& a : config.asset_types) {
    const double lambda = a.lambda_rate;
    const double c = lambda - std::log(a.delta);
    const double rent = a.v0 * config.rent_yield * dt * (1.0 - config.fee);
    auto survival = [&](double y) { return std::exp(-lambda * std::max(y, 0.0)); };
    // P(Ts + h > x), h a fair coin on {0, 1/2}.
    auto unsold = [&](double x) { return 0.5 * (survival(x) + survival(x - kHalfYear)); };
    // E[delta^Ts 1{lo < Ts <= hi}] for Ts ~ Exp(lambda).
    auto discounted_mass = [&](double lo, double hi) {
      lo = std::max(lo, 0.0);
      hi = std::max(hi, 0.0);
      return lambda / c * (std::exp(-c * lo) - std::exp(-c * hi));
    };
    for (std::size_t j = 1; j <= n; ++j) {
      const double lo = static_cast<double>(j - 1) * dt;
      const double hi = static_cast<double>(j) * dt;
      double sale = 0.5 * (discounted_mass(lo, hi) + std::pow(a.delta, kHalfYear) *
                                                         discounted_mass(lo - kHalfYear, hi - kHalfYear));
      if (j == n) sale += std::pow(a.delta, config.horizon) * unsold(hi);
      amounts[j - 1] += a.count * (rent * unsold(hi) + a.v0 * sale);
    }
  }
  return CashFlowSchedule::on_grid(std::move(amounts), dt);
}

}  // namespace wf
