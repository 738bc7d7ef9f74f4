#include "wf/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wf/errors.hpp"
#include "wf/parallel.hpp"

namespace wf {

namespace {

constexpr double kBasisPoint = 1e-4;

struct PathResult {
  std::array<double, kTrancheCount> pv{};
  double collections = 0.0;
  double collections_pv = 0.0;
};

void check_path(const std::array<double, kTrancheCount>& pv, std::size_t path) {
  for (std::size_t t = 0; t < kTrancheCount; ++t)
    if (!std::isfinite(pv[t]))
      throw NumericalError("pricing: non-finite " + std::string(tranche_key(t)) + " PV on path " +
                           std::to_string(path));
}

}  // namespace

DiscountCurve::DiscountCurve(std::vector<double> times, std::vector<double> zero_rates)
    : times_(std::move(times)), rates_(std::move(zero_rates)) {
  require(!times_.empty(), "curve: at least one pillar required");
  require(times_.size() == rates_.size(), "curve: times and zero_rates differ in length");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    require(std::isfinite(times_[i]) && times_[i] >= 0.0, "curve: pillar times must be finite and >= 0");
    require(std::isfinite(rates_[i]) && rates_[i] > -1.0, "curve: zero rates must be finite and > -100%");
    if (i > 0) require(times_[i] > times_[i - 1], "curve: pillar times must be strictly increasing");
  }
}

double DiscountCurve::zero_rate(double t) const {
  if (t <= times_.front()) return rates_.front();
  if (t >= times_.back()) return rates_.back();
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times_.begin());
  const double w = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
  return rates_[i - 1] + w * (rates_[i] - rates_[i - 1]);
}

double DiscountCurve::discount(double t) const {
  if (t <= 0.0) return 1.0;
  return std::pow(1.0 + zero_rate(t), -t);
}

DiscountCurve DiscountCurve::shifted(double bump) const {
  auto rates = rates_;
  for (auto& r : rates) r += bump;
  return DiscountCurve(times_, std::move(rates));
}

std::vector<double> DiscountCurve::forward_fixings(std::span<const double> times, double period) const {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back((discount(t - period) / discount(t) - 1.0) / period);
  return out;
}

const char* to_string(RateBump bump) {
  switch (bump) {
    case RateBump::index: return "index";
    case RateBump::discount: return "discount";
    default: return "parallel";
  }
}

RateBump parse_rate_bump(const std::string& text) {
  if (text == "index") return RateBump::index;
  if (text == "discount") return RateBump::discount;
  if (text == "parallel") return RateBump::parallel;
  throw ConfigError("dv01_bump must be 'index', 'discount' or 'parallel', got '" + text + "'");
}

std::array<double, kTrancheCount> PriceReport::prices() const {
  std::array<double, kTrancheCount> p{};
  for (std::size_t t = 0; t < kTrancheCount; ++t) p[t] = tranches[t].price;
  return p;
}

void PricingSetup::validate() const {
  base.validate();
  smoothing.validate();
  deal.validate(base.size());
  if (index_fixings) {
    require(index_fixings->size() == base.size(), "index_fixings: expected one fixing per period");
    for (double f : *index_fixings) require(std::isfinite(f), "index_fixings: values must be finite");
  }
}

std::vector<double> PricingSetup::fixings_for(const DiscountCurve& c, double bump) const {
  if (!index_fixings) return c.forward_fixings(base.times, base.period_length);
  auto f = *index_fixings;
  for (auto& x : f) x += bump;
  return f;
}

MonteCarloPricer::MonteCarloPricer(PricingSetup setup, SimulationOptions options)
    : setup_(std::move(setup)), options_(options) {
  setup_.validate();
  require(options_.n_paths >= 1, "pricing: n_paths must be >= 1");
  const std::size_t n = setup_.base.size();
  draws_.resize(options_.n_paths);
  parallel_for(options_.n_paths, options_.workers, [&](std::size_t b, std::size_t e, unsigned) {
    for (std::size_t i = b; i < e; ++i) draws_[i] = PathDraws::generate(n, options_.seed, i);
  });
}

MonteCarloPricer::Scenario MonteCarloPricer::base_scenario() const {
  return {setup_.curve, setup_.fixings_for(setup_.curve, 0.0), 1.0};
}

MonteCarloPricer::Scenario MonteCarloPricer::rate_scenario(RateBump bump, double size) const {
  Scenario s = base_scenario();
  if (bump != RateBump::discount)
    for (auto& f : s.fixings) f += size;
  if (bump != RateBump::index) s.curve = setup_.curve.shifted(size);
  // derived fixings follow the bumped curve exactly
  if (bump == RateBump::parallel && !setup_.index_fixings) s.fixings = setup_.fixings_for(s.curve, 0.0);
  return s;
}

PriceReport MonteCarloPricer::price_impl(const EngineParams& params, Mode mode, const Scenario& scenario,
                                         bool keep_samples) const {
  validate(params);
  const auto& base = setup_.base;
  const std::size_t n_paths = options_.n_paths;
  std::vector<double> discounts(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) discounts[i] = scenario.curve.discount(base.times[i]);

  CashFlowSchedule scaled = base;
  if (scenario.base_scale != 1.0)
    for (auto& a : scaled.amounts) a *= scenario.base_scale;

  std::vector<PathResult> results(n_paths);
  parallel_for(n_paths, options_.workers, [&](std::size_t b, std::size_t e, unsigned) {
    for (std::size_t path = b; path < e; ++path) {
      const auto collections = compose_engines<double>(scaled, params, setup_.smoothing, draws_[path]);
      const auto flows = run_waterfall<double>(collections, setup_.deal, scenario.fixings, mode, setup_.smoothing);
      PathResult& r = results[path];
      for (std::size_t j = 0; j < flows.periods.size(); ++j) {
        const auto& period = flows.periods[j];
        for (std::size_t t = 0; t < kTrancheCount; ++t) r.pv[t] += period.flow(t) * discounts[j];
        r.collections += collections[j];
        r.collections_pv += collections[j] * discounts[j];
      }
      check_path(r.pv, path);
    }
  });

  PriceReport report;
  report.n_paths = n_paths;
  report.seed = options_.seed;
  report.mode = mode;
  for (std::size_t t = 0; t < kTrancheCount; ++t) {
    auto& tp = report.tranches[t];
    tp.name = setup_.deal[t].name;
    tp.notional = setup_.deal[t].notional;
    const double scale = 100.0 / tp.notional;
    double sum = 0.0;
    for (const auto& r : results) sum += r.pv[t] * scale;
    tp.price = sum / static_cast<double>(n_paths);
    double ss = 0.0;
    for (const auto& r : results) ss += (r.pv[t] * scale - tp.price) * (r.pv[t] * scale - tp.price);
    tp.std_error = n_paths > 1 ? std::sqrt(ss / static_cast<double>(n_paths - 1) / static_cast<double>(n_paths)) : 0.0;
    if (keep_samples) {
      tp.samples.reserve(n_paths);
      for (const auto& r : results) tp.samples.push_back(r.pv[t] * scale);
    }
  }
  for (const auto& r : results) {
    report.mean_collections += r.collections;
    report.mean_collections_pv += r.collections_pv;
  }
  report.mean_collections /= static_cast<double>(n_paths);
  report.mean_collections_pv /= static_cast<double>(n_paths);
  return report;
}

PriceReport MonteCarloPricer::price(const EngineParams& params, Mode mode) const {
  return price_impl(params, mode, base_scenario(), true);
}

std::array<double, kTrancheCount> MonteCarloPricer::mean_prices(const EngineParams& params, Mode mode) const {
  return price_impl(params, mode, base_scenario(), false).prices();
}

SensitivityReport MonteCarloPricer::sensitivities(const EngineParams& params) const {
  validate(params);
  SensitivityReport out;
  out.prices = price(params, Mode::smooth);

  const auto& base = setup_.base;
  const std::size_t n = base.size();
  const std::size_t n_paths = options_.n_paths;
  const auto fixings = setup_.fixings_for(setup_.curve, 0.0);
  std::vector<double> discounts(n);
  for (std::size_t i = 0; i < n; ++i) discounts[i] = setup_.curve.discount(base.times[i]);

  using Grad = std::array<std::array<double, kParamCount>, kTrancheCount>;
  std::vector<Grad> per_path(n_paths);
  const unsigned workers = std::max(1u, std::min<unsigned>(options_.workers, static_cast<unsigned>(n_paths)));
  parallel_for(n_paths, workers, [&](std::size_t b, std::size_t e, unsigned) {
    Tape tape(setup_.smoothing.eps);
    std::vector<double> adjoints, grad;
    for (std::size_t path = b; path < e; ++path) {
      tape.clear();
      const auto values = to_array(params);
      std::array<Var, kParamCount> leaves;
      for (std::size_t k = 0; k < kParamCount; ++k) leaves[k] = tape.variable(values[k]);
      const BasicEngineParams<Var> vp{leaves[0], leaves[1], leaves[2], leaves[3], leaves[4], leaves[5]};
      const auto collections = compose_engines<Var>(base, vp, setup_.smoothing, draws_[path]);
      const auto flows = run_waterfall<Var>(collections, setup_.deal, fixings, Mode::smooth, setup_.smoothing);
      for (std::size_t t = 0; t < kTrancheCount; ++t) {
        Var total = 0.0;
        for (std::size_t j = 0; j < n; ++j) total = total + flows.periods[j].flow(t) * discounts[j];
        const Var price = total * (100.0 / setup_.deal[t].notional);
        if (price.is_constant()) {
          per_path[path][t].fill(0.0);
          continue;
        }
        tape.backward(price, adjoints, grad);
        for (std::size_t k = 0; k < kParamCount; ++k) {
          if (!std::isfinite(grad[k]))
            throw NumericalError("sensitivities: non-finite gradient on path " + std::to_string(path));
          per_path[path][t][k] = grad[k];
        }
      }
    }
  });
  for (const auto& g : per_path)
    for (std::size_t t = 0; t < kTrancheCount; ++t)
      for (std::size_t k = 0; k < kParamCount; ++k) out.gradient[t][k] += g[t][k];
  for (auto& row : out.gradient)
    for (auto& v : row) v /= static_cast<double>(n_paths);

  const auto p0 = out.prices.prices();
  auto bumped = [&](RateBump bump, double size) { return price_impl(params, Mode::smooth, rate_scenario(bump, size), false).prices(); };
  const auto p_down = bumped(setup_.dv01_bump, -kBasisPoint);
  for (RateBump bump : {RateBump::index, RateBump::discount, RateBump::parallel}) {
    const auto p_up = bumped(bump, kBasisPoint);
    for (std::size_t t = 0; t < kTrancheCount; ++t) out.dv01_by_bump[static_cast<std::size_t>(bump)][t] = p_up[t] - p0[t];
  }
  out.dv01_bump = setup_.dv01_bump;
  const double total = base.total();
  require(total > 0.0, "sensitivities: BV01 needs a positive base total");
  const auto p_bv = price_impl(params, Mode::smooth, {setup_.curve, fixings, (total + 1.0) / total}, false).prices();
  for (std::size_t t = 0; t < kTrancheCount; ++t) {
    out.dv01[t] = out.dv01_by_bump[static_cast<std::size_t>(setup_.dv01_bump)][t];
    out.dv01_down[t] = p_down[t] - p0[t];
    out.bv01[t] = p_bv[t] - p0[t];
  }
  return out;
}

std::vector<ForwardPoint> MonteCarloPricer::forward_prices(const EngineParams& params,
                                                           std::span<const double> eval_dates, Mode mode) const {
  validate(params);
  const auto& base = setup_.base;
  const std::size_t n = base.size();
  const double last = base.times.back();
  for (double d : eval_dates)
    require(std::isfinite(d) && d >= 0.0 && d <= last, "forward_prices: evaluation dates must lie in [0, last period]");
  const auto fixings = setup_.fixings_for(setup_.curve, 0.0);
  const std::size_t n_dates = eval_dates.size();
  const std::size_t n_paths = options_.n_paths;

  // per path, per date: price and remaining value for each tranche
  std::vector<std::vector<ForwardPoint>> per_path(n_paths);
  parallel_for(n_paths, options_.workers, [&](std::size_t b, std::size_t e, unsigned) {
    for (std::size_t path = b; path < e; ++path) {
      const auto collections = compose_engines<double>(base, params, setup_.smoothing, draws_[path]);
      const auto flows = run_waterfall<double>(collections, setup_.deal, fixings, mode, setup_.smoothing);
      auto& pts = per_path[path];
      pts.resize(n_dates);
      for (std::size_t d = 0; d < n_dates; ++d) {
        const double date = eval_dates[d];
        const double d0 = setup_.curve.discount(date);
        // periods paid strictly after `date`; outstanding is the balance after the last paid one
        std::size_t first_future = 0;
        while (first_future < n && base.times[first_future] <= date) ++first_future;
        for (std::size_t t = 0; t < kTrancheCount; ++t) {
          double value = 0.0;
          for (std::size_t j = first_future; j < n; ++j)
            value += flows.periods[j].flow(t) * setup_.curve.discount(base.times[j]) / d0;
          const double outstanding =
              first_future == 0 ? setup_.deal[t].notional : flows.periods[first_future - 1].outstanding[t];
          pts[d].remaining_value[t] = value;
          pts[d].price[t] = outstanding > 1e-9 * setup_.deal[t].notional ? 100.0 * value / outstanding : 100.0;
        }
      }
    }
  });

  std::vector<ForwardPoint> out(n_dates);
  for (std::size_t d = 0; d < n_dates; ++d) {
    out[d].date = eval_dates[d];
    for (const auto& pts : per_path)
      for (std::size_t t = 0; t < kTrancheCount; ++t) {
        out[d].price[t] += pts[d].price[t];
        out[d].remaining_value[t] += pts[d].remaining_value[t];
      }
    for (std::size_t t = 0; t < kTrancheCount; ++t) {
      out[d].price[t] /= static_cast<double>(n_paths);
      out[d].remaining_value[t] /= static_cast<double>(n_paths);
    }
  }
  return out;
}

TrancheCashFlows MonteCarloPricer::path_flows(const EngineParams& params, std::size_t path, Mode mode) const {
  require(path < options_.n_paths, "path_flows: path index out of range");
  const auto collections = path_collections(params, path);
  return run_waterfall<double>(collections, setup_.deal, setup_.fixings_for(setup_.curve, 0.0), mode,
                               setup_.smoothing);
}

std::vector<double> MonteCarloPricer::path_collections(const EngineParams& params, std::size_t path) const {
  require(path < options_.n_paths, "path_collections: path index out of range");
  validate(params);
  return compose_engines<double>(setup_.base, params, setup_.smoothing, draws_[path]);
}

PriceReport price_tranches(const DealConfig& deal, const CashFlowSchedule& base, const EngineParams& params,
                           const DiscountCurve& curve, std::size_t n_paths, std::uint64_t seed, Mode mode,
                           const SmoothingConfig& smoothing) {
  PricingSetup setup{deal, base, curve, std::nullopt, smoothing};
  return MonteCarloPricer(std::move(setup), {n_paths, seed, 1}).price(params, mode);
}

SensitivityReport sensitivities(const PricingSetup& setup, const EngineParams& params, const SimulationOptions& options,
                                Mode mode) {
  if (mode != Mode::smooth) throw ConfigError("gradients require smooth mode");
  return MonteCarloPricer(setup, options).sensitivities(params);
}

TrancheCashFlows null_scenario_flows(const PricingSetup& setup) {
  setup.validate();
  return run_waterfall<double>(setup.base.amounts, setup.deal, setup.fixings_for(setup.curve, 0.0), Mode::exact,
                               setup.smoothing);
}

Histogram price_distribution(std::span<const double> samples, std::size_t bins) {
  require(bins >= 1, "price_distribution: bins must be >= 1");
  require(!samples.empty(), "price_distribution: empty sample");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi <= lo) hi = lo + 1.0;
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double x : samples) {
    auto b = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(bins));
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

std::size_t count_modes(std::span<const double> samples, double bandwidth_scale, double min_height) {
  require(!samples.empty(), "count_modes: empty sample");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / std::max(1.0, n - 1.0));
  const double iqr = x[static_cast<std::size_t>(0.75 * (n - 1))] - x[static_cast<std::size_t>(0.25 * (n - 1))];
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  const double bw = bandwidth_scale * 0.9 * spread * std::pow(n, -0.2);
  if (!(bw > 0.0)) return 1;

  constexpr std::size_t kGrid = 512;
  const double lo = x.front() - 3.0 * bw, hi = x.back() + 3.0 * bw;
  std::vector<double> density(kGrid, 0.0);
  for (std::size_t g = 0; g < kGrid; ++g) {
    const double at = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(kGrid - 1);
    const auto first = std::lower_bound(x.begin(), x.end(), at - 6.0 * bw);
    const auto last = std::upper_bound(x.begin(), x.end(), at + 6.0 * bw);
    for (auto it = first; it != last; ++it) {
      const double u = (at - *it) / bw;
      density[g] += std::exp(-0.5 * u * u);
    }
  }
  const double peak = *std::max_element(density.begin(), density.end());
  std::size_t modes = 0;
  for (std::size_t g = 0; g < kGrid; ++g) {
    const double left = g == 0 ? 0.0 : density[g - 1];
    const double right = g + 1 == kGrid ? 0.0 : density[g + 1];
    if (density[g] > left && density[g] >= right && density[g] >= min_height * peak) ++modes;
  }
  return std::max<std::size_t>(modes, 1);
}

}  // namespace wf
