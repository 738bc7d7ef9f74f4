#include "wf/engines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <type_traits>

#include "wf/errors.hpp"

namespace wf {

double CashFlowSchedule::total() const { return std::accumulate(amounts.begin(), amounts.end(), 0.0); }

void CashFlowSchedule::validate() const {
  require(times.size() == amounts.size(), "schedule: times and amounts differ in length");
  require(period_length > 0.0, "schedule: period_length must be > 0");
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(std::isfinite(amounts[i]), "schedule: non-finite amount at period " + std::to_string(i + 1));
    if (i > 0) require(times[i] > times[i - 1], "schedule: times must be strictly increasing");
  }
}

CashFlowSchedule CashFlowSchedule::on_grid(std::vector<double> amounts, double period_length) {
  CashFlowSchedule s;
  s.period_length = period_length;
  s.times.resize(amounts.size());
  for (std::size_t i = 0; i < amounts.size(); ++i) s.times[i] = period_length * static_cast<double>(i + 1);
  s.amounts = std::move(amounts);
  return s;
}

void validate(const EngineParams& params) {
  require(params.sigma >= 0.0, "engine params: sigma must be >= 0");
  require(std::isfinite(params.mu), "engine params: mu must be finite");
  require(params.p >= 0.0 && params.p <= 1.0, "engine params: p must lie in [0, 1]");
  require(params.alpha > 1.0, "engine params: alpha must be > 1 (infinite mean)");
  require(params.rho >= 0.0 && params.rho <= 1.0, "engine params: rho must lie in [0, 1]");
  require(params.w > 0.0, "engine params: w must be > 0");
}

const char* param_name(Param p) {
  switch (p) {
    case Param::sigma: return "sigma";
    case Param::mu: return "mu";
    case Param::p: return "p";
    case Param::alpha: return "alpha";
    case Param::rho: return "rho";
    case Param::w: return "w";
  }
  return "?";
}

std::array<double, kParamCount> to_array(const EngineParams& params) {
  return {params.sigma, params.mu, params.p, params.alpha, params.rho, params.w};
}

EngineParams from_array(std::span<const double> v) {
  require(v.size() == kParamCount, "engine params: expected 6 values");
  return EngineParams{v[0], v[1], v[2], v[3], v[4], v[5]};
}

PathDraws PathDraws::generate(std::size_t n_periods, std::uint64_t seed, std::uint64_t path) {
  PathDraws d;
  auto amount = RandomStream::for_path(seed, path, StreamPurpose::amount);
  d.amount_normals.resize(n_periods);
  for (auto& z : d.amount_normals) z = amount.normal();
  auto timing = RandomStream::for_path(seed, path, StreamPurpose::timing);
  d.timing_factor = timing.normal();
  d.timing_idio.resize(n_periods);
  for (auto& z : d.timing_idio) z = timing.normal();
  return d;
}

template <class T>
std::vector<T> one_sigma_engine(const CashFlowSchedule& base, const T& sigma, const T& mu,
                                std::span<const double> normals) {
  using std::exp;
  using std::sqrt;
  require(normals.size() >= base.size(), "one_sigma_engine: not enough normal draws");
  require(value_of(sigma) >= 0.0, "one_sigma_engine: sigma must be >= 0");
  const T drift = mu - 0.5 * sigma * sigma;
  std::vector<T> out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base.amounts[i] == 0.0) {
      out[i] = T(0.0);
      continue;
    }
    const double t = base.times[i];
    out[i] = base.amounts[i] * exp(drift * t + sigma * (std::sqrt(t) * normals[i]));
  }
  return out;
}

template <class T>
std::vector<T> stochastic_arrival_times(std::size_t n, const T& alpha, const T& rho, double timing_factor,
                                        std::span<const double> timing_idio) {
  using std::exp;
  using std::log;
  using std::sqrt;
  require(value_of(alpha) > 1.0, "stochastic time: alpha must be > 1 (infinite mean)");
  require(value_of(rho) >= 0.0 && value_of(rho) <= 1.0, "stochastic time: rho must lie in [0, 1]");
  require(timing_idio.size() >= n, "stochastic time: not enough normal draws");
  const T a = sqrt(rho);
  const T b = sqrt(1.0 - rho);
  const T x_m = (alpha - 1.0) / alpha;
  const T inv_alpha = 1.0 / alpha;
  std::vector<T> arrival(n);
  T t = T(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const T z = a * timing_factor + b * timing_idio[i];
    // tau = x_m (1 - Phi(z))^(-1/alpha), written on the survival side.
    const T tau = x_m * exp(-log(normal_cdf(-z)) * inv_alpha);
    t = t + tau;
    arrival[i] = t;
  }
  return arrival;
}

template <class T>
std::vector<T> multiple_stochastic_time(std::span<const T> input, const T& p, const T& alpha, const T& rho,
                                        const SmoothingConfig& smoothing, double timing_factor,
                                        std::span<const double> timing_idio) {
  require(value_of(p) >= 0.0 && value_of(p) <= 1.0, "stochastic time: p must lie in [0, 1]");
  const std::size_t n = input.size();
  std::vector<T> out(n);
  if (n == 0) return out;
  for (std::size_t j = 0; j < n; ++j) out[j] = (1.0 - p) * input[j];
  if (value_of(p) == 0.0 && std::is_same_v<T, double>) return out;

  const std::vector<T> arrival = stochastic_arrival_times(n, alpha, rho, timing_factor, timing_idio);
  const double k = smoothing.k;
  // Buckets further than this from the arrival contribute below exp(-40).
  const double reach = 40.0 / k;
  const auto last = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (value_of(input[i]) == 0.0) continue;
    const T moved = p * input[i];
    const T& t = arrival[i];
    const double tv = value_of(t);
    // Bucket b collects arrivals in (b + 0.5, b + 1.5) grid periods.
    const double lo = std::clamp(std::ceil(tv - 1.5 - reach), 0.0, last);
    const double hi = std::clamp(std::floor(tv - 0.5 + reach), lo, last);
    for (auto b = static_cast<std::size_t>(lo); b <= static_cast<std::size_t>(hi); ++b) {
      const auto bucket = static_cast<double>(b);
      T mask;
      if (n == 1) {
        mask = T(1.0);
      } else if (b == 0) {
        mask = 1.0 - sigmoid(t - 1.5, k);
      } else if (b == n - 1) {
        mask = sigmoid(t - (bucket + 0.5), k);
      } else {
        mask = double_sigmoid_mask(t - 0.5, bucket, k);
      }
      out[b] = out[b] + moved * mask;
    }
  }
  return out;
}

template <class T>
std::vector<T> spread_engine(std::span<const T> input, const T& w) {
  require(value_of(w) > 0.0, "spread engine: w must be > 0");
  std::vector<T> out(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = w * input[i];
  return out;
}

template <class T>
std::vector<T> compose_engines(const CashFlowSchedule& base, const BasicEngineParams<T>& params,
                               const SmoothingConfig& smoothing, const PathDraws& draws) {
  const std::vector<T> amounts = one_sigma_engine<T>(base, params.sigma, params.mu, draws.amount_normals);
  const std::vector<T> timed = multiple_stochastic_time<T>(amounts, params.p, params.alpha, params.rho, smoothing,
                                                           draws.timing_factor, draws.timing_idio);
  return spread_engine<T>(timed, params.w);
}

#define WF_INSTANTIATE_ENGINES(T)                                                                               \
  template std::vector<T> one_sigma_engine<T>(const CashFlowSchedule&, const T&, const T&,                      \
                                              std::span<const double>);                                         \
  template std::vector<T> stochastic_arrival_times<T>(std::size_t, const T&, const T&, double,                  \
                                                      std::span<const double>);                                 \
  template std::vector<T> multiple_stochastic_time<T>(std::span<const T>, const T&, const T&, const T&,         \
                                                      const SmoothingConfig&, double, std::span<const double>); \
  template std::vector<T> spread_engine<T>(std::span<const T>, const T&);                                       \
  template std::vector<T> compose_engines<T>(const CashFlowSchedule&, const BasicEngineParams<T>&,              \
                                             const SmoothingConfig&, const PathDraws&);

WF_INSTANTIATE_ENGINES(double)
WF_INSTANTIATE_ENGINES(Var)

#undef WF_INSTANTIATE_ENGINES

std::vector<double> one_sigma_engine(const CashFlowSchedule& base, double sigma, double mu, RandomStream& stream) {
  std::vector<double> z(base.size());
  for (auto& zi : z) zi = stream.normal();
  return one_sigma_engine<double>(base, sigma, mu, z);
}

std::vector<double> multiple_stochastic_time(std::span<const double> input, double p, double alpha, double rho,
                                             const SmoothingConfig& smoothing, RandomStream& stream) {
  const double factor = stream.normal();
  std::vector<double> idio(input.size());
  for (auto& z : idio) z = stream.normal();
  return multiple_stochastic_time<double>(input, p, alpha, rho, smoothing, factor, idio);
}

std::vector<double> compose_engines(const CashFlowSchedule& base, const EngineParams& params,
                                    const SmoothingConfig& smoothing, std::uint64_t seed, std::uint64_t path) {
  validate(params);
  return compose_engines<double>(base, params, smoothing, PathDraws::generate(base.size(), seed, path));
}

}  // namespace wf
