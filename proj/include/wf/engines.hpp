#pragma once
// =============================================================================
// Stochastic cash-flow engines
//
// A base schedule is transformed path by path by three engines applied in
// sequence: lognormal amount noise (OneSigma), re-timing of a fraction of every
// flow along Pareto arrival times (MultipleStochasticTime), and a flat haircut
// (Spread). Everything is templated on the scalar so that a path can run on
// doubles or on an AD tape with the engine parameters as leaves. Random draws
// are taken up front (PathDraws) and never depend on the parameters, which is
// what makes bumped re-runs use common random numbers.
// =============================================================================

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "wf/autodiff.hpp"
#include "wf/sampling.hpp"

namespace wf {

struct CashFlowSchedule {
  std::vector<double> times;    // year fractions, strictly increasing
  std::vector<double> amounts;  // currency per period
  double period_length = 0.5;   // years per grid step

  std::size_t size() const { return times.size(); }
  double total() const;
  void validate() const;
  // times = period_length * (1..n)
  static CashFlowSchedule on_grid(std::vector<double> amounts, double period_length);
};

template <class T>
struct BasicEngineParams {
  T sigma{0.0};  // annualized log-volatility
  T mu{0.0};     // annual drift
  T p{0.0};      // fraction of each flow that is re-timed
  T alpha{2.0};  // Pareto shape of the interarrival times
  T rho{0.0};    // interarrival copula correlation
  T w{1.0};      // haircut factor
};

using EngineParams = BasicEngineParams<double>;

void validate(const EngineParams& params);

// Index order used by every parameter vector in the library.
enum class Param : std::size_t { sigma = 0, mu, p, alpha, rho, w };
inline constexpr std::size_t kParamCount = 6;
const char* param_name(Param p);
std::array<double, kParamCount> to_array(const EngineParams& params);
EngineParams from_array(std::span<const double> values);

// Random inputs of one path, independent of the engine parameters.
struct PathDraws {
  std::vector<double> amount_normals;  // one per period
  double timing_factor = 0.0;          // common copula factor
  std::vector<double> timing_idio;     // one per period

  static PathDraws generate(std::size_t n_periods, std::uint64_t seed, std::uint64_t path);
};

// CF_i = base_i exp((mu - sigma^2/2) t_i + sigma sqrt(t_i) Z_i)
template <class T>
std::vector<T> one_sigma_engine(const CashFlowSchedule& base, const T& sigma, const T& mu,
                                std::span<const double> normals);

// A fraction p of flow i arrives at the bucket of t_i = sum_{k<=i} tau_k
// (in grid periods); the rest stays in place. Mass beyond the grid lands in
// the last period, mass before the first bucket in the first.
template <class T>
std::vector<T> multiple_stochastic_time(std::span<const T> input, const T& p, const T& alpha, const T& rho,
                                        const SmoothingConfig& smoothing, double timing_factor,
                                        std::span<const double> timing_idio);

// Per-period stochastic arrival times in grid periods (exposed for tests).
template <class T>
std::vector<T> stochastic_arrival_times(std::size_t n, const T& alpha, const T& rho, double timing_factor,
                                        std::span<const double> timing_idio);

template <class T>
std::vector<T> spread_engine(std::span<const T> input, const T& w);

template <class T>
std::vector<T> compose_engines(const CashFlowSchedule& base, const BasicEngineParams<T>& params,
                               const SmoothingConfig& smoothing, const PathDraws& draws);

// Stream-driven conveniences for single paths on doubles.
std::vector<double> one_sigma_engine(const CashFlowSchedule& base, double sigma, double mu, RandomStream& stream);
std::vector<double> multiple_stochastic_time(std::span<const double> input, double p, double alpha, double rho,
                                             const SmoothingConfig& smoothing, RandomStream& stream);
std::vector<double> compose_engines(const CashFlowSchedule& base, const EngineParams& params,
                                    const SmoothingConfig& smoothing, std::uint64_t seed, std::uint64_t path);

}  // namespace wf
