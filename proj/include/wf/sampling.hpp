#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace wf {

// Purpose tags mixed into per-path stream ids so that each consumer of
// randomness on a path reads an independent sequence.
enum class StreamPurpose : std::uint32_t {
  amount = 1,      // OneSigma engine normals
  timing = 2,      // stochastic-time engine factor + idiosyncratic normals
  pool_sale = 3,   // asset sale-time copula normals
  pool_offset = 4, // half-period offset coins
  optimizer = 5,   // differential evolution
};

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based generator (Philox4x32-10). The sequence is a pure function of
// (seed, stream_id, draw index), so streams can be created anywhere, in any
// order, on any thread.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  static std::uint64_t derive_id(std::uint64_t path, StreamPurpose purpose);
  static RandomStream for_path(std::uint64_t seed, std::uint64_t path, StreamPurpose purpose) {
    return RandomStream(seed, derive_id(path, purpose));
  }

  std::uint64_t next_u64();
  // 53-bit uniform on [0, 1).
  double uniform();
  // 53-bit uniform on (0, 1), never 0 or 1.
  double uniform_open();
  double normal();
  bool coin() { return (next_u64() >> 63) != 0; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  unsigned used_ = 2;
};

// Philox4x32-10 block function: exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

// Standard normal quantile, |error| well below 1e-12 on (0, 1).
double normal_quantile(double u);

struct ParetoSpec {
  double alpha;

  // Throws ConfigError("infinite mean") unless alpha > 1.
  explicit ParetoSpec(double shape);
  // Scale giving a unit mean.
  double x_m() const { return (alpha - 1.0) / alpha; }
  double mean() const { return alpha * x_m() / (alpha - 1.0); }
  double cdf(double x) const;
};

// x_m (1 - u)^(-1/alpha), u in [0, 1).
double pareto_inverse_cdf(double u, const ParetoSpec& spec);

// One-factor construction z_i = sqrt(rho) Z + sqrt(1 - rho) e_i, rho in [0, 1].
std::vector<double> equicorrelated_normals(std::size_t n, double rho, RandomStream& stream);

// Gaussian-copula coupled unit-mean Pareto interarrival times.
std::vector<double> correlated_pareto_interarrivals(std::size_t n, double alpha, double rho, RandomStream& stream);

// Gaussian-copula coupled exponential times: counts[i] assets with rate lambdas[i].
std::vector<double> copula_exponential_times(std::span<const double> lambdas, std::span<const int> counts, double rho,
                                             RandomStream& stream);

// Closed-form Corr(t_i, t_j) of arrival times built from equicorrelated
// interarrivals, 1 <= i <= j.
double arrival_time_correlation(int i, int j, double rho);

}  // namespace wf
