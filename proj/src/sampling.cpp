#include "wf/sampling.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>

#include "wf/autodiff.hpp"
#include "wf/errors.hpp"

namespace wf {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint64_t m0 = 0xD2511F53;
  constexpr std::uint64_t m1 = 0xCD9E8D57;
  constexpr std::uint32_t w0 = 0x9E3779B9;
  constexpr std::uint32_t w1 = 0xBB67AE85;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = m0 * ctr[0];
    const std::uint64_t p1 = m1 * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += w0;
    key[1] += w1;
  }
  return ctr;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {}

std::uint64_t RandomStream::derive_id(std::uint64_t path, StreamPurpose purpose) {
  return splitmix64(path ^ splitmix64(static_cast<std::uint64_t>(purpose) << 40));
}

void RandomStream::refill() {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  const auto out = philox4x32(ctr, key);
  buffer_[0] = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  buffer_[1] = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
  ++block_;
  used_ = 0;
}

std::uint64_t RandomStream::next_u64() {
  if (used_ == 2) refill();
  return buffer_[used_++];
}

double RandomStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RandomStream::uniform_open() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

double RandomStream::normal() { return normal_quantile(uniform_open()); }

double normal_quantile(double u) {
  require(u > 0.0 && u < 1.0, "normal_quantile: u must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

ParetoSpec::ParetoSpec(double shape) : alpha(shape) {
  require(alpha > 1.0, "Pareto alpha must be > 1 (infinite mean)");
}

double ParetoSpec::cdf(double x) const {
  if (x <= x_m()) return 0.0;
  return 1.0 - std::pow(x_m() / x, alpha);
}

double pareto_inverse_cdf(double u, const ParetoSpec& spec) {
  require(u >= 0.0 && u < 1.0, "pareto_inverse_cdf: u must lie in [0, 1)");
  return spec.x_m() * std::pow(1.0 - u, -1.0 / spec.alpha);
}

std::vector<double> equicorrelated_normals(std::size_t n, double rho, RandomStream& stream) {
  require(rho >= 0.0 && rho <= 1.0, "equicorrelation rho must lie in [0, 1]");
  const double a = std::sqrt(rho);
  const double b = std::sqrt(1.0 - rho);
  const double factor = stream.normal();
  std::vector<double> z(n);
  for (auto& zi : z) zi = a * factor + b * stream.normal();
  return z;
}

std::vector<double> correlated_pareto_interarrivals(std::size_t n, double alpha, double rho, RandomStream& stream) {
  const ParetoSpec spec(alpha);
  std::vector<double> tau = equicorrelated_normals(n, rho, stream);
  for (auto& t : tau) {
    // 1 - Phi(z) = Phi(-z) keeps full precision in the upper tail.
    t = spec.x_m() * std::exp(-std::log(normal_cdf(-t)) / spec.alpha);
  }
  return tau;
}

std::vector<double> copula_exponential_times(std::span<const double> lambdas, std::span<const int> counts, double rho,
                                             RandomStream& stream) {
  require(lambdas.size() == counts.size(), "copula_exponential_times: lambdas/counts length mismatch");
  std::size_t total = 0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    require(lambdas[i] > 0.0, "copula_exponential_times: lambda must be > 0");
    require(counts[i] >= 0, "copula_exponential_times: count must be >= 0");
    total += static_cast<std::size_t>(counts[i]);
  }
  const std::vector<double> z = equicorrelated_normals(total, rho, stream);
  std::vector<double> times(total);
  std::size_t k = 0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    for (int c = 0; c < counts[i]; ++c, ++k) times[k] = -std::log(normal_cdf(-z[k])) / lambdas[i];
  }
  return times;
}

double arrival_time_correlation(int i, int j, double rho) {
  require(i >= 1 && j >= i, "arrival_time_correlation: need 1 <= i <= j");
  return std::sqrt(static_cast<double>(i) / j) * std::sqrt(1.0 + rho * (j - 1)) / std::sqrt(1.0 + rho * (i - 1));
}

}  // namespace wf
