// One PASS/FAIL line per acceptance criterion, with the measured values and
// runtimes. Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "wf/assetpool.hpp"
#include "wf/calibration.hpp"
#include "wf/commands.hpp"
#include "wf/metrics.hpp"
#include "wf/pricing.hpp"
#include "wf/sampling.hpp"

using namespace wf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1fs", secs);
  std::string timing = buf;
  if (limit_s > 0.0) {
    std::snprintf(buf, sizeof buf, " (limit %.0fs)", limit_s);
    timing += buf;
    if (secs > limit_s) o.pass = false;
  }
  if (!o.pass) ++failures;
  std::printf("criterion %2d %s: %s | %s | %s\n", id, o.pass ? "PASS" : "FAIL", title, o.detail.c_str(),
              timing.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Outcome sampler_moments() {
  const ParetoSpec spec(4.6305);
  RandomStream s(42, 1);
  std::vector<double> x(1'000'000);
  for (auto& v : x) v = pareto_inverse_cdf(s.uniform(), spec);
  const double m = oracle::mean(x);
  const double d = oracle::ks_statistic(x, [&](double t) { return spec.cdf(t); });
  const double scaled = d * std::sqrt(double(x.size()));
  return {std::abs(m - 1.0) <= 0.01 && scaled < oracle::kKs99,
          fmt("mean %.5f, KS sqrt(n)*D %.4f < %.4f", m, scaled, oracle::kKs99)};
}

double arrival_corr(int i, int j, double rho, std::size_t paths) {
  std::vector<double> ti(paths), tj(paths);
  for (std::size_t p = 0; p < paths; ++p) {
    auto s = RandomStream::for_path(7, p, StreamPurpose::timing);
    const auto tau = correlated_pareto_interarrivals(j, 4.6305, rho, s);
    double c = 0.0;
    for (int k = 0; k < j; ++k) {
      c += tau[k];
      if (k + 1 == i) ti[p] = c;
    }
    tj[p] = c;
  }
  return oracle::correlation(ti, tj);
}

Outcome arrival_correlation() {
  const double c0 = arrival_corr(2, 8, 0.0, 100'000);
  const double c1 = arrival_corr(2, 8, 1.0, 100'000);
  return {std::abs(c0 - 0.5) <= 0.02 && std::abs(c1 - 1.0) <= 1e-12,
          fmt("rho=0: %.4f (0.5 +- 0.02), rho=1: %.15f", c0, c1)};
}

Outcome gradient_fidelity() {
  const auto& at = fixture::kCalibrated;
  const MonteCarloPricer pricer(fixture::toy_setup(), {10'000, 42, 1});
  const auto s = pricer.sensitivities(at);
  const auto values = to_array(at);
  double worst = 0.0;
  for (auto param : {Param::sigma, Param::p, Param::alpha, Param::w}) {
    const std::size_t k = std::size_t(param);
    const double h = 1e-6 * std::abs(values[k]);
    auto up = values, down = values;
    up[k] += h;
    down[k] -= h;
    const auto pu = pricer.mean_prices(from_array(up), Mode::smooth);
    const auto pd = pricer.mean_prices(from_array(down), Mode::smooth);
    for (std::size_t t = 0; t < kTrancheCount; ++t) {
      const double fd = (pu[t] - pd[t]) / (2.0 * h);
      worst = std::max(worst, std::abs(s.gradient[t][k] - fd) / std::max(std::abs(fd), 1e-8));
    }
  }

  // smooth primitives through the tape
  std::vector<std::pair<ScalarFunction, std::vector<double>>> suite{
      {[](std::span<const Var> x) { return sigmoid(x[0] - x[1], 3.0); }, {0.4, 0.1}},
      {[](std::span<const Var> x) { return softplus(x[0] * x[1], 5.0); }, {0.7, -0.3}},
      {[](std::span<const Var> x) { return smooth_min(x[0], x[1], 50.0); }, {1.01, 1.0}},
      {[](std::span<const Var> x) { return smooth_max(x[0], x[1], 50.0); }, {0.3, 0.32}},
      {[](std::span<const Var> x) { return anchored_smooth_min(x[0], x[1], 50.0); }, {0.05, 0.02}},
      {[](std::span<const Var> x) { return double_sigmoid_mask(x[0], 2.0, 50.0); }, {2.02}},
      {[](std::span<const Var> x) { return normal_cdf(x[0]) * exp(x[1]) / sqrt(x[0] + 2.0); }, {0.3, -0.4}},
      {[](std::span<const Var> x) { return log(x[0]) * pow(x[1], 1.7); }, {2.0, 1.3}},
  };
  double worst_primitive = 0.0;
  for (const auto& [f, x] : suite) worst_primitive = std::max(worst_primitive, grad_check(f, x, 1e-6));
  return {worst < 1e-2 && worst_primitive < 1e-3,
          fmt("max rel err %.2e < 1e-2 at 1e4 paths, primitives %.2e < 1e-3", worst, worst_primitive)};
}

Outcome conservation_seniority() {
  const MonteCarloPricer pricer(fixture::toy_setup(), {1'000, 42, 1});
  const auto& deal = pricer.setup().deal;
  double worst = 0.0;
  std::size_t monotone = 0, seniority = 0;
  for (const auto& params : {fixture::kTable3, fixture::kCalibrated}) {
    for (std::size_t path = 0; path < 1'000; ++path) {
      const auto f = pricer.path_flows(params, path, Mode::exact);
      std::array<double, kTrancheCount> prev{};
      for (std::size_t t = 0; t < kTrancheCount; ++t) prev[t] = deal[t].notional;
      for (const auto& a : f.periods) {
        worst = std::max(worst, std::abs(a.available - a.paid_out() - a.reserve) / std::max(1.0, a.available));
        for (std::size_t t = 0; t < kTrancheCount; ++t)
          if (a.outstanding[t] > prev[t]) ++monotone;
        if (a.outstanding[kSenior] > 0.0 && (a.principal[kMezzanine] > 0.0 || a.principal[kJunior] > 0.0))
          ++seniority;
        if (a.outstanding[kMezzanine] > 0.0 && a.principal[kJunior] > 0.0) ++seniority;
        prev = a.outstanding;
      }
    }
  }
  return {worst <= 1e-9 && monotone == 0 && seniority == 0,
          fmt("2x1000 paths: max rel imbalance %.2e, notional increases %.0f, seniority breaches %.0f", worst,
              double(monotone), double(seniority))};
}

Outcome mode_consistency() {
  const auto setup = fixture::toy_setup();
  const auto fix = setup.fixings_for(setup.curve, 0.0);
  const auto e = run_waterfall<double>(setup.base.amounts, setup.deal, fix, Mode::exact, setup.smoothing);
  const auto m = run_waterfall<double>(setup.base.amounts, setup.deal, fix, Mode::smooth, setup.smoothing);
  double worst = 0.0;
  for (std::size_t t = 0; t < kTrancheCount; ++t) {
    const auto fe = e.flows(t), fm = m.flows(t);
    const double d = pv<double>(fe, setup.base.times, setup.curve) - pv<double>(fm, setup.base.times, setup.curve);
    worst = std::max(worst, std::abs(d) / setup.deal[t].notional * 1e4);
  }
  return {worst < 5.0, fmt("max gap %.4f bp of notional (< 5)", worst)};
}

Outcome calibration_round_trip() {
  const auto config = toy_config();
  const auto setup = config.pricing_setup();
  const EngineParams truth{0.2, 0.0, 0.5, 3.5, 0.6, 0.85};
  const MonteCarloPricer pricer(setup, {config.calibration.paths, config.calibration.de.seed, 1});
  const auto p = pricer.mean_prices(truth, config.calibration.mode);
  const auto target = CalibrationTarget::senior_mezz_junior(p[kSenior], p[kMezzanine], p[kJunior]);
  const auto r = calibrate(setup, target, config.calibration);
  return {r.max_error <= 0.02 && r.generations <= 500 && config.calibration.paths == 5'000,
          fmt("targets S %.3f M %.3f J %.3f", p[kSenior], p[kMezzanine], p[kJunior]) +
              fmt(", max error %.4f <= 0.02 after %.0f generations", r.max_error, double(r.generations))};
}

Outcome base_plausibility() {
  const auto pool = toy_pool();
  const auto base = base_scenario(pool);
  std::vector<double> totals(100'000);
  for (std::size_t p = 0; p < totals.size(); ++p) totals[p] = simulate_pool(pool, 42, p).total();
  const double m = oracle::mean(totals), se = oracle::std_error(totals);
  const double z = std::abs(m - base.total()) / se;
  return {base.total() >= 185.0 && base.total() <= 227.0 && z < 3.0,
          fmt("analytic %.3f in [185, 227], simulated %.3f, |diff|/SE %.2f < 3", base.total(), m, z)};
}

Outcome sensitivity_signs() {
  const auto config = toy_config();
  const auto setup = config.pricing_setup();
  const auto cal = calibrate(setup, config.target, config.calibration);
  const MonteCarloPricer pricer(setup, {20'000, 42, 1});
  const auto s = pricer.sensitivities(cal.params);
  const std::size_t w = std::size_t(Param::w);
  const bool ok = s.dv01[kSenior] > 0.0 && s.dv01[kMezzanine] < 0.0 && s.bv01[kSenior] > 0.0 &&
                  s.bv01[kMezzanine] > 0.0 && s.gradient[kSenior][w] > 0.0 && s.gradient[kMezzanine][w] > 0.0;
  return {ok && cal.converged,
          fmt("calibrated max error %.4f; DV01 S %+.5f M %+.5f", cal.max_error, s.dv01[kSenior], s.dv01[kMezzanine]) +
              fmt("; BV01 S %+.4f M %+.4f", s.bv01[kSenior], s.bv01[kMezzanine]) +
              fmt("; d/dw S %+.2f M %+.2f", s.gradient[kSenior][w], s.gradient[kMezzanine][w])};
}

Outcome metric_inversions() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_irr = 0.0, worst_z = 0.0;
  for (int n = 0; n < 500; ++n) {
    const std::size_t m = 1 + std::size_t(u(rng) * 20);
    std::vector<double> c(m), t(m), d(m);
    double time = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      time += 0.1 + u(rng);
      t[i] = time;
      c[i] = 10.0 * u(rng) + 0.01;
      d[i] = std::pow(1.0 + 0.04 * u(rng), -time);
    }
    const double r = -0.05 + 0.3 * u(rng), z = -0.02 + 0.1 * u(rng);
    double pr = 0.0, pz = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      pr += c[i] * std::pow(1.0 + r, -t[i]);
      pz += c[i] * d[i] * std::exp(-t[i] * z);
    }
    worst_irr = std::max(worst_irr, std::abs(irr(c, t, pr) - r));
    worst_z = std::max(worst_z, std::abs(z_spread(c, t, d, pz) - z));
  }

  // par coupon bond yields its coupon; a bond priced off a flat curve has zero spread
  const std::vector<double> par{5.0, 5.0, 5.0, 105.0}, years{1.0, 2.0, 3.0, 4.0};
  const double par_err = std::abs(irr(par, years, 100.0) - 0.05);
  std::vector<double> disc(4);
  double on_curve = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    disc[i] = std::exp(-0.03 * years[i]);
    on_curve += par[i] * disc[i];
  }
  const double flat_err = std::abs(z_spread(par, years, disc, on_curve));
  double null_err = 0.0;
  for (const auto& m : tranche_metrics(fixture::toy_setup())) {
    null_err = std::max(null_err, std::abs(m.asw.value));
    if (m.irr) null_err = std::max(null_err, std::abs(*m.irr - 0.03));
    if (m.z_spread) null_err = std::max(null_err, std::abs(*m.z_spread));
  }
  const double worst = std::max({worst_irr, worst_z, par_err, flat_err, null_err});
  return {worst <= 1e-9, fmt("irr %.1e, z %.1e, par %.1e, flat/null %.1e (<= 1e-9)", worst_irr, worst_z, par_err,
                             std::max(flat_err, null_err))};
}

std::string slurp_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    all += f.filename().string() + '\n' + s.str();
  }
  return all;
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "wf_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  auto j = to_json(toy_config());
  j["calibration"]["paths"] = 200;
  j["calibration"]["de"]["max_generations"] = 5;
  const auto config = (root / "config.json").string();
  std::ofstream(config) << j.dump(2);

  std::size_t mismatches = 0;
  std::string bad;
  for (const auto& cmd : command_names()) {
    std::string out[3];
    for (int r = 0; r < 3; ++r) {
      CommandOptions o;
      o.config_path = config;
      o.paths = 2'000;
      o.workers = r == 2 ? 4u : 1u;
      o.robustness = cmd == "calibrate";
      o.output_dir = (root / (cmd + std::to_string(r))).string();
      std::ostringstream so, se;
      if (run_command(cmd, o, so, se) != kExitOk) return {false, cmd + " failed: " + se.str()};
      // the stdout summary lists written paths, which name the run directory
      std::string summary = so.str();
      for (auto at = summary.find(o.output_dir); at != std::string::npos; at = summary.find(o.output_dir))
        summary.replace(at, o.output_dir.size(), "<out>");
      out[r] = slurp_dir(o.output_dir) + summary;
    }
    if (out[0] != out[1] || out[0] != out[2]) {
      ++mismatches;
      bad += " " + cmd;
    }
  }
  return {mismatches == 0, fmt("%.0f commands x (1, 1, 4 workers), differing:", double(command_names().size())) +
                               (bad.empty() ? std::string(" none") : bad)};
}

}  // namespace

int main() {
  criterion(1, "Pareto sampler moments", 10, sampler_moments);
  criterion(2, "arrival-time correlation", 30, arrival_correlation);
  criterion(3, "gradient fidelity", 120, gradient_fidelity);
  criterion(4, "conservation and seniority", 30, conservation_seniority);
  criterion(5, "mode consistency", 10, mode_consistency);
  criterion(6, "calibration round trip", 900, calibration_round_trip);
  criterion(7, "base-scenario plausibility", 0, base_plausibility);
  criterion(8, "sensitivity signs at the calibrated point", 0, sensitivity_signs);
  criterion(9, "metric inversions", 0, metric_inversions);
  criterion(10, "determinism", 0, determinism);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}
