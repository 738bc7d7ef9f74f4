#include "wf/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>

#include "wf/errors.hpp"
#include "wf/parallel.hpp"
#include "wf/sampling.hpp"

namespace wf {

void DESettings::validate() const {
  require(population >= 4, "de: population must be >= 4");
  require(mutation > 0.0 && mutation < 2.0, "de: mutation must lie in (0, 2)");
  require(crossover >= 0.0 && crossover <= 1.0, "de: crossover must lie in [0, 1]");
  require(max_generations >= 1, "de: max_generations must be >= 1");
  require(tolerance >= 0.0, "de: tolerance must be >= 0");
  require(!bounds.empty(), "de: at least one dimension required");
  for (const auto& [lo, hi] : bounds)
    require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "de: bounds must be finite with low < high");
}

double reflect_into(double x, double lo, double hi) {
  const double width = hi - lo;
  if (!std::isfinite(x)) return lo + 0.5 * width;
  // fold onto [0, 2 width) then mirror the upper half
  double u = std::fmod(x - lo, 2.0 * width);
  if (u < 0.0) u += 2.0 * width;
  if (u > width) u = 2.0 * width - u;
  return std::clamp(lo + u, lo, hi);
}

DEResult differential_evolution(const Objective& objective, const DESettings& settings) {
  settings.validate();
  const std::size_t np = settings.population;
  const std::size_t dim = settings.bounds.size();
  RandomStream rng(settings.seed, RandomStream::derive_id(0, StreamPurpose::optimizer));
  auto pick = [&](std::size_t n) { return std::min(n - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n))); };

  std::vector<std::vector<double>> pop(np, std::vector<double>(dim));
  for (auto& x : pop)
    for (std::size_t d = 0; d < dim; ++d) {
      const auto [lo, hi] = settings.bounds[d];
      x[d] = lo + (hi - lo) * rng.uniform();
    }

  auto evaluate = [&](const std::vector<std::vector<double>>& xs, std::vector<double>& fx) {
    fx.assign(xs.size(), 0.0);
    parallel_for(xs.size(), settings.workers, [&](std::size_t b, std::size_t e, unsigned) {
      for (std::size_t i = b; i < e; ++i) {
        const double v = objective(xs[i]);
        fx[i] = std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
      }
    });
  };

  DEResult result;
  std::vector<double> fitness;
  evaluate(pop, fitness);
  result.evaluations = np;
  auto best_index = [&] {
    return static_cast<std::size_t>(std::min_element(fitness.begin(), fitness.end()) - fitness.begin());
  };
  std::size_t best = best_index();
  result.history.push_back(fitness[best]);

  std::vector<std::vector<double>> trials(np, std::vector<double>(dim));
  std::vector<double> trial_fitness;
  while (fitness[best] > settings.tolerance && result.generations < settings.max_generations) {
    for (std::size_t i = 0; i < np; ++i) {
      std::size_t a, b, c;
      do a = pick(np); while (a == i);
      do b = pick(np); while (b == i || b == a);
      do c = pick(np); while (c == i || c == a || c == b);
      const std::size_t forced = pick(dim);
      for (std::size_t d = 0; d < dim; ++d) {
        const auto [lo, hi] = settings.bounds[d];
        if (d == forced || rng.uniform() < settings.crossover)
          trials[i][d] = reflect_into(pop[a][d] + settings.mutation * (pop[b][d] - pop[c][d]), lo, hi);
        else
          trials[i][d] = pop[i][d];
      }
    }
    evaluate(trials, trial_fitness);
    result.evaluations += np;
    for (std::size_t i = 0; i < np; ++i)
      if (trial_fitness[i] <= fitness[i]) {
        pop[i] = trials[i];
        fitness[i] = trial_fitness[i];
      }
    best = best_index();
    ++result.generations;
    result.history.push_back(fitness[best]);
  }
  result.best = pop[best];
  result.best_value = fitness[best];
  result.converged = result.best_value <= settings.tolerance;
  return result;
}

void CalibrationTarget::validate() const {
  bool any = false;
  for (std::size_t t = 0; t < kTrancheCount; ++t)
    if (price[t]) {
      any = true;
      require(*price[t] > 0.0 && *price[t] <= 200.0,
              std::string("calibration.targets.") + tranche_key(t) + " must lie in (0, 200]");
    }
  require(any, "calibration.targets: at least one tranche required");
}

CalibrationTarget CalibrationTarget::senior_mezz_junior(double senior, double mezzanine, double junior) {
  CalibrationTarget t;
  t.price[kSenior] = senior;
  t.price[kMezzanine] = mezzanine;
  t.price[kJunior] = junior;
  return t;
}

void CalibrationSettings::validate() const {
  require(paths >= 1, "calibration.paths must be >= 1");
  for (std::size_t k = 0; k < kParamCount; ++k) {
    const std::string name = param_name(static_cast<Param>(k));
    if (fixed[k]) {
      require(std::isfinite(*fixed[k]), "calibration.fixed." + name + " must be finite");
      continue;
    }
    const auto [lo, hi] = bounds[k];
    require(std::isfinite(lo) && std::isfinite(hi) && lo < hi,
            "calibration.bounds." + name + " must be finite with low < high");
  }
  require(bounds[static_cast<std::size_t>(Param::alpha)].first > 1.0 || fixed[static_cast<std::size_t>(Param::alpha)],
          "calibration.bounds.alpha must stay above 1");
  require(bounds[static_cast<std::size_t>(Param::w)].first > 0.0 || fixed[static_cast<std::size_t>(Param::w)],
          "calibration.bounds.w must stay above 0");
}

double max_abs_error(std::span<const double, kTrancheCount> model, const CalibrationTarget& target) {
  double worst = 0.0;
  for (std::size_t t = 0; t < kTrancheCount; ++t)
    if (target.price[t]) worst = std::max(worst, std::abs(model[t] - *target.price[t]));
  return worst;
}

double objective(const EngineParams& params, const CalibrationTarget& target, const MonteCarloPricer& pricer,
                 Mode mode) {
  try {
    const auto prices = pricer.mean_prices(params, mode);
    const double e = max_abs_error(prices, target);
    return std::isfinite(e) ? e : kObjectivePenalty;
  } catch (const std::exception& ex) {
    std::cerr << "calibration: objective failed (" << ex.what() << ")\n";
    return kObjectivePenalty;
  }
}

CalibrationReport calibrate(const PricingSetup& setup, const CalibrationTarget& target,
                            const CalibrationSettings& settings) {
  target.validate();
  settings.validate();
  std::vector<std::size_t> free;
  for (std::size_t k = 0; k < kParamCount; ++k)
    if (!settings.fixed[k]) free.push_back(k);
  require(!free.empty(), "calibration: every parameter is fixed");

  auto unpack = [&](std::span<const double> x) {
    std::array<double, kParamCount> v{};
    for (std::size_t k = 0; k < kParamCount; ++k) v[k] = settings.fixed[k] ? *settings.fixed[k] : 0.0;
    for (std::size_t i = 0; i < free.size(); ++i) v[free[i]] = x[i];
    return from_array(v);
  };

  DESettings de = settings.de;
  de.bounds.clear();
  for (std::size_t k : free) de.bounds.push_back(settings.bounds[k]);

  CalibrationReport report;
  std::atomic<std::size_t> failures{0};
  // Population members run concurrently, each pricing on one thread.
  const MonteCarloPricer serial(setup, {settings.paths, settings.de.seed, 1});
  const auto result = differential_evolution(
      [&](std::span<const double> x) {
        const double v = objective(unpack(x), target, serial, settings.mode);
        if (v >= kObjectivePenalty) ++failures;
        return v;
      },
      de);

  report.params = unpack(result.best);
  report.model_price = serial.mean_prices(report.params, settings.mode);
  report.max_error = max_abs_error(report.model_price, target);
  for (std::size_t t = 0; t < kTrancheCount; ++t)
    if (target.price[t]) report.residual[t] = report.model_price[t] - *target.price[t];
  report.generations = result.generations;
  report.evaluations = result.evaluations;
  report.failed_evaluations = failures.load();
  report.converged = result.converged;
  report.history = result.history;
  return report;
}

std::vector<RobustnessProbe> robustness_probe(const PricingSetup& setup, const CalibrationTarget& target,
                                              const CalibrationSettings& settings, const CalibrationReport& base,
                                              double bump) {
  std::vector<RobustnessProbe> out;
  const MonteCarloPricer pricer(setup, {settings.paths, settings.de.seed, settings.de.workers});
  const auto base_values = to_array(base.params);
  for (double sign : {1.0, -1.0}) {
    RobustnessProbe probe;
    probe.bump = sign * bump;
    probe.target = target;
    for (auto& p : probe.target.price)
      if (p) *p += probe.bump;
    probe.report = calibrate(setup, probe.target, settings);
    const auto values = to_array(probe.report.params);
    for (std::size_t k = 0; k < kParamCount; ++k) probe.displacement[k] = values[k] - base_values[k];
    probe.repriced_deviation = max_abs_error(pricer.mean_prices(probe.report.params, settings.mode), target);
    out.push_back(std::move(probe));
  }
  return out;
}

}  // namespace wf
