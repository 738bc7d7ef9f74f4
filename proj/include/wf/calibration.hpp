#pragma once
// Differential evolution (rand/1/bin) and the inception calibration of the
// engine parameters to observed tranche prices.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "wf/engines.hpp"
#include "wf/pricing.hpp"

namespace wf {

struct DESettings {
  std::size_t population = 40;
  double mutation = 0.7;   // F
  double crossover = 0.9;  // CR
  std::size_t max_generations = 500;
  double tolerance = 0.0;  // stop once the best objective is <= tolerance
  std::vector<std::pair<double, double>> bounds;
  std::uint64_t seed = 42;
  unsigned workers = 1;

  void validate() const;
};

struct DEResult {
  std::vector<double> best;
  double best_value = 0.0;
  std::size_t generations = 0;  // completed after initialisation
  std::size_t evaluations = 0;
  bool converged = false;       // best_value <= tolerance
  std::vector<double> history;  // best value after each generation, [0] = initial population
};

using Objective = std::function<double(std::span<const double>)>;

// Trial vectors are drawn sequentially from one stream and evaluated in
// parallel; selection is sequential, so the result does not depend on
// `workers`.
DEResult differential_evolution(const Objective& objective, const DESettings& settings);

// Mirror x into [lo, hi].
double reflect_into(double x, double lo, double hi);

struct CalibrationTarget {
  std::array<std::optional<double>, kTrancheCount> price;  // % of notional

  void validate() const;
  static CalibrationTarget senior_mezz_junior(double senior, double mezzanine, double junior);
};

struct CalibrationSettings {
  DESettings de;  // bounds are filled from `bounds` below
  std::array<std::pair<double, double>, kParamCount> bounds{{
      {0.0, 0.5},   // sigma
      {0.0, 0.0},   // mu
      {0.0, 1.0},   // p
      {1.5, 10.0},  // alpha
      {0.0, 1.0},   // rho
      {0.3, 1.5},   // w
  }};
  // Pinned parameters are excluded from the search. mu is pinned at 0.
  std::array<std::optional<double>, kParamCount> fixed{std::nullopt, 0.0, std::nullopt, std::nullopt, std::nullopt,
                                                        std::nullopt};
  std::size_t paths = 5'000;
  Mode mode = Mode::exact;

  CalibrationSettings() { de.tolerance = 0.005; }
  void validate() const;
};

inline constexpr double kObjectivePenalty = 1e6;

// max |model - target| over participating tranches, in price points.
double max_abs_error(std::span<const double, kTrancheCount> model, const CalibrationTarget& target);
double objective(const EngineParams& params, const CalibrationTarget& target, const MonteCarloPricer& pricer,
                 Mode mode = Mode::exact);

struct CalibrationReport {
  EngineParams params;
  double max_error = 0.0;
  std::array<std::optional<double>, kTrancheCount> residual;  // model - target
  std::array<double, kTrancheCount> model_price{};
  std::size_t generations = 0;
  std::size_t evaluations = 0;
  std::size_t failed_evaluations = 0;
  bool converged = false;  // false is the warning flag
  std::vector<double> history;
};

CalibrationReport calibrate(const PricingSetup& setup, const CalibrationTarget& target,
                            const CalibrationSettings& settings);

struct RobustnessProbe {
  double bump = 0.0;
  CalibrationTarget target;
  CalibrationReport report;
  std::array<double, kParamCount> displacement{};  // from the unperturbed calibration
  double repriced_deviation = 0.0;                 // vs the unperturbed targets
};

// Recalibrates to targets shifted by +bump and -bump on every tranche.
std::vector<RobustnessProbe> robustness_probe(const PricingSetup& setup, const CalibrationTarget& target,
                                              const CalibrationSettings& settings, const CalibrationReport& base,
                                              double bump = 0.1);

}  // namespace wf
