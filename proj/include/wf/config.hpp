#pragma once
// Whole-deal JSON configuration. Every section is optional and falls back to
// the toy deal; fields that are present are validated and unknown keys are
// rejected with their full path.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wf/assetpool.hpp"
#include "wf/calibration.hpp"
#include "wf/pricing.hpp"

namespace wf {

struct RunSettings {
  std::uint64_t seed = 42;
  std::size_t paths = 10'000;
  Mode mode = Mode::exact;
  unsigned workers = 1;
  std::size_t bins = 50;
  std::vector<double> eval_dates;  // empty: 0 and every grid date
  std::string output_dir;          // empty: $WF_OUTPUT_DIR or "."
};

struct AppConfig {
  PoolConfig pool = toy_pool();
  DealConfig deal;  // profile filled from the base scenario unless given
  DiscountCurve curve = DiscountCurve::flat(0.03);
  std::optional<std::vector<double>> index_fixings;
  EngineParams params{0.1053, 0.0, 0.8646, 4.6305, 0.5, 0.7571};
  SmoothingConfig smoothing;
  RateBump dv01_bump = RateBump::index;
  CalibrationTarget target = CalibrationTarget::senior_mezz_junior(100.0, 30.0, 5.0);
  CalibrationSettings calibration;
  RunSettings run;

  CashFlowSchedule base() const { return base_scenario(pool); }
  PricingSetup pricing_setup() const;
  std::vector<double> eval_dates() const;
};

AppConfig toy_config();
AppConfig parse_config(const nlohmann::json& j);
AppConfig parse_config_text(const std::string& text);
AppConfig load_config(const std::string& path);
nlohmann::json to_json(const AppConfig& config);

}  // namespace wf
