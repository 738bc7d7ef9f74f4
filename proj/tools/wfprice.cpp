// wfprice: simulate, price, sensitivities, calibrate, timelapse, metrics.

#include <CLI11.hpp>
#include <iostream>

#include "wf/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo pricing of securitization waterfalls"};
  app.require_subcommand(1);

  wf::CommandOptions opts;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  std::string mode;
  unsigned workers = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", opts.config_path, "JSON config (default: built-in toy deal)");
    sub->add_option("--seed", seed, "random seed (default 42)");
    sub->add_option("--paths", paths, "Monte Carlo paths");
    sub->add_option("--mode", mode, "exact | smooth");
    sub->add_option("--workers", workers, "worker threads; results do not depend on it");
    sub->add_option("-o,--output-dir", opts.output_dir, "output directory (default $WF_OUTPUT_DIR or .)");
  };

  auto* simulate = app.add_subcommand("simulate", "pool paths CSV and base scenario CSV");
  add_common(simulate);
  simulate->add_option("--source", opts.source, "pool | engines")->capture_default_str();
  auto* price = app.add_subcommand("price", "tranche prices and histograms");
  add_common(price);
  auto* sens = app.add_subcommand("sensitivities", "AAD gradients, DV01, BV01");
  add_common(sens);
  auto* calib = app.add_subcommand("calibrate", "differential-evolution calibration to target prices");
  add_common(calib);
  calib->add_flag("--robustness", opts.robustness, "also recalibrate to targets shifted by +-0.1");
  auto* lapse = app.add_subcommand("timelapse", "forward price profile");
  add_common(lapse);
  auto* metrics = app.add_subcommand("metrics", "IRR, Z-spread, annuity, ASW");
  add_common(metrics);
  metrics->add_option("--observed", opts.observed, "null | model")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? wf::kExitOk : wf::kExitUserError;
  }

  const CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) opts.seed = seed;
  if (sub->count("--paths")) opts.paths = paths;
  if (sub->count("--workers")) opts.workers = workers;
  if (sub->count("--mode")) {
    try {
      opts.mode = wf::parse_mode(mode);
    } catch (const std::exception& e) {
      std::cerr << nlohmann::json{{"error", e.what()}, {"kind", "user"}}.dump() << '\n';
      return wf::kExitUserError;
    }
  }
  return wf::run_command(sub->get_name(), opts, std::cout, std::cerr);
}
