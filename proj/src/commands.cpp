#include "wf/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>

#include "wf/assetpool.hpp"
#include "wf/calibration.hpp"
#include "wf/errors.hpp"
#include "wf/metrics.hpp"
#include "wf/pricing.hpp"

namespace wf {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

class Outputs {
 public:
  explicit Outputs(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir_ + "': " + ec.message());
  }

  std::ofstream open(const std::string& name) {
    const auto path = (fs::path(dir_) / name).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + path + "'");
    written_.push_back(path);
    return f;
  }

  void write_json(const std::string& name, const json& j) {
    auto f = open(name);
    f << j.dump(2) << '\n';
  }

  json summary(const std::string& command) const { return {{"command", command}, {"outputs", written_}}; }

 private:
  std::string dir_;
  std::vector<std::string> written_;
};

SimulationOptions sim_options(const AppConfig& c) { return {c.run.paths, c.run.seed, c.run.workers}; }

json params_json(const EngineParams& p) {
  return {{"sigma", p.sigma}, {"mu", p.mu}, {"p", p.p}, {"alpha", p.alpha}, {"rho", p.rho}, {"w", p.w}};
}

void write_histogram(Outputs& out, const std::string& name, const Histogram& h) {
  auto f = out.open(name);
  f << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    f << fmt(h.edges[b]) << ',' << fmt(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
}

}  // namespace

AppConfig resolve_config(const CommandOptions& o) {
  AppConfig c = o.config_path.empty() ? toy_config() : load_config(o.config_path);
  if (o.seed) c.run.seed = *o.seed;
  if (o.paths) {
    require(*o.paths >= 1, "--paths must be >= 1");
    c.run.paths = *o.paths;
  }
  if (o.mode) c.run.mode = *o.mode;
  if (o.workers) {
    require(*o.workers >= 1, "--workers must be >= 1");
    c.run.workers = *o.workers;
  }
  c.calibration.de.workers = c.run.workers;
  return c;
}

std::string resolve_output_dir(const CommandOptions& o, const AppConfig& c) {
  if (!o.output_dir.empty()) return o.output_dir;
  if (!c.run.output_dir.empty()) return c.run.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return ".";
}

int cmd_simulate(const CommandOptions& o, std::ostream& out) {
  const AppConfig c = resolve_config(o);
  require(o.source == "pool" || o.source == "engines", "--source must be 'pool' or 'engines'");
  Outputs files(resolve_output_dir(o, c));
  const auto base = c.base();
  {
    auto f = files.open("simulate_paths.csv");
    f << "path,period,time,amount\n";
    for (std::size_t path = 0; path < c.run.paths; ++path) {
      const std::vector<double> amounts =
          o.source == "pool" ? simulate_pool(c.pool, c.run.seed, path).amounts
                             : compose_engines<double>(base, c.params, c.smoothing,
                                                       PathDraws::generate(base.size(), c.run.seed, path));
      for (std::size_t j = 0; j < amounts.size(); ++j)
        f << path << ',' << j + 1 << ',' << fmt(base.times[j]) << ',' << fmt(amounts[j]) << '\n';
    }
  }
  {
    auto f = files.open("base_scenario.csv");
    f << "period,time,amount\n";
    for (std::size_t j = 0; j < base.size(); ++j)
      f << j + 1 << ',' << fmt(base.times[j]) << ',' << fmt(base.amounts[j]) << '\n';
  }
  auto s = files.summary("simulate");
  s["base_total"] = base.total();
  s["paths"] = c.run.paths;
  s["source"] = o.source;
  out << s.dump() << '\n';
  return kExitOk;
}

int cmd_price(const CommandOptions& o, std::ostream& out) {
  const AppConfig c = resolve_config(o);
  Outputs files(resolve_output_dir(o, c));
  const MonteCarloPricer pricer(c.pricing_setup(), sim_options(c));
  const auto report = pricer.price(c.params, c.run.mode);
  json tranches;
  for (std::size_t t = 0; t < kTrancheCount; ++t) {
    const auto& tp = report.tranches[t];
    tranches[tranche_key(t)] = {{"name", tp.name}, {"notional", tp.notional}, {"price", tp.price},
                                {"se", tp.std_error}};
    write_histogram(files, std::string("histogram_") + tranche_key(t) + ".csv",
                    price_distribution(tp.samples, c.run.bins));
  }
  files.write_json("price.json", {{"mode", to_string(report.mode)},
                                  {"seed", report.seed},
                                  {"paths", report.n_paths},
                                  {"params", params_json(c.params)},
                                  {"mean_collections", report.mean_collections},
                                  {"mean_collections_pv", report.mean_collections_pv},
                                  {"tranches", tranches}});
  out << files.summary("price").dump() << '\n';
  return kExitOk;
}

int cmd_sensitivities(const CommandOptions& o, std::ostream& out) {
  const AppConfig c = resolve_config(o);
  // the config's run.mode governs pricing; gradients are always smooth
  if (o.mode == Mode::exact) throw ConfigError("gradients require smooth mode");
  Outputs files(resolve_output_dir(o, c));
  const auto report = sensitivities(c.pricing_setup(), c.params, sim_options(c), Mode::smooth);
  json tranches;
  for (std::size_t t = 0; t < kTrancheCount; ++t) {
    const auto& tp = report.prices.tranches[t];
    json g;
    for (Param k : {Param::sigma, Param::p, Param::alpha, Param::rho, Param::w})
      g[param_name(k)] = report.gradient[t][static_cast<std::size_t>(k)];
    tranches[tranche_key(t)] = {{"name", tp.name},        {"price", tp.price},         {"se", tp.std_error},
                                {"gradients", g},         {"dv01", report.dv01[t]},    {"bv01", report.bv01[t]},
                                {"dv01_down", report.dv01_down[t]}};
    for (RateBump b : {RateBump::index, RateBump::discount, RateBump::parallel})
      tranches[tranche_key(t)]["dv01_by_bump"][to_string(b)] = report.dv01_by_bump[static_cast<std::size_t>(b)][t];
  }
  files.write_json("sensitivities.json", {{"mode", "smooth"},
                                          {"dv01_bump", to_string(report.dv01_bump)},
                                          {"seed", c.run.seed},
                                          {"paths", c.run.paths},
                                          {"params", params_json(c.params)},
                                          {"tranches", tranches}});
  out << files.summary("sensitivities").dump() << '\n';
  return kExitOk;
}

int cmd_calibrate(const CommandOptions& o, std::ostream& out) {
  const AppConfig c = resolve_config(o);
  Outputs files(resolve_output_dir(o, c));
  const auto setup = c.pricing_setup();
  auto settings = c.calibration;
  if (o.seed) settings.de.seed = *o.seed;
  const auto report = calibrate(setup, c.target, settings);

  json residuals = json::object(), targets = json::object(), model = json::object();
  for (std::size_t t = 0; t < kTrancheCount; ++t) {
    model[tranche_key(t)] = report.model_price[t];
    if (report.residual[t]) residuals[tranche_key(t)] = *report.residual[t];
    if (c.target.price[t]) targets[tranche_key(t)] = *c.target.price[t];
  }
  json j = {{"params", params_json(report.params)},
            {"residuals", residuals},
            {"targets", targets},
            {"model_prices", model},
            {"max_error", report.max_error},
            {"generations", report.generations},
            {"evaluations", report.evaluations},
            {"failed_evaluations", report.failed_evaluations},
            {"converged", report.converged},
            {"warning", report.converged ? json(nullptr) : json("calibration did not reach the tolerance")},
            {"paths", settings.paths},
            {"seed", settings.de.seed},
            {"history", report.history}};

  // reprice at reporting paths
  const MonteCarloPricer full(setup, sim_options(c));
  const auto reprice = full.price(report.params, settings.mode);
  json full_prices = json::object();
  for (std::size_t t = 0; t < kTrancheCount; ++t)
    full_prices[tranche_key(t)] = {{"price", reprice.tranches[t].price}, {"se", reprice.tranches[t].std_error}};
  j["repriced"] = {{"paths", c.run.paths}, {"tranches", full_prices}};

  if (o.robustness) {
    json probes = json::array();
    for (const auto& p : robustness_probe(setup, c.target, settings, report)) {
      json disp;
      for (std::size_t k = 0; k < kParamCount; ++k) disp[param_name(static_cast<Param>(k))] = p.displacement[k];
      probes.push_back({{"bump", p.bump},
                        {"params", params_json(p.report.params)},
                        {"displacement", disp},
                        {"max_error", p.report.max_error},
                        {"repriced_deviation", p.repriced_deviation}});
    }
    j["robustness"] = probes;
  }
  files.write_json("calibration.json", j);
  out << files.summary("calibrate").dump() << '\n';
  return kExitOk;
}

int cmd_timelapse(const CommandOptions& o, std::ostream& out) {
  const AppConfig c = resolve_config(o);
  Outputs files(resolve_output_dir(o, c));
  const MonteCarloPricer pricer(c.pricing_setup(), sim_options(c));
  const auto dates = c.eval_dates();
  const auto points = pricer.forward_prices(c.params, dates, c.run.mode);
  auto f = files.open("timelapse.csv");
  f << "date,tranche,price\n";
  for (const auto& pt : points)
    for (std::size_t t = 0; t < kTrancheCount; ++t) f << fmt(pt.date) << ',' << tranche_key(t) << ',' << fmt(pt.price[t]) << '\n';
  f.close();
  out << files.summary("timelapse").dump() << '\n';
  return kExitOk;
}

int cmd_metrics(const CommandOptions& o, std::ostream& out) {
  const AppConfig c = resolve_config(o);
  require(o.observed == "null" || o.observed == "model", "--observed must be 'null' or 'model'");
  Outputs files(resolve_output_dir(o, c));
  const auto setup = c.pricing_setup();
  std::array<TrancheMetrics, kTrancheCount> m;
  if (o.observed == "null") {
    m = tranche_metrics(setup);
  } else {
    const auto prices = MonteCarloPricer(setup, sim_options(c)).mean_prices(c.params, c.run.mode);
    m = tranche_metrics(setup, prices);
  }
  json tranches;
  for (std::size_t t = 0; t < kTrancheCount; ++t) {
    const auto& x = m[t];
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    tranches[tranche_key(t)] = {{"name", x.name},
                                {"irr", opt(x.irr)},
                                {"z_spread", opt(x.z_spread)},
                                {"annuity", x.annuity.value},
                                {"asw", x.asw.value},
                                {"null_price", x.null_price},
                                {"observed_price", x.observed_price},
                                {"annuity_guarded", x.annuity.guarded},
                                {"asw_guarded", x.asw.guarded}};
    if (!x.irr) tranches[tranche_key(t)]["note"] = "observed price is 0; irr and z_spread undefined";
  }
  files.write_json("metrics.json", {{"observed", o.observed}, {"units", "decimal"}, {"tranches", tranches}});
  out << files.summary("metrics").dump() << '\n';
  return kExitOk;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "price", "sensitivities", "calibrate", "timelapse",
                                              "metrics"};
  return names;
}

int run_command(const std::string& command, const CommandOptions& options, std::ostream& out, std::ostream& err) {
  static const std::map<std::string, std::function<int(const CommandOptions&, std::ostream&)>> table{
      {"simulate", cmd_simulate},   {"price", cmd_price},         {"sensitivities", cmd_sensitivities},
      {"calibrate", cmd_calibrate}, {"timelapse", cmd_timelapse}, {"metrics", cmd_metrics}};
  try {
    const auto it = table.find(command);
    if (it == table.end()) throw ConfigError("unknown command '" + command + "'");
    return it->second(options, out);
  } catch (const ConfigError& e) {
    err << json{{"error", e.what()}, {"kind", "user"}}.dump() << '\n';
    return kExitUserError;
  } catch (const std::exception& e) {
    err << json{{"error", e.what()}, {"kind", "internal"}}.dump() << '\n';
    return kExitInternalError;
  }
}

}  // namespace wf
