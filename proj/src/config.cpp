#include "wf/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "wf/errors.hpp"

namespace wf {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(path, "expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) fail(path.empty() ? k : path + "." + k, "unknown key");
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path, "must be finite");
  return x;
}

template <class Int>
Int integer(const json& v, const std::string& path, Int min_value) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) fail(path, "expected an integer");
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u < static_cast<std::uint64_t>(std::max<Int>(min_value, 0))) fail(path, "must be >= " + std::to_string(min_value));
    return static_cast<Int>(u);
  }
  const auto x = v.get<std::int64_t>();
  if (x < static_cast<std::int64_t>(min_value)) fail(path, "must be >= " + std::to_string(min_value));
  return static_cast<Int>(x);
}

std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

// Required field.
const json& at(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) fail(join(path, key), "missing required field");
  return j.at(key);
}

void maybe(const json& j, const std::string& path, const char* key, double& out) {
  if (j.contains(key)) out = number(j.at(key), join(path, key));
}

Mode mode_field(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected \"exact\" or \"smooth\"");
  const auto s = v.get<std::string>();
  if (s == "exact") return Mode::exact;
  if (s == "smooth") return Mode::smooth;
  fail(path, "expected \"exact\" or \"smooth\", got \"" + s + "\"");
}

std::size_t param_index(const std::string& name, const std::string& path) {
  for (std::size_t k = 0; k < kParamCount; ++k)
    if (name == param_name(static_cast<Param>(k))) return k;
  fail(path, "unknown engine parameter");
}

std::size_t tranche_index(const std::string& name, const std::string& path) {
  for (std::size_t t = 0; t < kTrancheCount; ++t)
    if (name == tranche_key(t)) return t;
  fail(path, "unknown tranche (expected senior, mezzanine, junior or lrl)");
}

void parse_pool(const json& j, PoolConfig& pool) {
  const std::string p = "pool";
  only_keys(j, p, {"asset_types", "rent_yield", "fee", "horizon", "rho", "period"});
  if (j.contains("asset_types")) {
    const auto& arr = j.at("asset_types");
    if (!arr.is_array()) fail(p + ".asset_types", "expected an array");
    pool.asset_types.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ap = p + ".asset_types[" + std::to_string(i) + "]";
      const auto& a = arr[i];
      only_keys(a, ap, {"v0", "lambda_rate", "delta", "count"});
      AssetTypeSpec s;
      s.v0 = number(at(a, ap, "v0"), ap + ".v0");
      s.lambda_rate = number(at(a, ap, "lambda_rate"), ap + ".lambda_rate");
      s.delta = number(at(a, ap, "delta"), ap + ".delta");
      s.count = integer<int>(at(a, ap, "count"), ap + ".count", 1);
      pool.asset_types.push_back(s);
    }
  }
  maybe(j, p, "rent_yield", pool.rent_yield);
  maybe(j, p, "fee", pool.fee);
  maybe(j, p, "horizon", pool.horizon);
  maybe(j, p, "rho", pool.rho);
  maybe(j, p, "period", pool.period);
}

void parse_deal(const json& j, DealConfig& deal) {
  const std::string p = "deal";
  only_keys(j, p,
            {"tranches", "ccr_threshold", "contractual_profile", "senior_fees", "servicer_fee_rate",
             "reserve_target_rate", "lrl_link_ratio"});
  if (j.contains("tranches")) {
    const auto& tr = j.at("tranches");
    only_keys(tr, p + ".tranches", {"senior", "mezzanine", "junior", "lrl"});
    for (const auto& [key, v] : tr.items()) {
      const std::string tp = p + ".tranches." + key;
      auto& spec = deal.tranches[tranche_index(key, tp)];
      only_keys(v, tp, {"name", "notional", "coupon", "rate"});
      if (v.contains("name")) {
        if (!v.at("name").is_string()) fail(tp + ".name", "expected a string");
        spec.name = v.at("name").get<std::string>();
      }
      maybe(v, tp, "notional", spec.notional);
      maybe(v, tp, "rate", spec.rate);
      if (v.contains("coupon")) {
        const auto& c = v.at("coupon");
        if (c == "floating") spec.coupon = CouponType::floating;
        else if (c == "fixed") spec.coupon = CouponType::fixed;
        else fail(tp + ".coupon", "expected \"floating\" or \"fixed\"");
      }
    }
  }
  maybe(j, p, "ccr_threshold", deal.ccr_threshold);
  maybe(j, p, "senior_fees", deal.senior_fees);
  maybe(j, p, "servicer_fee_rate", deal.servicer_fee_rate);
  maybe(j, p, "reserve_target_rate", deal.reserve_target_rate);
  maybe(j, p, "lrl_link_ratio", deal.lrl_link_ratio);
  if (j.contains("contractual_profile"))
    deal.contractual_profile = numbers(j.at("contractual_profile"), p + ".contractual_profile");
}

DiscountCurve parse_curve(const json& j) {
  const std::string p = "curve";
  only_keys(j, p, {"flat", "times", "zero_rates"});
  if (j.contains("flat")) {
    if (j.contains("times") || j.contains("zero_rates")) fail(p, "give either flat or times/zero_rates");
    const double r = number(j.at("flat"), p + ".flat");
    if (r <= -1.0) fail(p + ".flat", "must be > -1");
    return DiscountCurve::flat(r);
  }
  auto t = numbers(at(j, p, "times"), p + ".times");
  auto r = numbers(at(j, p, "zero_rates"), p + ".zero_rates");
  try {
    return DiscountCurve(std::move(t), std::move(r));
  } catch (const ConfigError& e) {
    fail(p, e.what());
  }
}

void parse_params(const json& j, const std::string& p, EngineParams& params) {
  only_keys(j, p, {"sigma", "mu", "p", "alpha", "rho", "w"});
  maybe(j, p, "sigma", params.sigma);
  maybe(j, p, "mu", params.mu);
  maybe(j, p, "p", params.p);
  maybe(j, p, "alpha", params.alpha);
  maybe(j, p, "rho", params.rho);
  maybe(j, p, "w", params.w);
}

void parse_smoothing(const json& j, SmoothingConfig& s) {
  only_keys(j, "smoothing", {"k", "beta", "eps", "trigger_k"});
  maybe(j, "smoothing", "k", s.k);
  maybe(j, "smoothing", "beta", s.beta);
  maybe(j, "smoothing", "eps", s.eps);
  maybe(j, "smoothing", "trigger_k", s.trigger_k);
}

void parse_calibration(const json& j, AppConfig& c) {
  const std::string p = "calibration";
  only_keys(j, p, {"targets", "paths", "mode", "de", "bounds", "fixed"});
  if (j.contains("targets")) {
    const auto& t = j.at("targets");
    only_keys(t, p + ".targets", {"senior", "mezzanine", "junior", "lrl"});
    c.target = CalibrationTarget{};
    for (const auto& [key, v] : t.items())
      c.target.price[tranche_index(key, p + ".targets." + key)] = number(v, p + ".targets." + key);
  }
  auto& cs = c.calibration;
  if (j.contains("paths")) cs.paths = integer<std::size_t>(j.at("paths"), p + ".paths", 1);
  if (j.contains("mode")) cs.mode = mode_field(j.at("mode"), p + ".mode");
  if (j.contains("de")) {
    const auto& d = j.at("de");
    const std::string dp = p + ".de";
    only_keys(d, dp, {"population", "mutation", "crossover", "max_generations", "tolerance", "seed"});
    if (d.contains("population")) cs.de.population = integer<std::size_t>(d.at("population"), dp + ".population", 0);
    maybe(d, dp, "mutation", cs.de.mutation);
    maybe(d, dp, "crossover", cs.de.crossover);
    if (d.contains("max_generations"))
      cs.de.max_generations = integer<std::size_t>(d.at("max_generations"), dp + ".max_generations", 1);
    maybe(d, dp, "tolerance", cs.de.tolerance);
    if (d.contains("seed")) cs.de.seed = integer<std::uint64_t>(d.at("seed"), dp + ".seed", 0);
  }
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    if (!b.is_object()) fail(p + ".bounds", "expected an object");
    for (const auto& [key, v] : b.items()) {
      const std::string bp = p + ".bounds." + key;
      const auto lohi = numbers(v, bp);
      if (lohi.size() != 2) fail(bp, "expected [low, high]");
      cs.bounds[param_index(key, bp)] = {lohi[0], lohi[1]};
    }
  }
  if (j.contains("fixed")) {
    const auto& f = j.at("fixed");
    if (!f.is_object()) fail(p + ".fixed", "expected an object");
    cs.fixed.fill(std::nullopt);
    for (const auto& [key, v] : f.items()) {
      const std::string fp = p + ".fixed." + key;
      cs.fixed[param_index(key, fp)] = number(v, fp);
    }
  }
}

void parse_run(const json& j, RunSettings& r) {
  const std::string p = "run";
  only_keys(j, p, {"seed", "paths", "mode", "workers", "bins", "eval_dates", "output_dir"});
  if (j.contains("seed")) r.seed = integer<std::uint64_t>(j.at("seed"), p + ".seed", 0);
  if (j.contains("paths")) r.paths = integer<std::size_t>(j.at("paths"), p + ".paths", 1);
  if (j.contains("mode")) r.mode = mode_field(j.at("mode"), p + ".mode");
  if (j.contains("workers")) r.workers = integer<unsigned>(j.at("workers"), p + ".workers", 1);
  if (j.contains("bins")) r.bins = integer<std::size_t>(j.at("bins"), p + ".bins", 1);
  if (j.contains("eval_dates")) r.eval_dates = numbers(j.at("eval_dates"), p + ".eval_dates");
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) fail(p + ".output_dir", "expected a string");
    r.output_dir = j.at("output_dir").get<std::string>();
  }
}

}  // namespace

PricingSetup AppConfig::pricing_setup() const {
  PricingSetup s;
  s.base = base();
  s.deal = deal;
  s.deal.period_length = pool.period;
  if (s.deal.contractual_profile.empty()) s.deal.contractual_profile = cumulative(s.base.amounts);
  s.curve = curve;
  s.index_fixings = index_fixings;
  s.smoothing = smoothing;
  s.dv01_bump = dv01_bump;
  s.validate();
  return s;
}

std::vector<double> AppConfig::eval_dates() const {
  if (!run.eval_dates.empty()) return run.eval_dates;
  std::vector<double> d{0.0};
  const auto b = base();
  d.insert(d.end(), b.times.begin(), b.times.end());
  return d;
}

AppConfig toy_config() {
  AppConfig c;
  c.deal = toy_deal(base_scenario(c.pool));
  c.deal.contractual_profile.clear();
  return c;
}

AppConfig parse_config(const json& j) {
  only_keys(j, "",
            {"pool", "deal", "curve", "index_fixings", "dv01_bump", "engine_params", "smoothing", "calibration", "run"});
  AppConfig c = toy_config();
  if (j.contains("pool")) parse_pool(j.at("pool"), c.pool);
  if (j.contains("deal")) parse_deal(j.at("deal"), c.deal);
  if (j.contains("curve")) c.curve = parse_curve(j.at("curve"));
  if (j.contains("index_fixings")) c.index_fixings = numbers(j.at("index_fixings"), "index_fixings");
  if (j.contains("dv01_bump")) {
    const auto& v = j.at("dv01_bump");
    if (!v.is_string()) fail("dv01_bump", "expected \"index\", \"discount\" or \"parallel\"");
    try {
      c.dv01_bump = parse_rate_bump(v.get<std::string>());
    } catch (const ConfigError& e) {
      fail("dv01_bump", e.what());
    }
  }
  if (j.contains("engine_params")) parse_params(j.at("engine_params"), "engine_params", c.params);
  if (j.contains("smoothing")) parse_smoothing(j.at("smoothing"), c.smoothing);
  if (j.contains("calibration")) parse_calibration(j.at("calibration"), c);
  if (j.contains("run")) parse_run(j.at("run"), c.run);

  c.pool.validate();
  validate(c.params);
  c.smoothing.validate();
  c.target.validate();
  c.calibration.validate();
  DESettings de = c.calibration.de;  // bounds are assigned per run
  de.bounds = {{0.0, 1.0}};
  de.validate();
  (void)c.pricing_setup();
  return c;
}

AppConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports a byte offset; turn it into line:column
    const std::size_t at = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(at), '\n');
    const auto nl = text.rfind('\n', at == 0 ? 0 : at - 1);
    const std::size_t col = nl == std::string::npos ? at + 1 : at - nl;
    throw ConfigError("config: parse error at line " + std::to_string(line) + ", column " + std::to_string(col));
  }
  return parse_config(j);
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

json to_json(const AppConfig& c) {
  json j;
  json types = json::array();
  for (const auto& a : c.pool.asset_types)
    types.push_back({{"v0", a.v0}, {"lambda_rate", a.lambda_rate}, {"delta", a.delta}, {"count", a.count}});
  j["pool"] = {{"asset_types", types},         {"rent_yield", c.pool.rent_yield}, {"fee", c.pool.fee},
               {"horizon", c.pool.horizon},    {"rho", c.pool.rho},               {"period", c.pool.period}};
  json tr;
  for (std::size_t t = 0; t < kTrancheCount; ++t) {
    const auto& s = c.deal[t];
    tr[tranche_key(t)] = {{"name", s.name},
                          {"notional", s.notional},
                          {"coupon", s.coupon == CouponType::floating ? "floating" : "fixed"},
                          {"rate", s.rate}};
  }
  j["deal"] = {{"tranches", tr},
               {"ccr_threshold", c.deal.ccr_threshold},
               {"senior_fees", c.deal.senior_fees},
               {"servicer_fee_rate", c.deal.servicer_fee_rate},
               {"reserve_target_rate", c.deal.reserve_target_rate},
               {"lrl_link_ratio", c.deal.lrl_link_ratio}};
  if (!c.deal.contractual_profile.empty()) j["deal"]["contractual_profile"] = c.deal.contractual_profile;
  if (c.curve.times().size() == 1)
    j["curve"] = {{"flat", c.curve.zero_rates().front()}};
  else
    j["curve"] = {{"times", c.curve.times()}, {"zero_rates", c.curve.zero_rates()}};
  if (c.index_fixings) j["index_fixings"] = *c.index_fixings;
  j["dv01_bump"] = to_string(c.dv01_bump);
  const auto& e = c.params;
  j["engine_params"] = {{"sigma", e.sigma}, {"mu", e.mu}, {"p", e.p}, {"alpha", e.alpha}, {"rho", e.rho}, {"w", e.w}};
  j["smoothing"] = {{"k", c.smoothing.k},
                    {"beta", c.smoothing.beta},
                    {"eps", c.smoothing.eps},
                    {"trigger_k", c.smoothing.trigger_k}};
  json targets = json::object();
  for (std::size_t t = 0; t < kTrancheCount; ++t)
    if (c.target.price[t]) targets[tranche_key(t)] = *c.target.price[t];
  json bounds = json::object(), fixed = json::object();
  for (std::size_t k = 0; k < kParamCount; ++k) {
    const char* name = param_name(static_cast<Param>(k));
    if (c.calibration.fixed[k])
      fixed[name] = *c.calibration.fixed[k];
    else
      bounds[name] = {c.calibration.bounds[k].first, c.calibration.bounds[k].second};
  }
  const auto& de = c.calibration.de;
  j["calibration"] = {{"targets", targets},
                      {"paths", c.calibration.paths},
                      {"mode", to_string(c.calibration.mode)},
                      {"de",
                       {{"population", de.population},
                        {"mutation", de.mutation},
                        {"crossover", de.crossover},
                        {"max_generations", de.max_generations},
                        {"tolerance", de.tolerance},
                        {"seed", de.seed}}},
                      {"bounds", bounds},
                      {"fixed", fixed}};
  j["run"] = {{"seed", c.run.seed},   {"paths", c.run.paths}, {"mode", to_string(c.run.mode)},
              {"workers", c.run.workers}, {"bins", c.run.bins}};
  if (!c.run.eval_dates.empty()) j["run"]["eval_dates"] = c.run.eval_dates;
  if (!c.run.output_dir.empty()) j["run"]["output_dir"] = c.run.output_dir;
  return j;
}

}  // namespace wf
