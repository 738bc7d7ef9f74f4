#include "wf/waterfall.hpp"

#include <cmath>

#include "wf/errors.hpp"

namespace wf {

const char* tranche_key(std::size_t tranche) {
  switch (tranche) {
    case kSenior: return "senior";
    case kMezzanine: return "mezzanine";
    case kJunior: return "junior";
    case kLrl: return "lrl";
    default: return "?";
  }
}

const char* to_string(Mode mode) { return mode == Mode::exact ? "exact" : "smooth"; }

Mode parse_mode(const std::string& text) {
  if (text == "exact") return Mode::exact;
  if (text == "smooth") return Mode::smooth;
  throw ConfigError("mode must be 'exact' or 'smooth', got '" + text + "'");
}

void DealConfig::validate(std::size_t n_periods) const {
  for (std::size_t i = 0; i < kTrancheCount; ++i) {
    require(tranches[i].notional > 0.0, std::string("deal: ") + tranche_key(i) + " notional must be > 0");
    require(std::isfinite(tranches[i].rate), std::string("deal: ") + tranche_key(i) + " rate must be finite");
  }
  require(ccr_threshold > 0.0 && ccr_threshold <= 1.0, "deal: ccr_threshold must lie in (0, 1]");
  require(senior_fees >= 0.0, "deal: senior_fees must be >= 0");
  require(servicer_fee_rate >= 0.0, "deal: servicer_fee_rate must be >= 0");
  require(reserve_target_rate >= 0.0, "deal: reserve_target_rate must be >= 0");
  require(lrl_link_ratio >= 0.0, "deal: lrl_link_ratio must be >= 0");
  require(period_length > 0.0, "deal: period_length must be > 0");
  require(contractual_profile.size() == n_periods,
          "deal: contractual_profile has " + std::to_string(contractual_profile.size()) + " periods, expected " +
              std::to_string(n_periods));
  for (std::size_t i = 1; i < contractual_profile.size(); ++i)
    require(contractual_profile[i] >= contractual_profile[i - 1], "deal: contractual_profile must be non-decreasing");
}

std::vector<double> cumulative(std::span<const double> amounts) {
  std::vector<double> out(amounts.size());
  double run = 0.0;
  for (std::size_t i = 0; i < amounts.size(); ++i) out[i] = run += amounts[i];
  return out;
}

DealConfig toy_deal(const CashFlowSchedule& base) {
  DealConfig d;
  d.tranches[kSenior] = {"Senior", 135.0, CouponType::floating, 0.025};
  d.tranches[kMezzanine] = {"Mezzanine", 31.5, CouponType::floating, 0.05};
  d.tranches[kJunior] = {"Junior", 13.5, CouponType::fixed, 0.10};
  d.tranches[kLrl] = {"LRL", 5.805, CouponType::floating, 0.002};
  d.ccr_threshold = 0.9;
  d.contractual_profile = cumulative(base.amounts);
  d.lrl_link_ratio = 5.805 / 135.0;
  d.period_length = base.period_length;
  return d;
}

template <class T>
T PeriodAllocation<T>::paid_out() const {
  T total = senior_expenses + servicer_fees + junior_variable;
  for (std::size_t i = 0; i < kTrancheCount; ++i) total = total + interest[i] + principal[i];
  return total;
}

template <class T>
T ccr(const BasicWaterfallState<T>& state, std::span<const double> profile, double eps, bool* guarded) {
  require(state.period < profile.size(), "ccr: period outside the contractual profile");
  double denom = profile[state.period];
  const bool guard = std::abs(denom) < eps;
  if (guard) denom += (denom >= 0.0 ? eps : -eps);
  if (guarded) *guarded = guard;
  return state.cumulative_collections / denom;
}

namespace {

template <class T>
void check_finite(const T& x, const char* step) {
  if (!std::isfinite(value_of(x))) throw NumericalError(std::string("waterfall: non-finite value at ") + step);
}

}  // namespace

template <class T>
std::pair<BasicWaterfallState<T>, PeriodAllocation<T>> run_waterfall_period(
    const T& collections, const BasicWaterfallState<T>& state, const DealConfig& deal, double index_fixing,
    Mode mode, const SmoothingConfig& smoothing, bool final_period) {
  if (value_of(collections) < 0.0) throw ConfigError("waterfall: negative available cash");
  check_finite(collections, "collections");
  check_finite(state.reserve, "reserve");
  check_finite(state.deferred_interest, "deferred interest");
  for (const auto& n : state.outstanding) check_finite(n, "outstanding notional");

  const bool smooth = mode == Mode::smooth;
  const double beta = smoothing.beta;
  const double dt = deal.period_length;

  PeriodAllocation<T> a;
  BasicWaterfallState<T> next = state;
  a.collections = collections;
  a.available = collections + state.reserve;
  next.cumulative_collections = state.cumulative_collections + collections;
  BasicWaterfallState<T> probe = state;
  probe.cumulative_collections = next.cumulative_collections;
  a.ccr = ccr(probe, deal.contractual_profile, smoothing.eps);

  T remaining = a.available;
  auto pay = [&](const T& due) {
    const T paid = smooth ? anchored_smooth_min(due, remaining, beta) : hard_min(due, remaining);
    remaining = remaining - paid;
    return paid;
  };
  auto gated_pay = [&](const T& due, const T& gate) {
    const T capped = smooth ? anchored_smooth_min(due, remaining, beta) : hard_min(due, remaining);
    const T paid = gate * capped;
    remaining = remaining - paid;
    return paid;
  };

  const auto& out = state.outstanding;
  auto accrual = [&](std::size_t t) { return out[t] * (deal[t].coupon_rate(index_fixing) * dt); };

  // 1-2
  a.senior_expenses = pay(T(deal.senior_fees));
  a.servicer_fees = pay(deal.servicer_fee_rate * collections);
  // 3-4
  a.interest[kLrl] = pay(accrual(kLrl));
  a.interest[kSenior] = pay(accrual(kSenior));
  check_finite(remaining, "senior interest");

  // 5: the trigger gates current Mezzanine interest.
  const T trigger = smooth ? sigmoid(a.ccr - deal.ccr_threshold, smoothing.trigger_k)
                           : T(value_of(a.ccr) >= deal.ccr_threshold ? 1.0 : 0.0);
  const T mezz_due = accrual(kMezzanine);
  const T mezz_current = gated_pay(mezz_due, trigger);
  T deferred = state.deferred_interest + (mezz_due - mezz_current);

  // 6: nothing is held back at maturity
  if (!final_period) a.reserve = pay(deal.reserve_target_rate * out[kSenior]);
  check_finite(remaining, "reserve");

  // 7: link_ratio x the Senior principal that step 8 is about to pay, capped
  // at the LRL balance.
  const T senior_claim =
      smooth ? anchored_smooth_min(out[kSenior], remaining, beta) : hard_min(out[kSenior], remaining);
  const T linked = deal.lrl_link_ratio * senior_claim;
  const T lrl_due = smooth ? anchored_smooth_min(linked, out[kLrl], beta) : hard_min(linked, out[kLrl]);
  a.principal[kLrl] = pay(lrl_due);
  // 8
  a.principal[kSenior] = pay(out[kSenior]);
  check_finite(remaining, "senior principal");

  // 9
  const T release = final_period ? T(1.0) : trigger;
  a.mezzanine_deferred_paid = gated_pay(deferred, release);
  deferred = deferred - a.mezzanine_deferred_paid;
  a.interest[kMezzanine] = mezz_current + a.mezzanine_deferred_paid;

  // 10-13
  a.principal[kMezzanine] = pay(out[kMezzanine]);
  a.interest[kJunior] = pay(accrual(kJunior));
  a.principal[kJunior] = pay(out[kJunior]);
  a.junior_variable = remaining;
  check_finite(remaining, "junior residual");

  for (std::size_t t = 0; t < kTrancheCount; ++t) next.outstanding[t] = out[t] - a.principal[t];
  next.reserve = a.reserve;
  next.deferred_interest = deferred;
  next.period = state.period + 1;
  a.outstanding = next.outstanding;
  a.deferred_interest = deferred;
  return {std::move(next), std::move(a)};
}

template <class T>
BasicTrancheCashFlows<T> run_waterfall(std::span<const T> collections, const DealConfig& deal,
                                       std::span<const double> index_fixings, Mode mode,
                                       const SmoothingConfig& smoothing) {
  const std::size_t n = collections.size();
  require(index_fixings.size() == n, "waterfall: index fixings and collections differ in length");
  deal.validate(n);
  BasicTrancheCashFlows<T> result;
  result.periods.reserve(n);
  auto state = initial_state<T>(deal);
  for (std::size_t j = 0; j < n; ++j) {
    auto [next, alloc] =
        run_waterfall_period<T>(collections[j], state, deal, index_fixings[j], mode, smoothing, j + 1 == n);
    state = std::move(next);
    result.periods.push_back(std::move(alloc));
  }
  return result;
}

#define WF_INSTANTIATE_WATERFALL(T)                                                                           \
  template struct PeriodAllocation<T>;                                                                        \
  template T ccr<T>(const BasicWaterfallState<T>&, std::span<const double>, double, bool*);                   \
  template std::pair<BasicWaterfallState<T>, PeriodAllocation<T>> run_waterfall_period<T>(                    \
      const T&, const BasicWaterfallState<T>&, const DealConfig&, double, Mode, const SmoothingConfig&, bool); \
  template BasicTrancheCashFlows<T> run_waterfall<T>(std::span<const T>, const DealConfig&,                   \
                                                     std::span<const double>, Mode, const SmoothingConfig&);

WF_INSTANTIATE_WATERFALL(double)
WF_INSTANTIATE_WATERFALL(Var)

#undef WF_INSTANTIATE_WATERFALL

}  // namespace wf
