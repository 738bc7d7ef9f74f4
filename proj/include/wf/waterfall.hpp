#pragma once
// =============================================================================
// Priority of payments
//
// Each period the available cash (collections plus the reserve carried from
// the previous period) is allocated in this order:
//
//   1  senior expenses              8  Senior principal
//   2  servicer fees                9  Mezzanine deferred interest
//   3  LRL interest                10  Mezzanine principal
//   4  Senior interest             11  Junior interest
//   5  Mezzanine interest (CCR)    12  Junior principal
//   6  cash reserve top-up         13  residual to Junior
//   7  LRL principal (linked)
//
// Mezzanine current interest is paid at step 5 only while the cumulative
// collection ratio (CCR) is at or above the threshold; otherwise it accrues
// into a deferred balance that step 9 pays once the CCR is back above the
// threshold, or at the final period.
//
// Exact mode uses hard min/max and an indicator trigger. Smooth mode replaces
// every min/max by a softplus surrogate and the trigger by a sigmoid so the
// allocation is differentiable in the collections.
// =============================================================================

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wf/autodiff.hpp"
#include "wf/engines.hpp"

namespace wf {

enum Tranche : std::size_t { kSenior = 0, kMezzanine = 1, kJunior = 2, kLrl = 3 };
inline constexpr std::size_t kTrancheCount = 4;
const char* tranche_key(std::size_t tranche);  // "senior", "mezzanine", ...

enum class CouponType { floating, fixed };

struct TrancheSpec {
  std::string name;
  double notional = 0.0;
  CouponType coupon = CouponType::floating;
  double rate = 0.0;  // spread over the index when floating, the coupon when fixed

  double coupon_rate(double index_fixing) const {
    return coupon == CouponType::floating ? index_fixing + rate : rate;
  }
};

enum class Mode { exact, smooth };
const char* to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct DealConfig {
  std::array<TrancheSpec, kTrancheCount> tranches;
  double ccr_threshold = 0.9;
  std::vector<double> contractual_profile;  // cumulative expected collections per period
  double senior_fees = 0.0;                 // currency per period
  double servicer_fee_rate = 0.0;           // fraction of period collections
  double reserve_target_rate = 0.0;         // fraction of outstanding Senior notional
  double lrl_link_ratio = 0.0;              // LRL balance kept at this multiple of the Senior balance
  double period_length = 0.5;               // years; coupons accrue rate * period_length

  void validate(std::size_t n_periods) const;
  const TrancheSpec& operator[](std::size_t i) const { return tranches[i]; }
};

// The worked-example deal over `base` (profile = cumulative base collections).
DealConfig toy_deal(const CashFlowSchedule& base);

std::vector<double> cumulative(std::span<const double> amounts);

template <class T>
struct BasicWaterfallState {
  std::array<T, kTrancheCount> outstanding{};
  T reserve{0.0};
  T deferred_interest{0.0};
  T cumulative_collections{0.0};
  std::size_t period = 0;  // index of the next period to allocate
};

using WaterfallState = BasicWaterfallState<double>;

template <class T>
BasicWaterfallState<T> initial_state(const DealConfig& deal) {
  BasicWaterfallState<T> s;
  for (std::size_t i = 0; i < kTrancheCount; ++i) s.outstanding[i] = T(deal[i].notional);
  return s;
}

// Allocation of one period.
template <class T>
struct PeriodAllocation {
  T collections{0.0};
  T available{0.0};  // collections + reserve brought forward
  T ccr{0.0};
  T senior_expenses{0.0};
  T servicer_fees{0.0};
  std::array<T, kTrancheCount> interest{};   // Mezzanine includes step 9
  std::array<T, kTrancheCount> principal{};
  T mezzanine_deferred_paid{0.0};            // the step-9 part of interest[kMezzanine]
  T junior_variable{0.0};
  T reserve{0.0};                            // balance carried to the next period
  std::array<T, kTrancheCount> outstanding{};  // after this period
  T deferred_interest{0.0};                  // after this period

  // Cash received by a tranche in this period.
  T flow(std::size_t tranche) const {
    T f = interest[tranche] + principal[tranche];
    if (tranche == kJunior) f = f + junior_variable;
    return f;
  }
  // Everything that left the available cash except the reserve.
  T paid_out() const;
};

template <class T>
struct BasicTrancheCashFlows {
  std::vector<PeriodAllocation<T>> periods;

  std::vector<T> flows(std::size_t tranche) const {
    std::vector<T> out;
    out.reserve(periods.size());
    for (const auto& p : periods) out.push_back(p.flow(tranche));
    return out;
  }
};

using TrancheCashFlows = BasicTrancheCashFlows<double>;

// Cumulative collections over the contractual profile at the state's current
// period. A profile value below eps is shifted to eps and `guarded` is set.
template <class T>
T ccr(const BasicWaterfallState<T>& state, std::span<const double> profile, double eps, bool* guarded = nullptr);

// Allocates `collections` for period state.period.
template <class T>
std::pair<BasicWaterfallState<T>, PeriodAllocation<T>> run_waterfall_period(
    const T& collections, const BasicWaterfallState<T>& state, const DealConfig& deal, double index_fixing,
    Mode mode, const SmoothingConfig& smoothing, bool final_period);

template <class T>
BasicTrancheCashFlows<T> run_waterfall(std::span<const T> collections, const DealConfig& deal,
                                       std::span<const double> index_fixings, Mode mode,
                                       const SmoothingConfig& smoothing);

}  // namespace wf
