#pragma once

// Exhaustive path enumeration: replays every outcome sequence through the
// policy with direct arithmetic on the grid, independently of the
// transition table, the Bellman sweeps and the forward recursion.

#include <algorithm>
#include <cstdint>
#include <optional>

#include "edesign/core/betting.hpp"
#include "edesign/oc/profile.hpp"
#include "edesign/solver/policy.hpp"

namespace edesign {

struct OracleResult {
  OCProfile profile;
  /// Expected total reward of the policy from e-value 1 at t = 0.
  double value = 0.0;
};

namespace detail {

inline StateIndex oracle_floor(std::span<const double> values, double x) {
  const double capped = std::min(x, values.back());
  return static_cast<StateIndex>(std::upper_bound(values.begin(), values.end(), capped) - values.begin() - 1);
}

}  // namespace detail

/// Enumerates all 2^n outcome sequences (n <= 20) and accumulates curves,
/// sample size and the total reward under `rewards` (the policy's own reward
/// family when omitted).
inline OracleResult brute_force_oracle(const PolicyTable& policy, double theta_eval, const DesignSpec& spec,
                                       std::optional<RewardSpec> rewards = std::nullopt) {
  const int n = spec.n;
  if (n > 20) throw InvalidArgument("brute-force oracle refuses n > 20");
  require(policy.first_stage() == 0, "oracle requires a policy covering every stage");
  const RewardSpec r = rewards.value_or(policy.rewards());
  r.validate(spec);
  const auto values = policy.e_grid().values();
  const auto top = static_cast<StateIndex>(values.size() - 1);
  const BlockSchedule schedule = spec.schedule();
  const double odds = 1.0 / spec.theta0 - 1.0;
  const bool blocked = r.is_blocked();

  auto cost_at = [&](int t) -> double {
    if (r.kind == RewardSpec::Kind::PMax) return 0.0;
    if (!blocked) return 1.0;
    return r.schedule->is_boundary(t) ? r.schedule->next_block_size(t) : 0.0;
  };

  OracleResult out;
  OCProfile& oc = out.profile;
  oc.theta_eval = theta_eval;
  oc.cumulative_rejection.assign(n + 1, 0.0);
  oc.cumulative_futility.assign(n + 1, 0.0);
  oc.almost_hopeless_mass.assign(n + 1, 0.0);
  oc.analysis_points = schedule.boundaries();

  const std::uint64_t paths = std::uint64_t{1} << n;
  for (std::uint64_t bits = 0; bits < paths; ++bits) {
    double prob = 1.0;
    for (int t = 0; t < n; ++t) prob *= ((bits >> t) & 1U) ? theta_eval : 1.0 - theta_eval;
    if (prob == 0.0) continue;

    StateIndex idx = policy.e_grid().one_index();
    bool stopped = false;
    int rejected_at = -1;
    int futile_at = -1;
    double reward = 0.0;
    double sample = 0.0;
    for (int t = 0; t <= n; ++t) {
      if (idx == top && rejected_at < 0) rejected_at = t;
      const bool live = !stopped && idx != top && idx != 0;
      bool continuing = live;
      BetIndex code = 0;
      if (live && t < n) {
        code = policy.code(t, idx);
        if (code == PolicyTable::kStop) {
          if (schedule.is_boundary(t)) {
            stopped = true;
            continuing = false;
          } else {
            code = policy.continuation_code(t, idx);
          }
        }
      }
      const double m = values[idx];
      if (continuing && t < n && classify_zone({t, m}, spec) == Zone::AlmostHopeless) oc.almost_hopeless_mass[t] += prob;
      if (t < n && schedule.is_boundary(t) && futile_at < 0) {
        const bool hopeless = continuing && classify_zone({t, m}, spec) == Zone::Hopeless;
        if (stopped || idx == 0 || (policy.futility_from_hopeless && hopeless)) futile_at = t;
      }
      if (t == n) {
        if (!stopped) {
          if (r.kind == RewardSpec::Kind::PMax) reward += (idx == top) ? 1.0 : 0.0;
          if (r.is_essmin()) reward += (idx == top) ? 0.0 : -1.0;
          if (r.is_constrained()) reward += (idx == top) ? r.lambda : 0.0;
        }
        break;
      }
      if (continuing) {
        reward -= cost_at(t);
        if (schedule.is_boundary(t)) sample += schedule.next_block_size(t);
        const double bet = policy.bet_grid()[code];
        const bool success = (bits >> t) & 1U;
        idx = detail::oracle_floor(values, success ? m * (1.0 + bet * odds) : m * (1.0 - bet));
      } else if (idx == 0 && !stopped && r.is_essmin()) {
        reward -= cost_at(t);
      }
    }
    for (int t = 0; t <= n; ++t) {
      if (rejected_at >= 0 && t >= rejected_at) oc.cumulative_rejection[t] += prob;
      if (futile_at >= 0 && t >= futile_at) oc.cumulative_futility[t] += prob;
    }
    oc.ess += prob * sample;
    out.value += prob * reward;
  }
  return out;
}

/// Power when the bets chosen on the discrete chain are applied to the
/// unprojected capital process; rejection when that capital reaches 1/alpha.
inline double brute_force_continuous_power(const PolicyTable& policy, double theta_eval, const DesignSpec& spec) {
  const int n = spec.n;
  if (n > 20) throw InvalidArgument("brute-force oracle refuses n > 20");
  const auto values = policy.e_grid().values();
  const auto top = static_cast<StateIndex>(values.size() - 1);
  const BlockSchedule schedule = spec.schedule();
  double power = 0.0;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
    double prob = 1.0;
    for (int t = 0; t < n; ++t) prob *= ((bits >> t) & 1U) ? theta_eval : 1.0 - theta_eval;
    StateIndex idx = policy.e_grid().one_index();
    double continuous = 1.0;
    for (int t = 0; t < n && idx != 0 && idx != top; ++t) {
      BetIndex code = policy.code(t, idx);
      if (code == PolicyTable::kStop) {
        if (schedule.is_boundary(t)) break;
        code = policy.continuation_code(t, idx);
      }
      const bool success = (bits >> t) & 1U;
      const double bet = policy.bet_grid()[code];
      const double m = values[idx];
      continuous = capital_update(continuous, bet, success ? 1 : 0, spec.theta0);
      idx = detail::oracle_floor(values, success ? m * (1.0 + bet * (1.0 / spec.theta0 - 1.0)) : m * (1.0 - bet));
      if (continuous >= spec.threshold()) {
        power += prob;
        break;
      }
    }
  }
  return power;
}

}  // namespace edesign
