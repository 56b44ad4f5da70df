#pragma once

// Forward recursion of the state distribution on the discrete e-state chain.

#include <cmath>
#include <numeric>
#include <vector>

#include "edesign/core/betting.hpp"
#include "edesign/oc/profile.hpp"
#include "edesign/solver/policy.hpp"

namespace edesign {

/// Probability mass of the chain at one stage: live mass per grid index plus
/// the absorbed totals.
struct StateDistribution {
  int t = 0;
  std::vector<double> live;
  double rejected = 0.0;
  double stopped = 0.0;
  double bankrupt = 0.0;
  /// Stop-time histogram over t (mass absorbed by the Stop action at t).
  std::vector<double> stop_times;

  double live_total() const { return std::accumulate(live.begin(), live.end(), 0.0); }
  double total() const { return live_total() + rejected + stopped + bankrupt; }
};

namespace detail {

/// Action code actually played at (t, i): Stop only surfaces at analysis points.
inline BetIndex played_code(const PolicyTable& policy, const BlockSchedule& schedule, int t, StateIndex i) {
  const BetIndex c = policy.code(t, i);
  if (c == PolicyTable::kStop && !schedule.is_boundary(t)) return policy.continuation_code(t, i);
  return c;
}

/// Runs the recursion from `start` at time `t0` to the horizon, calling
/// observe(dist) at every t (after Stop removal, before the transition).
template <typename Observer>
StateDistribution propagate(const PolicyTable& policy, const DesignSpec& spec, double theta_eval, int t0,
                            StateIndex start, Observer&& observe) {
  const EGrid& grid = policy.e_grid();
  const TransitionTable& kernel = policy.model().kernel();
  const BlockSchedule schedule = spec.schedule();
  const auto top = grid.top_index();
  const int n = spec.n;

  StateDistribution dist;
  dist.t = t0;
  dist.live.assign(grid.size(), 0.0);
  dist.stop_times.assign(n + 1, 0.0);
  if (start == top)
    dist.rejected = 1.0;
  else if (start == 0)
    dist.bankrupt = 1.0;
  else
    dist.live[start] = 1.0;

  std::vector<double> next(grid.size());
  for (int t = t0; t <= n; ++t) {
    dist.t = t;
    if (t < n) {
      for (StateIndex i = 1; i < top; ++i) {
        if (dist.live[i] == 0.0) continue;
        if (played_code(policy, schedule, t, i) == PolicyTable::kStop) {
          dist.stopped += dist.live[i];
          dist.stop_times[t] += dist.live[i];
          dist.live[i] = 0.0;
        }
      }
    }
    observe(static_cast<const StateDistribution&>(dist));
    if (t == n) break;
    std::fill(next.begin(), next.end(), 0.0);
    for (StateIndex i = 1; i < top; ++i) {
      const double mass = dist.live[i];
      if (mass == 0.0) continue;
      const BetIndex k = played_code(policy, schedule, t, i);
      const StateIndex up = kernel.up(i, k);
      const StateIndex down = kernel.down(i, k);
      next[up] += theta_eval * mass;
      next[down] += (1.0 - theta_eval) * mass;
    }
    dist.rejected += next[top];
    dist.bankrupt += next[0];
    next[top] = 0.0;
    next[0] = 0.0;
    dist.live.swap(next);
  }
  return dist;
}

inline void check_policy_matches(const PolicyTable& policy, const DesignSpec& spec, const EGrid& grid) {
  if (!(grid == policy.e_grid())) throw GridMismatch("policy was solved on a different e-grid");
  require(spec.n == policy.n() && spec.theta0 == policy.spec().theta0 && spec.alpha == policy.spec().alpha,
          "policy was solved for a different design (n, theta0, alpha)");
}

}  // namespace detail

/// Exact operating characteristics by forward recursion from e-value 1 at t = 0.
/// The analysis schedule is taken from spec.blocks (fully sequential if absent).
inline OCProfile forward_oc(const PolicyTable& policy, double theta_eval, const DesignSpec& spec,
                            const EGrid& grid) {
  detail::check_policy_matches(policy, spec, grid);
  require(theta_eval >= 0.0 && theta_eval <= 1.0, "theta_eval must lie in [0, 1]");
  require(policy.first_stage() == 0, "forward_oc requires a policy covering every stage");
  const int n = spec.n;
  const BlockSchedule schedule = spec.schedule();

  OCProfile oc;
  oc.theta_eval = theta_eval;
  oc.cumulative_rejection.assign(n + 1, 0.0);
  oc.cumulative_futility.assign(n + 1, 0.0);
  oc.almost_hopeless_mass.assign(n + 1, 0.0);
  oc.analysis_points = schedule.boundaries();

  double futility = 0.0;
  detail::propagate(policy, spec, theta_eval, 0, grid.one_index(), [&](const StateDistribution& d) {
    const int t = d.t;
    oc.cumulative_rejection[t] = d.rejected;
    double hopeless = 0.0;
    double almost = 0.0;
    for (StateIndex i = 1; i < grid.top_index(); ++i) {
      if (d.live[i] == 0.0) continue;
      const Zone z = classify_zone({t, grid[i]}, spec);
      if (z == Zone::Hopeless) hopeless += d.live[i];
      if (z == Zone::AlmostHopeless) almost += d.live[i];
    }
    oc.almost_hopeless_mass[t] = almost;
    if (t < n && schedule.is_boundary(t)) {
      futility = d.stopped + d.bankrupt + (policy.futility_from_hopeless ? hopeless : 0.0);
      double recruited = 0.0;
      for (StateIndex i = 1; i < grid.top_index(); ++i) recruited += d.live[i];
      oc.ess += recruited * schedule.next_block_size(t);
    }
    oc.cumulative_futility[t] = futility;
  });
  return oc;
}

inline OCProfile forward_oc(const PolicyTable& policy, double theta_eval) {
  return forward_oc(policy, theta_eval, policy.spec(), policy.e_grid());
}

/// Probability under theta1 of reaching 1/alpha by n from the projected state,
/// following the policy (a Stop ends the trial without rejection).
inline double conditional_power(const EState& state, const PolicyTable& policy, const DesignSpec& spec,
                                const EGrid& grid) {
  detail::check_policy_matches(policy, spec, grid);
  require(state.t >= policy.first_stage() && state.t <= spec.n, "policy does not cover the state's stage");
  const StateIndex start = grid.floor_index(std::min(state.m, grid.cap()));
  const auto final = detail::propagate(policy, spec, spec.theta1, state.t, start, [](const auto&) {});
  return final.rejected;
}

}  // namespace edesign
