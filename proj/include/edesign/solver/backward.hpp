#pragma once

// Backward induction on the discretized e-state chain.

#include <cmath>
#include <limits>
#include <optional>

#include "edesign/solver/policy.hpp"

namespace edesign {

struct Solution {
  PolicyTable policy;
  ValueTable values;
};

namespace detail {

/// Two action values closer than this (relative) are treated as tied, so the
/// earlier action in Stop < Bet(0) < Bet(1e-4) < ... wins.
constexpr double kTieTolerance = 1e-13;

inline bool strictly_better(double candidate, double incumbent) {
  return candidate > incumbent + kTieTolerance * std::max(1.0, std::abs(incumbent));
}

inline double terminal_value(const RewardSpec& r, bool rejected) {
  switch (r.kind) {
    case RewardSpec::Kind::PMax: return rejected ? 1.0 : 0.0;
    case RewardSpec::Kind::ESSMin:
    case RewardSpec::Kind::BlockedESSMin: return rejected ? 0.0 : -1.0;
    case RewardSpec::Kind::Constrained:
    case RewardSpec::Kind::BlockedConstrained: return rejected ? r.lambda : 0.0;
  }
  return 0.0;
}

/// Per-stage reward of the bankrupt state (the trial keeps paying under ESS-min).
inline double bankrupt_stage_reward(const RewardSpec& r, int t) {
  return r.is_essmin() ? -r.recruit_cost(t) : 0.0;
}

inline void fill_terminal(ValueTable& v, const EGrid& grid, const RewardSpec& r, int n) {
  auto last = v.stage(n);
  for (std::size_t i = 0; i < last.size(); ++i)
    last[i] = terminal_value(r, static_cast<StateIndex>(i) == grid.top_index());
}

}  // namespace detail

/// Solves the Bellman equations under theta1 for stages n-1 down to first_stage.
///
/// Every live state takes the action with the largest one-step lookahead
/// r(x, a) + theta1 V[up] + (1 - theta1) V[down]; ties go to the earlier
/// action in the order Stop < Bet(0) < Bet(b1) < ... . Absorbing states
/// (0 and 1/alpha) record Bet(0).
inline Solution backward_induct(const Model& model, const RewardSpec& rewards, int first_stage = 0) {
  const DesignSpec& spec = model.spec();
  rewards.validate(spec);
  const EGrid& grid = model.e_grid();
  const BetGrid& bets = model.bet_grid();
  const TransitionTable& kernel = model.kernel();
  const int n = spec.n;
  const double p = spec.theta1;
  const auto top = grid.top_index();
  const auto nbets = static_cast<BetIndex>(bets.size());

  PolicyTable policy(model, rewards, first_stage);
  ValueTable values(n, grid.size(), first_stage);
  detail::fill_terminal(values, grid, rewards, n);

  for (int t = n - 1; t >= first_stage; --t) {
    const auto next = values.stage(t + 1);
    auto current = values.stage(t);
    const double cost = rewards.recruit_cost(t);
    const bool can_stop = rewards.stop_allowed_at(t);
    current[top] = next[top];
    current[0] = detail::bankrupt_stage_reward(rewards, t) + next[0];
    for (StateIndex i = 1; i < top; ++i) {
      double best_bet_value = -std::numeric_limits<double>::infinity();
      BetIndex best_bet = 0;
      for (BetIndex k = 0; k < nbets; ++k) {
        const double v = -cost + p * next[kernel.up(i, k)] + (1.0 - p) * next[kernel.down(i, k)];
        if (k == 0 || detail::strictly_better(v, best_bet_value)) {
          best_bet_value = v;
          best_bet = k;
        }
      }
      policy.set_continuation(t, i, best_bet);
      if (can_stop && !detail::strictly_better(best_bet_value, 0.0)) {
        policy.set(t, i, PolicyTable::kStop);
        current[i] = 0.0;
      } else {
        policy.set(t, i, best_bet);
        current[i] = best_bet_value;
      }
    }
  }
  return {std::move(policy), std::move(values)};
}

inline Solution backward_induct(const DesignSpec& spec, const Grids& grids, const RewardSpec& rewards) {
  return backward_induct(Model(spec, grids), rewards);
}

/// Power-maximizing design: V_0 at the index of 1 is the power of the discrete chain.
inline Solution solve_pmax(const Model& model) {
  Solution s = backward_induct(model, RewardSpec::pmax());
  s.policy.strategy = "pmax";
  return s;
}

/// Expected-sample-size-minimizing design under theta1 (blocked costs when the model has a schedule).
inline Solution solve_essmin(const Model& model) {
  const auto& spec = model.spec();
  Solution s = backward_induct(model, spec.blocks && !spec.blocks->is_fully_sequential()
                                          ? RewardSpec::blocked_essmin(*spec.blocks)
                                          : RewardSpec::essmin());
  s.policy.strategy = "essmin";
  return s;
}

/// Constant-bet policy on the bet grid {0, b, 1}; with b = kelly_bet this is the GROW e-process.
inline PolicyTable constant_bet_policy(const Model& model, double bet, std::string name = "constant") {
  require(bet >= 0.0 && bet <= 1.0, "bet must lie in [0, 1]");
  auto bet_grid = std::make_shared<const BetGrid>(BetGrid({0.0, bet, 1.0}));
  Model m(model.spec(), Grids{model.grids().e, bet_grid});
  PolicyTable policy(m, RewardSpec::pmax());
  const BetIndex code = bet_grid->index_of(bet);
  const auto top = m.e_grid().top_index();
  for (int t = 0; t < m.spec().n; ++t)
    for (StateIndex i = 1; i < top; ++i) policy.set(t, i, code);
  policy.strategy = std::move(name);
  return policy;
}

/// GROW: constant Kelly betting. Its futility curve stays at zero because the
/// hopeless-zone convention applies only to horizon-aware designs.
inline PolicyTable grow_policy(const Model& model) {
  PolicyTable p = constant_bet_policy(model, kelly_bet(model.spec().theta0, model.spec().theta1), "grow");
  p.futility_from_hopeless = false;
  return p;
}

/// Expected reward-to-go of a fixed policy under theta_eval. Stop yields 0
/// and ends the trial under every reward family.
inline ValueTable policy_value(const PolicyTable& policy, double theta_eval, const RewardSpec& rewards) {
  const Model& model = policy.model();
  rewards.validate(model.spec());
  const EGrid& grid = model.e_grid();
  const TransitionTable& kernel = model.kernel();
  const int n = model.spec().n;
  const auto top = grid.top_index();

  ValueTable values(n, grid.size(), policy.first_stage());
  detail::fill_terminal(values, grid, rewards, n);
  for (int t = n - 1; t >= policy.first_stage(); --t) {
    const auto next = values.stage(t + 1);
    auto current = values.stage(t);
    const double cost = rewards.recruit_cost(t);
    current[top] = next[top];
    current[0] = detail::bankrupt_stage_reward(rewards, t) + next[0];
    for (StateIndex i = 1; i < top; ++i) {
      const BetIndex k = policy.code(t, i);
      if (k == PolicyTable::kStop) {
        current[i] = 0.0;
        continue;
      }
      current[i] = -cost + theta_eval * next[kernel.up(i, k)] + (1.0 - theta_eval) * next[kernel.down(i, k)];
    }
  }
  return values;
}

/// Re-solves stages t..n-1 from an interim state, optionally under a revised
/// block schedule for the remaining n - t participants.
inline Solution resolve_from(const EState& state, const Model& model, const RewardSpec& rewards,
                             const std::optional<BlockSchedule>& remaining = std::nullopt) {
  const int n = model.spec().n;
  require(state.t >= 0 && state.t < n, "interim time must lie in [0, n)");
  require(state.m > 0.0 && state.m < model.spec().threshold(), "interim state must not be absorbing");
  if (!remaining) return backward_induct(model, rewards, state.t);

  require(remaining->total() == n - state.t, "revised schedule must cover the remaining participants");
  std::vector<int> sizes;
  if (state.t > 0) sizes.push_back(state.t);
  sizes.insert(sizes.end(), remaining->sizes().begin(), remaining->sizes().end());
  BlockSchedule full(std::move(sizes));

  DesignSpec spec = model.spec();
  spec.blocks = full;
  RewardSpec r = rewards;
  if (r.kind == RewardSpec::Kind::ESSMin || r.kind == RewardSpec::Kind::BlockedESSMin)
    r = RewardSpec::blocked_essmin(full);
  else if (r.is_constrained())
    r = RewardSpec::blocked_constrained(r.lambda, full);
  return backward_induct(model.with_spec(spec), r, state.t);
}

}  // namespace edesign
