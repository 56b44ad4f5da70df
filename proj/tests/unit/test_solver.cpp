#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "edesign/oc/forward.hpp"
#include "edesign/oc/oracle.hpp"
#include "edesign/solver/strategy.hpp"

using namespace edesign;

namespace {

DesignSpec spec_with(int n, double theta0, double theta1, double alpha = 0.05, double beta = 0.2) {
  DesignSpec s;
  s.n = n;
  s.theta0 = theta0;
  s.theta1 = theta1;
  s.alpha = alpha;
  s.beta = beta;
  return s;
}

DesignSpec scenario() { return spec_with(50, 0.1, 0.242); }

DesignSpec with_blocks(DesignSpec s, BlockSchedule b) {
  s.blocks = std::move(b);
  return s;
}

bool close(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

// Largest one-step lookahead over all bets and the stored action's lookahead.
void expect_bellman(const Solution& s, const RewardSpec& r) {
  const Model& model = s.policy.model();
  const auto& kernel = model.kernel();
  const auto top = model.e_grid().top_index();
  const double p = model.spec().theta1;
  for (int t = 0; t < model.spec().n; ++t) {
    for (StateIndex i = 1; i < top; ++i) {
      double best = r.stop_allowed_at(t) ? 0.0 : -1e300;
      for (BetIndex k = 0; k < static_cast<BetIndex>(model.bet_grid().size()); ++k)
        best = std::max(best, -r.recruit_cost(t) + p * s.values(t + 1, kernel.up(i, k)) +
                                  (1 - p) * s.values(t + 1, kernel.down(i, k)));
      const BetIndex c = s.policy.code(t, i);
      const double stored = c == PolicyTable::kStop
                                ? 0.0
                                : -r.recruit_cost(t) + p * s.values(t + 1, kernel.up(i, c)) +
                                      (1 - p) * s.values(t + 1, kernel.down(i, c));
      ASSERT_TRUE(close(stored, s.values(t, i))) << "t=" << t << " i=" << i;
      ASSERT_TRUE(close(best, s.values(t, i))) << "t=" << t << " i=" << i;
    }
  }
}

}  // namespace

TEST(BackwardInduct, BellmanOptimalityPmax) {
  const Model model = Model::standard(spec_with(10, 0.2, 0.45));
  expect_bellman(solve_pmax(model), RewardSpec::pmax());
}

TEST(BackwardInduct, BellmanOptimalityEssmin) {
  const Model model = Model::standard(spec_with(10, 0.2, 0.45));
  expect_bellman(solve_essmin(model), RewardSpec::essmin());
}

TEST(BackwardInduct, BellmanOptimalityConstrained) {
  const Model model = Model::standard(spec_with(10, 0.2, 0.45));
  const auto r = RewardSpec::constrained(6.0);
  expect_bellman(backward_induct(model, r), r);
}

TEST(BackwardInduct, SingleStepCannotReachThreshold) {
  const Model model = Model::standard(spec_with(1, 0.5, 0.8));
  const Solution s = solve_pmax(model);
  EXPECT_EQ(s.values(0, model.e_grid().one_index()), 0.0);
}

TEST(BackwardInduct, AbsorbingValues) {
  const Model model = Model::standard(spec_with(8, 0.3, 0.6));
  const Solution s = solve_pmax(model);
  for (int t = 0; t <= 8; ++t) {
    EXPECT_EQ(s.values(t, model.e_grid().top_index()), 1.0);
    EXPECT_EQ(s.values(t, 0), 0.0);
  }
}

TEST(BackwardInduct, TieBreakIsDeterministic) {
  const Model model = Model::standard(spec_with(12, 0.1, 0.3));
  const Solution a = backward_induct(model, RewardSpec::constrained(4.0));
  const Solution b = backward_induct(model, RewardSpec::constrained(4.0));
  EXPECT_TRUE(a.policy == b.policy);
  EXPECT_TRUE(std::equal(a.policy.codes().begin(), a.policy.codes().end(), b.policy.codes().begin()));
}

TEST(BackwardInduct, RejectsRewardScheduleMismatch) {
  const Model model = Model::standard(spec_with(10, 0.2, 0.4));
  RewardSpec r{RewardSpec::Kind::BlockedESSMin, 0.0, std::nullopt};
  EXPECT_THROW(backward_induct(model, r), InvalidArgument);
  EXPECT_THROW(backward_induct(model, RewardSpec::blocked_essmin(BlockSchedule({3, 3}))), InvalidArgument);
  RewardSpec stray = RewardSpec::essmin();
  stray.schedule = BlockSchedule({5, 5});
  EXPECT_THROW(backward_induct(model, stray), InvalidArgument);
  EXPECT_THROW(backward_induct(model, RewardSpec::constrained(-1.0)), InvalidArgument);
}

TEST(BackwardInduct, MatchesPathEnumeration) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 1; n <= 10; ++n) {
    const double theta0 = 0.05 + 0.5 * u(rng);
    const double theta1 = theta0 + 0.05 + (0.9 - theta0) * u(rng);
    const double alpha = 0.02 + 0.2 * u(rng);
    const Model model = Model::standard(spec_with(n, theta0, theta1, alpha));
    for (const RewardSpec& r : {RewardSpec::pmax(), RewardSpec::essmin(), RewardSpec::constrained(3.0 * n)}) {
      const Solution s = backward_induct(model, r);
      const OracleResult o = brute_force_oracle(s.policy, theta1, model.spec());
      EXPECT_TRUE(close(s.values(0, model.e_grid().one_index()), o.value))
          << "n=" << n << " kind=" << to_string(r.kind) << " dp=" << s.values(0, model.e_grid().one_index())
          << " oracle=" << o.value;
    }
  }
}

TEST(PolicyValue, ReproducesSolvedValues) {
  const Model model = Model::standard(spec_with(12, 0.15, 0.4));
  for (const RewardSpec& r : {RewardSpec::pmax(), RewardSpec::essmin(), RewardSpec::constrained(10.0)}) {
    const Solution s = backward_induct(model, r);
    const ValueTable v = policy_value(s.policy, model.spec().theta1, r);
    for (int t = 0; t <= 12; ++t)
      for (StateIndex i = 0; i < static_cast<StateIndex>(model.e_grid().size()); ++i)
        ASSERT_TRUE(close(v(t, i), s.values(t, i))) << to_string(r.kind) << " t=" << t << " i=" << i;
  }
}

TEST(PolicyValue, AllStopPolicyIsWorthZero) {
  const Model model = Model::standard(spec_with(6, 0.2, 0.4));
  PolicyTable stop(model, RewardSpec::essmin());
  for (int t = 0; t < 6; ++t)
    for (StateIndex i = 1; i < model.e_grid().top_index(); ++i) stop.set(t, i, PolicyTable::kStop);
  const ValueTable v = policy_value(stop, 0.4, RewardSpec::essmin());
  for (int t = 0; t < 6; ++t)
    for (StateIndex i = 1; i < model.e_grid().top_index(); ++i) ASSERT_EQ(v(t, i), 0.0);
}

TEST(PolicyValue, ConstantKellyMatchesEnumeration) {
  for (int n : {4, 9, 12}) {
    const Model model = Model::standard(spec_with(n, 0.3, 0.55));
    const PolicyTable grow = grow_policy(model);
    const ValueTable v = policy_value(grow, 0.55, RewardSpec::pmax());
    const OracleResult o = brute_force_oracle(grow, 0.55, model.spec());
    EXPECT_TRUE(close(v(0, model.e_grid().one_index()), o.value)) << n;
  }
}

TEST(SolvePmax, FinalStageBetReachesPowerBoundary) {
  const DesignSpec spec = spec_with(20, 0.1, 0.242);
  const Model model = Model::standard(spec);
  const Solution s = solve_pmax(model);
  const EGrid& g = model.e_grid();
  const int t = spec.n - 1;
  int checked = 0;
  for (StateIndex i = 1; i < g.top_index(); ++i) {
    if (classify_zone({t, g[i]}, spec) == Zone::Hopeless) continue;
    const double bound = final_bet_power_boundary(g[i], spec.alpha, spec.theta0);
    ASSERT_GE(s.policy.action(t, i).bet, bound * (1 - 1e-12)) << "m=" << g[i];
    ASSERT_EQ(s.values(t, i), spec.theta1);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(SolvePmax, DominatesConstantKelly) {
  const Model model = Model::standard(scenario());
  const double pmax = forward_oc(solve_pmax(model).policy, 0.242).final_rejection();
  const double kelly = forward_oc(grow_policy(model), 0.242).final_rejection();
  EXPECT_GE(pmax, kelly);
  EXPECT_GE(pmax, 0.80);
}

TEST(SolveEssmin, BankruptStateCostsRemainingStages) {
  const int n = 15;
  const Model model = Model::standard(spec_with(n, 0.2, 0.5));
  const Solution s = solve_essmin(model);
  for (int t = 0; t <= n; ++t) EXPECT_EQ(s.values(t, 0), -(n + 1.0 - t)) << t;
}

TEST(SolveEssmin, NeverIdlesWhileRejectionIsReachable) {
  const Model model = Model::standard(spec_with(15, 0.2, 0.5));
  const Solution ess = solve_essmin(model);
  const Solution pmax = solve_pmax(model);
  int checked = 0;
  for (int t = 0; t < 15; ++t) {
    for (StateIndex i = 1; i < model.e_grid().top_index(); ++i) {
      if (pmax.values(t, i) <= 0.0) continue;
      ASSERT_GT(ess.policy.action(t, i).bet, 0.0) << "t=" << t << " m=" << model.e_grid()[i];
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(SolveConstrained, ZeroLambdaStopsEverywhere) {
  const Model model = Model::standard(spec_with(10, 0.2, 0.45));
  const Solution s = backward_induct(model, RewardSpec::constrained(0.0));
  for (int t = 0; t < 10; ++t)
    for (StateIndex i = 1; i < model.e_grid().top_index(); ++i) ASSERT_EQ(s.policy.code(t, i), PolicyTable::kStop);
  const OCProfile oc = forward_oc(s.policy, 0.45);
  EXPECT_EQ(oc.ess, 0.0);
}

TEST(SolveConstrained, ScenarioPowerWindowAndTrace) {
  const Model model = Model::standard(scenario());
  const ConstrainedSolution c = solve_constrained(model);
  const OCProfile oc = forward_oc(c.policy, 0.242);
  EXPECT_GT(oc.final_rejection(), 0.8);
  EXPECT_LE(oc.final_rejection(), 0.81);
  EXPECT_EQ(oc.final_rejection(), c.trace.final_power);
  EXPECT_LT(oc.ess, 50.0);
  EXPECT_LE(forward_oc(c.policy, 0.1).final_rejection(), 0.05);

  auto its = c.trace.iterations;
  std::sort(its.begin(), its.end(), [](auto& a, auto& b) { return a.lambda < b.lambda; });
  for (std::size_t k = 1; k < its.size(); ++k) EXPECT_LE(its[k - 1].power, its[k].power);
}

TEST(SolveConstrained, FutilityRegionIsDownwardClosed) {
  const Model model = Model::standard(scenario());
  const ConstrainedSolution c = solve_constrained(model);
  for (int t = 0; t < 50; ++t) {
    bool seen_continue = false;
    for (StateIndex i = 1; i < model.e_grid().top_index(); ++i) {
      const bool stop = c.policy.code(t, i) == PolicyTable::kStop;
      if (!stop) seen_continue = true;
      ASSERT_FALSE(stop && seen_continue) << "t=" << t << " m=" << model.e_grid()[i];
    }
  }
}

TEST(SolveConstrained, InfeasibleAndNonConvergent) {
  const Model tight = Model::standard(spec_with(5, 0.1, 0.3, 0.05, 0.01));
  EXPECT_THROW(solve_constrained(tight), InfeasibleConstraint);
  const Model model = Model::standard(scenario());
  EXPECT_THROW(solve_constrained(model, {0.01, 2}), NonConvergence);
}

TEST(Blocked, PmaxPowerIgnoresSchedule) {
  const Model seq = Model::standard(scenario());
  const double base = forward_oc(solve_pmax(seq).policy, 0.242).final_rejection();
  for (auto schedule : {BlockSchedule::equal_blocks(50, 1), BlockSchedule::equal_blocks(10, 5),
                        BlockSchedule::equal_blocks(2, 25)}) {
    const Model m = seq.with_spec(with_blocks(scenario(), schedule));
    const auto s = solve_blocked(m, Strategy::PMax);
    EXPECT_NEAR(forward_oc(s.policy, 0.242).final_rejection(), base, 1e-12) << schedule.label();
  }
}

TEST(Blocked, ConstrainedStopsOnlyAtBoundaries) {
  const DesignSpec spec = with_blocks(spec_with(12, 0.2, 0.5), BlockSchedule({4, 4, 4}));
  const Model model = Model::standard(spec);
  const Solution s = backward_induct(model, RewardSpec::blocked_constrained(5.0, *spec.blocks));
  for (int t = 0; t < 12; ++t) {
    if (spec.blocks->is_boundary(t)) continue;
    for (StateIndex i = 1; i < model.e_grid().top_index(); ++i) ASSERT_NE(s.policy.code(t, i), PolicyTable::kStop);
  }
  const OracleResult o = brute_force_oracle(s.policy, 0.5, spec);
  EXPECT_TRUE(close(s.values(0, model.e_grid().one_index()), o.value));
}

TEST(Blocked, EssminCountsWholeBlocks) {
  const DesignSpec spec = with_blocks(spec_with(10, 0.2, 0.5), BlockSchedule({3, 7}));
  const Model model = Model::standard(spec);
  const auto s = solve_blocked(model, Strategy::ESSMin);
  EXPECT_EQ(s.policy.rewards().kind, RewardSpec::Kind::BlockedESSMin);
  const OracleResult o = brute_force_oracle(s.policy, 0.5, spec);
  EXPECT_TRUE(close((*s.values)(0, model.e_grid().one_index()), o.value));
  EXPECT_THROW(solve_blocked(Model::standard(spec_with(10, 0.2, 0.5)), Strategy::PMax), InvalidArgument);
}

TEST(ResolveFrom, UnchangedDesignReproducesSlice) {
  const Model model = Model::standard(spec_with(16, 0.15, 0.4));
  for (const RewardSpec& r : {RewardSpec::pmax(), RewardSpec::essmin(), RewardSpec::constrained(12.0)}) {
    const Solution full = backward_induct(model, r);
    const EGrid& g = model.e_grid();
    const Solution part = resolve_from({6, g[1200]}, model, r);
    for (int t = 6; t < 16; ++t)
      for (StateIndex i = 0; i < static_cast<StateIndex>(g.size()); ++i) {
        ASSERT_EQ(part.policy.code(t, i), full.policy.code(t, i));
        ASSERT_EQ(part.values(t, i), full.values(t, i));
      }
  }
}

TEST(ResolveFrom, RevisedBlocksKeepPmaxPower) {
  const Model model = Model::standard(spec_with(16, 0.15, 0.4));
  const Solution full = solve_pmax(model);
  const StateIndex i = 1150;
  const Solution revised = resolve_from({6, model.e_grid()[i]}, model, RewardSpec::pmax(), BlockSchedule({5, 5}));
  EXPECT_EQ(revised.values(6, i), full.values(6, i));
  EXPECT_THROW(resolve_from({6, 1.0}, model, RewardSpec::pmax(), BlockSchedule({5, 4})), InvalidArgument);
  EXPECT_THROW(resolve_from({6, 20.0}, model, RewardSpec::pmax()), InvalidArgument);
}

TEST(ResolveFrom, HopelessStateHasNoPower) {
  const DesignSpec spec = spec_with(16, 0.15, 0.4);
  const Model model = Model::standard(spec);
  const EGrid& g = model.e_grid();
  const int t = 12;
  const double m = hopeless_edge(spec.n - t, spec.alpha, spec.theta0) * 0.9;
  const Solution s = resolve_from({t, m}, model, RewardSpec::pmax());
  EXPECT_EQ(s.values(t, g.floor_index(m)), 0.0);
}

TEST(Strategy, NamesRoundTrip) {
  for (Strategy s : {Strategy::PMax, Strategy::ESSMin, Strategy::Constrained, Strategy::Grow})
    EXPECT_EQ(strategy_from_string(to_string(s)), s);
  EXPECT_THROW(strategy_from_string("kelly"), InvalidArgument);
}

TEST(Strategy, GrowUsesKellyBet) {
  const Model model = Model::standard(scenario());
  const auto s = solve_strategy(model, Strategy::Grow);
  EXPECT_FALSE(s.values.has_value());
  EXPECT_NEAR(s.policy.action(0, model.e_grid().one_index()).bet, kelly_bet(0.1, 0.242), 1e-15);
  EXPECT_FALSE(s.policy.futility_from_hopeless);
}
