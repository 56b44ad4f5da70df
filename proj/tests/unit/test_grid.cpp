#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "edesign/grid/grid.hpp"

using namespace edesign;

namespace {

DesignSpec spec_with(double theta0, double alpha = 0.05) {
  DesignSpec s;
  s.n = 10;
  s.theta0 = theta0;
  s.theta1 = std::min(0.99, theta0 + 0.2);
  s.alpha = alpha;
  return s;
}

}  // namespace

TEST(EGrid, DefaultShape) {
  const EGrid g = EGrid::build(0.05);
  ASSERT_EQ(g.size(), 2001U);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 1e-5);
  EXPECT_EQ(g.cap(), 20.0);
  EXPECT_EQ(g[g.one_index()], 1.0);
  EXPECT_EQ(g.one_index(), 1001);
  EXPECT_EQ(g[1000], 1.0 - 2.0 * std::numeric_limits<double>::epsilon());
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LT(g[i - 1], g[i]);
}

TEST(EGrid, LogAndLinearSpacing) {
  const EGrid g = EGrid::build(0.05);
  const double ratio = std::pow((1.0 - 2.0 * std::numeric_limits<double>::epsilon()) / 1e-5, 1.0 / 999.0);
  for (int i = 2; i <= 1000; ++i) EXPECT_NEAR(g[i] / g[i - 1], ratio, 1e-9);
  for (int i = 1002; i <= 2000; ++i) EXPECT_NEAR(g[i] - g[i - 1], 19.0 / 999.0, 1e-12);
}

TEST(EGrid, OtherAlphaAndSizes) {
  const EGrid g = EGrid::build(0.1, 10, 5);
  EXPECT_EQ(g.size(), 16U);
  EXPECT_EQ(g.cap(), 10.0);
  EXPECT_EQ(g[g.one_index()], 1.0);
  EXPECT_THROW(EGrid::build(0.05, 0, 10), InvalidArgument);
  EXPECT_THROW(EGrid::build(0.05, 10, 0), InvalidArgument);
  EXPECT_THROW(EGrid::build(1.5), InvalidArgument);
}

TEST(BetGrid, Standard) {
  const BetGrid b = BetGrid::standard();
  ASSERT_EQ(b.size(), 105U);
  EXPECT_EQ(b[0], 0.0);
  EXPECT_EQ(b[1], 1e-4);
  EXPECT_EQ(b[2], 1e-3);
  EXPECT_EQ(b[3], 0.01);
  EXPECT_EQ(b[101], 0.99);
  EXPECT_EQ(b[102], 0.999);
  EXPECT_EQ(b[103], 0.9999);
  EXPECT_EQ(b[104], 1.0);
  EXPECT_EQ(b.index_of(0.5), 52);
  EXPECT_EQ(b.index_of(0.505), -1);
  EXPECT_THROW(BetGrid({0.1, 1.0}), InvalidArgument);
  EXPECT_THROW(BetGrid({0.0, 0.5}), InvalidArgument);
}

TEST(ProjectFloor, SpecExamples) {
  const EGrid g = EGrid::build(0.05);
  EXPECT_EQ(project_floor(20.0, g), g.top_index());
  EXPECT_EQ(project_floor(35.0, g), g.top_index());
  EXPECT_EQ(project_floor(1.0, g), g.one_index());
  EXPECT_EQ(project_floor(5e-6, g), 0);
  EXPECT_THROW(project_floor(-1.0, g), InvalidArgument);
}

TEST(ProjectFloor, IdempotentAndMonotone) {
  const EGrid g = EGrid::build(0.05);
  for (StateIndex i = 0; i < static_cast<StateIndex>(g.size()); ++i) EXPECT_EQ(project_floor(g[i], g), i);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 25.0);
  for (int k = 0; k < 10000; ++k) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    EXPECT_LE(project_floor(a, g), project_floor(b, g));
    const StateIndex i = project_floor(a, g);
    EXPECT_LE(g[i], a);
    if (i < g.top_index()) {
      EXPECT_GT(g[i + 1], a);
    }
  }
}

TEST(TransitionKernel, SpecExamples) {
  const EGrid g = EGrid::build(0.05);
  const auto spec = spec_with(0.5);
  const StateIndex one = g.one_index();
  auto d = transition_kernel(one, 0.0, 0.8, spec, g);
  EXPECT_EQ(d.up_index, one);
  EXPECT_EQ(d.down_index, one);
  EXPECT_EQ(d.p_up, 0.8);
  d = transition_kernel(one, 1.0, 0.8, spec, g);
  EXPECT_EQ(d.down_index, 0);

  const EGrid unit = EGrid::build(0.05, 1000, 20);
  const StateIndex ten = project_floor(10.0, unit);
  ASSERT_EQ(unit[ten], 10.0);
  d = transition_kernel(ten, 1.0, 0.8, spec, unit);
  EXPECT_EQ(d.up_index, unit.top_index());
}

TEST(TransitionKernel, AbsorbingStatesSelfLoop) {
  const EGrid g = EGrid::build(0.05);
  const auto spec = spec_with(0.1);
  for (double b : {0.0, 0.5, 1.0}) {
    const auto top = transition_kernel(g.top_index(), b, 0.3, spec, g);
    EXPECT_EQ(top.up_index, g.top_index());
    EXPECT_EQ(top.down_index, g.top_index());
    const auto zero = transition_kernel(0, b, 0.3, spec, g);
    EXPECT_EQ(zero.up_index, 0);
    EXPECT_EQ(zero.down_index, 0);
  }
}

TEST(TransitionTable, MatchesKernel) {
  const EGrid g = EGrid::build(0.05);
  const BetGrid bets = BetGrid::standard();
  const auto spec = spec_with(0.1);
  const TransitionTable table(g, bets, spec.theta0);
  for (StateIndex i = 0; i < static_cast<StateIndex>(g.size()); i += 7) {
    for (BetIndex k = 0; k < static_cast<BetIndex>(bets.size()); ++k) {
      const auto d = transition_kernel(i, bets[k], 0.2, spec, g);
      EXPECT_EQ(table.up(i, k), d.up_index);
      EXPECT_EQ(table.down(i, k), d.down_index);
    }
  }
}

// Every (state, bet) of the standard grids, for several theta0.
TEST(TransitionTable, DiscreteSupermartingaleAndFloorDomination) {
  const BetGrid bets = BetGrid::standard();
  for (double alpha : {0.05, 0.1}) {
    const EGrid g = EGrid::build(alpha);
    for (double theta0 : {0.1, 0.3, 0.5, 0.9}) {
      const TransitionTable table(g, bets, theta0);
      for (StateIndex i = 1; i < g.top_index(); ++i) {
        const double m = g[i];
        for (BetIndex k = 0; k < static_cast<BetIndex>(bets.size()); ++k) {
          const double up = g[table.up(i, k)];
          const double down = g[table.down(i, k)];
          ASSERT_LE(theta0 * up + (1 - theta0) * down, m * (1 + 1e-15)) << "i=" << i << " k=" << k;
          ASSERT_LE(up, m * (1 + bets[k] * (1 / theta0 - 1)));
          ASSERT_LE(down, m * (1 - bets[k]));
        }
      }
    }
  }
}
