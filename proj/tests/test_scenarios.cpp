#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "powmfg/scenarios.hpp"

using namespace powmfg;

namespace {

// T* from the enumerated race: beta*cost*steps/P - (k+1)b - flat.
double oracle_safe_value(double beta) {
  const auto r = oracle::race(beta, 6);
  const double steps = r.success_steps + 13.0 * (1.0 - r.success);
  return beta * 6.41 * steps / r.success - 7 * 6.25 - 0.16;
}

}  // namespace

TEST(SafeValue, MatchesOracle) {
  const ChainSnapshot s = ChainSnapshot::bitcoin_2023();
  for (double beta : {0.1, 0.24, 0.25, 0.26, 0.3, 0.45}) {
    const double ref = oracle_safe_value(beta);
    EXPECT_NEAR(safe_value(s, beta), std::max(0.0, ref), 1e-9 * std::abs(ref)) << beta;
  }
  EXPECT_NEAR(safe_value(s, 0.24), 981.31, 0.01);
  EXPECT_NEAR(safe_value(s, 0.25), 811.954, 0.001);
  EXPECT_NEAR(safe_value(s, 0.26), 677.835, 0.001);
  EXPECT_NEAR(safe_value(s, 0.3), 354.512, 0.001);
}

TEST(SafeValue, Limits) {
  const ChainSnapshot s = ChainSnapshot::bitcoin_2023();
  EXPECT_TRUE(std::isinf(safe_value(s, 0.0)));
  EXPECT_GT(safe_value(s, 1e-3), 1e6);
  ChainSnapshot rich = s;
  rich.block_reward = 100.0;
  EXPECT_EQ(safe_value(rich, 0.49), 0.0);  // negative solution clamps
  EXPECT_THROW(safe_value(s, 1.0), DomainError);
  EXPECT_THROW(safe_value(s, -0.1), DomainError);
}

TEST(SafeValue, Monotone) {
  const ChainSnapshot s = ChainSnapshot::bitcoin_2023();
  double prev = safe_value(s, 0.01);
  for (int i = 2; i < 50; ++i) {
    const double v = safe_value(s, i / 100.0);
    if (prev > 0.0) EXPECT_LT(v, prev);
    prev = v;
  }
  for (double beta : {0.1, 0.3}) {
    EXPECT_LT(safe_value(s, beta, 6.41), safe_value(s, beta, 7.0));
  }
}

TEST(SafeValue, ZeroProfit) {
  for (const FeePolicy f : {FeePolicy::constant(0.16), FeePolicy::proportional(0.01)}) {
    ChainSnapshot s = ChainSnapshot::bitcoin_2023();
    s.fee = f;
    for (int i = 1; i <= 9; ++i) {
      const double beta = 0.05 * i;
      const double t = safe_value(s, beta);
      if (t == 0.0) continue;
      const EconomicContext ctx{s.network_cost, 1, 1.0, s.block_reward, t, fee(f, t)};
      const double scale = attack_cost(RaceParams{beta, 6}, ctx);
      EXPECT_LE(std::abs(snapshot_adversary_reward(s, beta, t)), 1e-9 * scale);
    }
  }
}

TEST(Threshold, Bitcoin) {
  const ChainSnapshot s = ChainSnapshot::bitcoin_2023();
  const auto grid = default_beta_grid();
  ASSERT_EQ(grid.size(), 49u);
  EXPECT_EQ(threshold_beta(s, s.observed_value, grid), 0.26);
  EXPECT_EQ(threshold_beta(s, 0.0, grid), std::nullopt);
  EXPECT_EQ(threshold_beta(s, 1e12, grid), 0.01);
  // raising the observed value never raises the threshold
  double prev = 1.0;
  for (double obs : {100.0, 300.0, 774.84, 2000.0, 1e5}) {
    const double th = threshold_beta(s, obs, grid).value_or(1.0);
    EXPECT_LE(th, prev);
    prev = th;
  }
  const std::vector<double> unsorted{0.3, 0.2};
  EXPECT_THROW(threshold_beta(s, 1.0, unsorted), DomainError);
  const std::vector<double> outside{0.0, 0.2};
  EXPECT_THROW(threshold_beta(s, 1.0, outside), DomainError);
}

TEST(FeeEvolution, SmallRun) {
  const ChainSnapshot s = ChainSnapshot::bitcoin_2023();
  FeeEvolutionSetup setup;
  setup.horizon = 10;
  setup.wealth_points = 61;
  setup.alpha_points = 41;
  const std::vector<double> lambdas{0.0, 0.01};
  const auto runs = fee_evolution(s, 0.3, lambdas, setup);
  ASSERT_EQ(runs.size(), 2u);
  for (const auto& r : runs) {
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.t_star.size(), 11u);
  }
  // T* is affine in mean power; check it against the snapshot formula at t = 0
  ChainSnapshot proportional = s;
  proportional.fee = FeePolicy::proportional(0.0);
  const double t0 = safe_value(proportional, 0.3, 10 * runs[0].mean_alpha[0]);
  EXPECT_NEAR(runs[0].t_star[0], t0, 1e-9 * t0);
  EXPECT_GT(runs[1].t_star.back(), runs[0].t_star.back());
  EXPECT_THROW(fee_evolution(s, 0.0, lambdas, setup), DomainError);
}

TEST(FeeEvolution, SmallestSecuringLambda) {
  std::vector<FeeEvolutionSeries> runs(3);
  runs[0].lambda = 0.02;
  runs[0].t_star = {800.0, 900.0};
  runs[1].lambda = 0.01;
  runs[1].t_star = {500.0, 600.0};
  runs[2].lambda = 0.015;
  runs[2].t_star = {700.0, 780.0};
  EXPECT_EQ(smallest_securing_lambda(runs, 774.84), 0.015);
  EXPECT_EQ(smallest_securing_lambda(runs, 1000.0), std::nullopt);
}
