#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "powmfg/montecarlo.hpp"

using namespace powmfg;

namespace {

GameParams small_game(double beta) {
  GameParams p;
  p.num_miners = 4;
  p.block_reward = 4.0;
  p.beta = beta;
  p.horizon = 5;
  p.tx_max = 100.0;
  p.initial_wealth = 10.0;
  p.wealth_max = 40.0;
  p.wealth_points = 41;
  p.alpha_points = 21;
  p.tx_points = 11;
  return p;
}

}  // namespace

TEST(Race, FairCoin) {
  const SimReport r = simulate_race({0.5, 0}, 200000, 7);
  EXPECT_LE(std::abs(r.success_rate - 0.5), 3 * r.success_se);
  EXPECT_EQ(r.mean_steps, 1.0);
  EXPECT_EQ(r.mean_charged_steps, 1.0);
}

TEST(Race, MatchesOracle) {
  const auto ref = oracle::race(0.3, 6);
  const SimReport r = simulate_race({0.3, 6}, 400000, 11);
  EXPECT_LE(std::abs(r.success_rate - 0.0623752117992), 3 * r.success_se);
  EXPECT_LE(std::abs(r.success_rate - ref.success), 3 * r.success_se);
  EXPECT_LE(std::abs(r.mean_steps - (ref.success_steps + ref.failure_steps)), 3 * r.mean_steps_se);
  EXPECT_LE(std::abs(r.mean_charged_steps - 12.923388003442), 3 * r.mean_charged_steps_se);
}

TEST(Race, BetaZero) {
  const SimReport r = simulate_race({0.0, 6}, 10000, 1);
  EXPECT_EQ(r.success_rate, 0.0);
  EXPECT_EQ(r.successes, 0u);
  EXPECT_EQ(r.mean_steps, 7.0);
  EXPECT_EQ(r.mean_charged_steps, 13.0);
}

TEST(Race, Reproducible) {
  const SimReport a = simulate_race({0.4, 4}, 50000, 42, 1);
  EXPECT_EQ(a, simulate_race({0.4, 4}, 50000, 42, 1));
  EXPECT_EQ(a, simulate_race({0.4, 4}, 50000, 42, 3));
  EXPECT_EQ(a, simulate_race({0.4, 4}, 50000, 42, 8));
  EXPECT_NE(a.successes, simulate_race({0.4, 4}, 50000, 43, 1).successes);
}

TEST(Race, RejectsBadInput) {
  EXPECT_THROW(simulate_race({0.3, 6}, 0, 1), DomainError);
  EXPECT_THROW(simulate_race({1.0, 6}, 10, 1), DomainError);
}

TEST(Rng, StreamsDiffer) {
  SplitMix64 a = SplitMix64::stream(1, 0);
  SplitMix64 b = SplitMix64::stream(1, 1);
  SplitMix64 c = SplitMix64::stream(2, 0);
  const auto x = a();
  EXPECT_NE(x, b());
  EXPECT_NE(x, c());
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Game, ZeroPolicyKeepsWealth) {
  GameParams p = small_game(0.3);
  PolicyTable policy{TimeTable(p.steps(), 41), TimeTable(p.steps(), 41)};
  const std::vector<double> traj(p.steps(), 1.0);
  SimConfig cfg;
  cfg.trials = 2000;
  cfg.agents = 3;
  const SimReport r = simulate_game(policy, traj, p, cfg);
  for (std::size_t t = 0; t < r.mean_wealth.size(); ++t) {
    EXPECT_EQ(r.mean_wealth[t], 10.0);
    EXPECT_EQ(r.mean_wealth_se[t], 0.0);
  }
  for (auto n : r.agent_blocks) EXPECT_EQ(n, 0u);
}

TEST(Game, MatchesSolverAtBetaZero) {
  GameParams p = small_game(0.0);
  const EquilibriumResult eq = solve_equilibrium(p);
  ASSERT_TRUE(eq.converged);
  const auto dp = evaluate_policy(p, eq.policy, eq.mean_alpha, RewardMode::aware,
                                  AttackMode::present);
  SimConfig cfg;
  cfg.trials = 100000;
  cfg.seed = 2024;
  cfg.snap_to_grid = true;
  const SimReport r = simulate_game(eq.policy, eq.mean_alpha, p, cfg);
  ASSERT_EQ(r.mean_wealth.size(), dp.size());
  for (std::size_t t = 0; t < dp.size(); ++t) {
    EXPECT_LE(std::abs(r.mean_wealth[t] - dp[t]), 3 * r.mean_wealth_se[t] + 1e-12) << t;
  }
  // continuous wealth stays close to the grid model
  cfg.snap_to_grid = false;
  const SimReport c = simulate_game(eq.policy, eq.mean_alpha, p, cfg);
  for (std::size_t t = 0; t < dp.size(); ++t) EXPECT_NEAR(c.mean_wealth[t], dp[t], 0.05 * dp[t]);
}

TEST(Game, NaiveAgainstStrongAdversary) {
  GameParams p = small_game(0.45);
  p.reward_mode = RewardMode::naive;
  const EquilibriumResult eq = solve_equilibrium(p);
  ASSERT_TRUE(eq.converged);
  const auto dp = evaluate_policy(p, eq.policy, eq.mean_alpha, RewardMode::naive,
                                  AttackMode::present);
  SimConfig cfg;
  cfg.trials = 100000;
  cfg.seed = 99;
  cfg.snap_to_grid = true;
  const SimReport r = simulate_game(eq.policy, eq.mean_alpha, p, cfg);
  for (std::size_t t = 0; t < dp.size(); ++t) {
    EXPECT_LE(std::abs(r.mean_wealth[t] - dp[t]), 3 * r.mean_wealth_se[t] + 1e-12) << t;
  }
  for (double f : r.attack_frequency) EXPECT_EQ(f, 1.0);
  EXPECT_LT(r.mean_wealth.back(), r.mean_wealth.front());
  for (std::size_t t = 1; t < dp.size(); ++t) EXPECT_LT(dp[t], dp[t - 1]);
}

TEST(Game, ReproducibleAcrossThreads) {
  GameParams p = small_game(0.35);
  const EquilibriumResult eq = solve_equilibrium(p);
  SimConfig cfg;
  cfg.trials = 5000;
  cfg.seed = 5;
  cfg.agents = 4;
  cfg.decision = DecisionRule::Kind::smooth;
  const SimReport a = simulate_game(eq.policy, eq.mean_alpha, p, cfg);
  cfg.threads = 3;
  EXPECT_EQ(a, simulate_game(eq.policy, eq.mean_alpha, p, cfg));
  cfg.threads = 1;
  cfg.seed = 6;
  EXPECT_NE(a.mean_wealth, simulate_game(eq.policy, eq.mean_alpha, p, cfg).mean_wealth);
}

TEST(Game, CountsOverfullRounds) {
  GameParams p = small_game(0.0);
  PolicyTable policy{TimeTable(p.steps(), 41), TimeTable(p.steps(), 41)};
  for (std::size_t t = 0; t < p.steps(); ++t) {
    for (std::size_t i = 0; i < 41; ++i) policy.alpha(t, i) = static_cast<double>(i) / 2.0;
  }
  const std::vector<double> traj(p.steps(), 0.01);
  SimConfig cfg;
  cfg.trials = 100;
  cfg.agents = 10;
  const SimReport r = simulate_game(policy, traj, p, cfg);
  EXPECT_GT(r.overfull_rounds, 0u);
  for (auto n : r.agent_blocks) EXPECT_LE(n, cfg.trials);
}

TEST(Game, RejectsBadConfig) {
  GameParams p = small_game(0.0);
  PolicyTable policy{TimeTable(p.steps(), 41), TimeTable(p.steps(), 41)};
  const std::vector<double> traj(p.steps(), 1.0);
  SimConfig cfg;
  cfg.trials = 0;
  EXPECT_THROW(simulate_game(policy, traj, p, cfg), DomainError);
  cfg.trials = 10;
  cfg.agents = 0;
  EXPECT_THROW(simulate_game(policy, traj, p, cfg), DomainError);
  cfg.agents = 1;
  PolicyTable wrong{TimeTable(2, 41), TimeTable(2, 41)};
  EXPECT_THROW(simulate_game(wrong, traj, p, cfg), DomainError);
}
