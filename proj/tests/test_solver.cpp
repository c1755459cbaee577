#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "powmfg/solver.hpp"

using namespace powmfg;

namespace {

GameParams small_game(double beta = 0.0) {
  GameParams p;
  p.num_miners = 4;
  p.block_reward = 4.0;
  p.beta = beta;
  p.horizon = 5;
  p.fee = FeePolicy::proportional(0.01);
  p.tx_max = 100.0;
  p.initial_wealth = 10.0;
  p.wealth_max = 40.0;
  p.wealth_points = 41;
  p.alpha_points = 21;
  p.tx_points = 11;
  return p;
}

}  // namespace

TEST(Grid, InterpolateAndClamp) {
  const UniformGrid g(10.0, 11);
  std::vector<double> v(11);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 2.0 * g[i];
  EXPECT_DOUBLE_EQ(g.interpolate(v, 3.25), 6.5);
  EXPECT_DOUBLE_EQ(g.interpolate(v, -5.0), 0.0);
  EXPECT_DOUBLE_EQ(g.interpolate(v, 50.0), 20.0);
  EXPECT_EQ(g[10], 10.0);
  EXPECT_THROW(UniformGrid(10.0, 1), DomainError);
  EXPECT_THROW(UniformGrid(0.0, 5), DomainError);
}

TEST(Grid, DepositConservesMassAndMean) {
  const UniformGrid g(10.0, 11);
  std::vector<double> m(11, 0.0);
  g.deposit(m, 3.3, 0.5);
  g.deposit(m, 12.0, 0.25);
  g.deposit(m, -1.0, 0.25);
  EXPECT_NEAR(std::accumulate(m.begin(), m.end(), 0.0), 1.0, 1e-15);
  EXPECT_NEAR(m[3] * 3 + m[4] * 4, 0.5 * 3.3, 1e-12);
  EXPECT_EQ(m[10], 0.25);
  EXPECT_EQ(m[0], 0.25);
}

TEST(Parallel, VisitsEveryIndexOnce) {
  for (unsigned threads : {1u, 2u, 3u, 8u, 64u}) {
    std::vector<int> hits(37, 0);
    parallel_chunks(hits.size(), threads, [&](std::size_t b, std::size_t e, unsigned) {
      for (std::size_t i = b; i < e; ++i) ++hits[i];
    });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
  EXPECT_THROW(parallel_chunks(10, 4,
                               [](std::size_t b, std::size_t, unsigned) {
                                 if (b > 0) throw std::runtime_error("boom");
                               }),
               std::runtime_error);
}

TEST(Validate, RejectsBadParameters) {
  auto bad = [](auto edit) {
    GameParams p = small_game();
    edit(p);
    return p;
  };
  EXPECT_THROW(validate(bad([](GameParams& p) { p.momentum = 1.0; })), DomainError);
  EXPECT_THROW(validate(bad([](GameParams& p) { p.tx_max = -1.0; })), DomainError);
  EXPECT_THROW(validate(bad([](GameParams& p) { p.beta = 1.0; })), DomainError);
  EXPECT_THROW(validate(bad([](GameParams& p) { p.horizon = -1; })), DomainError);
  EXPECT_THROW(validate(bad([](GameParams& p) { p.initial_wealth = 41.0; })), DomainError);
  EXPECT_THROW(validate(bad([](GameParams& p) { p.initial_distribution = {1.0}; })),
               DomainError);
  EXPECT_THROW(validate(bad([](GameParams& p) {
                 p.initial_distribution.assign(41, 0.0);
                 p.initial_distribution[3] = 0.9;
               })),
               DomainError);
  EXPECT_THROW(validate(bad([](GameParams& p) { p.tolerance = 0.0; })), DomainError);
  EXPECT_NO_THROW(validate(small_game()));
}

TEST(Backward, SingleRoundOptimum) {
  GameParams p = small_game();
  p.horizon = 0;
  p.alpha_points = 101;
  p.refine_actions = false;
  const std::vector<double> traj{1.0};
  const BackwardResult br = backward_induction(p, traj);
  const double prize = p.block_reward + fee(p.fee, p.tx_max);
  const double star = std::sqrt(p.num_miners * prize / p.cost_per_power) - p.num_miners;
  const UniformGrid g = p.wealth_grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g[i];
    const double expected = std::min(star, x / p.cost_per_power);
    const double step = x / p.cost_per_power / (p.alpha_points - 1);
    EXPECT_LE(std::abs(br.policy.alpha(0, i) - expected), step + 1e-12) << x;
    if (x > 0) EXPECT_EQ(br.policy.tx(0, i), p.tx_max);
  }
  // refined answer lands on the optimum
  p.refine_actions = true;
  const BackwardResult fine = backward_induction(p, traj);
  EXPECT_NEAR(fine.policy.alpha(0, 40), star, 1e-6);
}

TEST(Backward, ValueMonotoneInWealth) {
  for (double beta : {0.0, 0.35}) {
    GameParams p = small_game(beta);
    const std::vector<double> traj(p.steps(), 1.0);
    const BackwardResult br = backward_induction(p, traj);
    for (std::size_t t = 0; t < p.steps(); ++t) {
      const auto v = br.values.values.row(t);
      for (std::size_t i = 1; i < v.size(); ++i) EXPECT_GE(v[i], v[i - 1] - 1e-12);
    }
    for (double v : br.values.values.row(p.steps())) EXPECT_EQ(v, 0.0);
  }
}

TEST(Backward, FeasibleActions) {
  GameParams p = small_game(0.35);
  const std::vector<double> traj(p.steps(), 1.0);
  const BackwardResult br = backward_induction(p, traj);
  const UniformGrid g = p.wealth_grid();
  for (std::size_t t = 0; t < p.steps(); ++t) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_GE(br.policy.alpha(t, i), 0.0);
      EXPECT_LE(br.policy.alpha(t, i) * p.cost_per_power, g[i]);
      EXPECT_GE(br.policy.tx(t, i), 0.0);
      EXPECT_LE(br.policy.tx(t, i), p.tx_max);
    }
  }
}

TEST(Backward, NaivePicksMaxValue) {
  GameParams p = small_game(0.45);
  p.reward_mode = RewardMode::naive;
  const std::vector<double> traj(p.steps(), 1.0);
  const BackwardResult br = backward_induction(p, traj);
  for (std::size_t t = 0; t < p.steps(); ++t) {
    for (std::size_t i = 1; i < br.policy.tx.points(); ++i) EXPECT_EQ(br.policy.tx(t, i), p.tx_max);
  }
}

TEST(Backward, NoRewardNoMining) {
  GameParams p = small_game();
  p.block_reward = 0.0;
  p.fee = FeePolicy::proportional(0.0);
  const std::vector<double> traj(p.steps(), 1.0);
  const BackwardResult br = backward_induction(p, traj);
  for (double a : br.policy.alpha.data()) EXPECT_EQ(a, 0.0);
  const WealthDistribution w = forward_wealth(p, br.policy, traj, p.initial_masses());
  for (double m : mean_wealth_by_step(p, w)) EXPECT_NEAR(m, 10.0, 1e-12);
}

TEST(Backward, RejectsBadTrajectory) {
  GameParams p = small_game();
  EXPECT_THROW(backward_induction(p, std::vector<double>(3, 1.0)), DomainError);
  std::vector<double> traj(p.steps(), 1.0);
  traj[2] = -1.0;
  EXPECT_THROW(backward_induction(p, traj), DomainError);
}

TEST(Forward, MassConserved) {
  GameParams p = small_game(0.35);
  const std::vector<double> traj(p.steps(), 1.0);
  const BackwardResult br = backward_induction(p, traj);
  const WealthDistribution w = forward_wealth(p, br.policy, traj, p.initial_masses());
  for (std::size_t t = 0; t < w.mass.steps(); ++t) {
    const auto row = w.mass.row(t);
    EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-12);
    for (double m : row) EXPECT_GE(m, 0.0);
  }
}

TEST(MeanField, UpdateRules) {
  GameParams p = small_game();
  p.horizon = 1;
  p.wealth_points = 3;
  p.wealth_max = 2.0;
  PolicyTable policy{TimeTable(2, 3), TimeTable(2, 3)};
  WealthDistribution w{TimeTable(3, 3)};
  policy.alpha(0, 1) = 1.0;
  policy.alpha(1, 2) = 2.0;
  w.mass(0, 1) = 1.0;
  w.mass(1, 2) = 0.5;
  const std::vector<double> prev{1.0, 3.0};
  EXPECT_EQ(policy_mean_power(p, policy, w), (std::vector<double>{1.0, 1.0}));
  p.momentum = 0.5;
  EXPECT_EQ(update_mean_field(p, policy, w, prev), (std::vector<double>{1.0, 2.0}));
  p.momentum_rule = MomentumRule::literal;
  EXPECT_EQ(update_mean_field(p, policy, w, prev), (std::vector<double>{1.0, 1.5}));
}

TEST(Equilibrium, ConvergesAndIsThreadIndependent) {
  GameParams p = small_game(0.35);
  p.threads = 1;
  const EquilibriumResult one = solve_equilibrium(p);
  EXPECT_TRUE(one.converged);
  EXPECT_LE(one.residuals.back(), p.resolved_tolerance());
  for (unsigned threads : {2u, 8u}) {
    p.threads = threads;
    EXPECT_TRUE(solve_equilibrium(p) == one) << threads;
  }
  // returned trajectory is a fixed point of the returned policy
  p.threads = 1;
  const auto next = update_mean_field(p, one.policy, one.wealth, one.mean_alpha);
  for (std::size_t t = 0; t < next.size(); ++t) {
    EXPECT_NEAR(next[t], one.mean_alpha[t], p.resolved_tolerance());
  }
  EXPECT_EQ(one.attack_prob.size(), p.steps());
}

TEST(Equilibrium, FlagsNonConvergence) {
  GameParams p = small_game();
  p.max_iterations = 1;
  const EquilibriumResult r = solve_equilibrium(p);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1);
}

TEST(Evaluate, AttackAbsentMatchesBelief) {
  GameParams p = small_game(0.0);
  const EquilibriumResult eq = solve_equilibrium(p);
  const auto present = evaluate_policy(p, eq.policy, eq.mean_alpha, RewardMode::aware,
                                       AttackMode::present);
  const auto absent = evaluate_policy(p, eq.policy, eq.mean_alpha, RewardMode::aware,
                                      AttackMode::absent);
  EXPECT_EQ(present, absent);
  EXPECT_EQ(present, mean_wealth_by_step(p, eq.wealth));
}
