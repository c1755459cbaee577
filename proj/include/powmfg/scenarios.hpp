#pragma once

// Security analysis of a concrete chain: the largest per-block value that is
// safe against a rational adversary, the smallest adversary that profits from
// the observed throughput, and the growth of the safe value under a
// percentage-based fee.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "powmfg/attack_model.hpp"
#include "powmfg/errors.hpp"
#include "powmfg/rewards.hpp"
#include "powmfg/solver.hpp"

namespace powmfg {

struct ChainSnapshot {
  double block_reward = 6.25;
  FeePolicy fee = FeePolicy::constant(0.16);
  double network_cost = 6.41;  // m * mean_alpha * c, per block
  double observed_value = 774.84;
  int confirmations = 6;
  FailureCharging failure_charging = FailureCharging::full_window;

  // Bitcoin, April 10-17 2023: 774.84 BTC moved per block, 6.25 BTC subsidy,
  // 0.16 BTC fees, mining cost bounded by reward + fees.
  static ChainSnapshot bitcoin_2023() { return {}; }
};

inline void validate(const ChainSnapshot& s) {
  detail::require(s.block_reward >= 0.0, "block_reward must be non-negative");
  detail::require(s.network_cost >= 0.0, "network_cost must be non-negative");
  detail::require(s.observed_value >= 0.0, "observed_value must be non-negative");
  detail::require(s.confirmations >= 0, "confirmations must be non-negative");
  validate(s.fee);
}

// Zero-profit transaction value T* for a network whose per-block cost is
// `network_cost`; the snapshot's own cost is used by the overload below.
inline double safe_value(const ChainSnapshot& s, double beta, double network_cost) {
  validate(s);
  const RaceParams race{beta, s.confirmations};
  validate(race);
  if (beta == 0.0) return std::numeric_limits<double>::infinity();
  // mean_alpha = network_cost with m = c = 1 reproduces m * mean_alpha * c.
  const AdversaryModel adversary(race, 1, 1.0, s.block_reward, s.fee,
                                 DecisionRule::hard_rule(s.failure_charging));
  return std::max(0.0, adversary.zero_profit_value(network_cost));
}

inline double safe_value(const ChainSnapshot& s, double beta) {
  return safe_value(s, beta, s.network_cost);
}

// Adversary's expected profit when the block carries `tx_value`.
inline double snapshot_adversary_reward(const ChainSnapshot& s, double beta, double tx_value) {
  const EconomicContext ctx{s.network_cost, 1, 1.0, s.block_reward, tx_value,
                            fee(s.fee, tx_value)};
  return adversary_reward(RaceParams{beta, s.confirmations}, ctx, s.failure_charging);
}

// 0.01, 0.02, ..., 0.49.
inline std::vector<double> default_beta_grid() {
  std::vector<double> out;
  for (int i = 1; i <= 49; ++i) out.push_back(i / 100.0);
  return out;
}

// Smallest grid beta whose safe value falls below `observed_value`.
inline std::optional<double> threshold_beta(const ChainSnapshot& s, double observed_value,
                                            std::span<const double> beta_grid) {
  detail::require(std::is_sorted(beta_grid.begin(), beta_grid.end()),
                  "beta grid must be sorted ascending");
  for (double beta : beta_grid) {
    detail::require(beta > 0.0 && beta < 1.0, "beta grid values must lie in (0, 1)");
    if (safe_value(s, beta) < observed_value) return beta;
  }
  return std::nullopt;
}

struct SafeValuePoint {
  double beta;
  double t_star;
};

inline std::vector<SafeValuePoint> safe_value_curve(const ChainSnapshot& s,
                                                    std::span<const double> beta_grid) {
  std::vector<SafeValuePoint> out;
  out.reserve(beta_grid.size());
  for (double beta : beta_grid) out.push_back({beta, safe_value(s, beta)});
  return out;
}

// Miner population used to turn a snapshot into a solvable game. The network
// starts at the snapshot's per-block cost: initial mean_alpha = cost / (m c).
struct FeeEvolutionSetup {
  int num_miners = 10;
  double cost_per_power = 1.0;
  int horizon = 50;
  double initial_wealth = 100.0;
  double wealth_max = 300.0;
  int wealth_points = 201;
  int alpha_points = 101;
  double momentum = 0.8;
  std::optional<double> tolerance;
  int max_iterations = 500;
  WealthTransition transition = WealthTransition::realized_reward;
  unsigned threads = 1;
};

struct FeeEvolutionSeries {
  double lambda = 0.0;
  std::vector<double> t_star;  // per t = 0..tau
  std::vector<double> mean_alpha;
  bool converged = false;
  int iterations = 0;
};

inline GameParams fee_evolution_params(const ChainSnapshot& s, double beta, double lambda,
                                       const FeeEvolutionSetup& setup) {
  GameParams p;
  p.num_miners = setup.num_miners;
  p.cost_per_power = setup.cost_per_power;
  p.block_reward = s.block_reward;
  p.beta = beta;
  p.confirmations = s.confirmations;
  p.horizon = setup.horizon;
  p.fee = FeePolicy::proportional(lambda);
  p.tx_max = std::numeric_limits<double>::max() / 4;
  p.momentum = setup.momentum;
  p.initial_mean_alpha = s.network_cost / (setup.num_miners * setup.cost_per_power);
  p.initial_wealth = setup.initial_wealth;
  p.wealth_max = setup.wealth_max;
  p.wealth_points = setup.wealth_points;
  p.alpha_points = setup.alpha_points;
  p.tx_points = 1;
  p.tolerance = setup.tolerance;
  p.max_iterations = setup.max_iterations;
  p.reward_mode = RewardMode::aware;
  p.tx_mode = TxPolicyMode::pinned_zero_profit;
  p.transition = setup.transition;
  p.failure_charging = s.failure_charging;
  p.threads = setup.threads;
  return p;
}

// Solves the game with T pinned to the zero-profit value and reports
// T*_t = T*(mean_alpha_t) for each lambda.
inline std::vector<FeeEvolutionSeries> fee_evolution(const ChainSnapshot& s, double beta,
                                                     std::span<const double> lambdas,
                                                     const FeeEvolutionSetup& setup) {
  validate(s);
  detail::require(beta > 0.0 && beta < 1.0, "fee evolution needs beta in (0, 1)");
  std::vector<FeeEvolutionSeries> out;
  for (double lambda : lambdas) {
    const GameParams p = fee_evolution_params(s, beta, lambda, setup);
    const EquilibriumResult eq = solve_equilibrium(p);
    const AdversaryModel adversary(p.race(), p.num_miners, p.cost_per_power, p.block_reward,
                                   p.fee, DecisionRule::hard_rule(p.failure_charging));
    FeeEvolutionSeries series;
    series.lambda = lambda;
    series.mean_alpha = eq.mean_alpha;
    series.converged = eq.converged;
    series.iterations = eq.iterations;
    for (double a : eq.mean_alpha) {
      series.t_star.push_back(std::max(0.0, adversary.zero_profit_value(a)));
    }
    out.push_back(std::move(series));
  }
  return out;
}

// Smallest lambda whose T*_t reaches `target` at some step.
inline std::optional<double> smallest_securing_lambda(std::span<const FeeEvolutionSeries> runs,
                                                      double target) {
  std::optional<double> best;
  for (const auto& run : runs) {
    const bool reaches =
        std::any_of(run.t_star.begin(), run.t_star.end(), [&](double v) { return v >= target; });
    if (reaches && (!best || run.lambda < *best)) best = run.lambda;
  }
  return best;
}

}  // namespace powmfg
