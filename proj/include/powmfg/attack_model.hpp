#pragma once

// Economics of the private double-spend race.
//
// The race is a 2-D chain over (honest blocks, adversary blocks). Each step the
// adversary extends its private chain with probability beta, otherwise the
// honest chain grows. The attack succeeds when the adversary reaches k+1 blocks
// before the honest miners do.

#include <cmath>
#include <vector>

#include "powmfg/errors.hpp"

namespace powmfg {

struct RaceParams {
  double beta = 0.0;  // adversary hash-power fraction, [0, 1)
  int k = 0;          // confirmation depth
};

// How failed attacks are charged when computing the expected attack length.
enum class FailureCharging {
  full_window,  // every failure is charged the full 2k+1 step window
  exact,        // a failure costs k+1+b_A steps, where it actually ends
};

struct EconomicContext {
  double mean_alpha = 0.0;      // mean mining power per miner
  int num_miners = 1;           // m
  double cost_per_power = 1.0;  // c
  double block_reward = 0.0;    // b
  double tx_value = 0.0;        // T
  double fee = 0.0;             // f(T)

  // m * mean_alpha * c: per-step mining cost of the whole network.
  double network_cost() const { return num_miners * mean_alpha * cost_per_power; }
};

struct AttackProfile {
  double success_prob = 0.0;
  double expected_steps = 0.0;
  double expected_cost = 0.0;
  double expected_profit = 0.0;
};

// Exact summary of the race obtained by forward propagation over the chain.
struct RaceSummary {
  double success_prob = 0.0;        // sum_h beta * Pr[(h, k)]
  double success_step_mass = 0.0;   // sum_h beta * Pr[(h, k)] * (k+1+h)
  double failure_step_mass = 0.0;   // sum_a (1-beta) * Pr[(k, a)] * (k+1+a)
  int k = 0;

  double expected_steps(FailureCharging charging = FailureCharging::full_window) const {
    if (charging == FailureCharging::exact) return success_step_mass + failure_step_mass;
    return (2.0 * k + 1.0) * (1.0 - success_prob) + success_step_mass;
  }
};

inline void validate(const RaceParams& race) {
  detail::require(std::isfinite(race.beta) && race.beta >= 0.0 && race.beta < 1.0,
                  "beta must lie in [0, 1)");
  detail::require(race.k >= 0, "confirmation depth k must be non-negative");
}

inline void validate(const EconomicContext& ctx) {
  detail::require(ctx.mean_alpha >= 0.0, "mean_alpha must be non-negative");
  detail::require(ctx.num_miners >= 1, "num_miners must be at least 1");
  detail::require(ctx.cost_per_power > 0.0, "cost_per_power must be positive");
  detail::require(ctx.block_reward >= 0.0, "block_reward must be non-negative");
  detail::require(ctx.tx_value >= 0.0, "tx_value must be non-negative");
  detail::require(ctx.fee >= 0.0, "fee must be non-negative");
}

// Forward DP over the (k+1) x (k+1) transient states. O(k^2).
inline RaceSummary summarize_race(const RaceParams& race) {
  validate(race);
  const int k = race.k;
  RaceSummary out;
  out.k = k;
  if (race.beta == 0.0) {
    // Honest miners win in exactly k+1 steps.
    out.failure_step_mass = k + 1.0;
    return out;
  }
  const double beta = race.beta;
  const double honest = 1.0 - beta;
  const auto n = static_cast<std::size_t>(k) + 1;
  // reach[h * n + a] = probability the chain visits (h, a).
  std::vector<double> reach(n * n, 0.0);
  reach[0] = 1.0;
  for (std::size_t h = 0; h < n; ++h) {
    for (std::size_t a = 0; a < n; ++a) {
      const double p = reach[h * n + a];
      if (a + 1 < n) reach[h * n + a + 1] += p * beta;
      if (h + 1 < n) reach[(h + 1) * n + a] += p * honest;
    }
  }
  for (std::size_t h = 0; h < n; ++h) {
    const double win = beta * reach[h * n + k];
    out.success_prob += win;
    out.success_step_mass += win * static_cast<double>(k + 1 + h);
  }
  for (std::size_t a = 0; a < n; ++a) {
    const double lose = honest * reach[static_cast<std::size_t>(k) * n + a];
    out.failure_step_mass += lose * static_cast<double>(k + 1 + a);
  }
  return out;
}

inline double success_probability(const RaceParams& race) {
  return summarize_race(race).success_prob;
}

inline double expected_attack_steps(const RaceParams& race,
                                    FailureCharging charging = FailureCharging::full_window) {
  return summarize_race(race).expected_steps(charging);
}

// Cost of an attack given a precomputed race summary. beta * m * mean_alpha * c per step.
inline double attack_cost(const RaceSummary& summary, double beta, const EconomicContext& ctx,
                          FailureCharging charging = FailureCharging::full_window) {
  if (beta == 0.0) return 0.0;
  return beta * ctx.network_cost() * summary.expected_steps(charging);
}

inline double adversary_reward(const RaceSummary& summary, double beta,
                               const EconomicContext& ctx,
                               FailureCharging charging = FailureCharging::full_window) {
  const double loot = (summary.k + 1.0) * ctx.block_reward + ctx.tx_value + ctx.fee;
  return summary.success_prob * loot - attack_cost(summary, beta, ctx, charging);
}

inline double attack_cost(const RaceParams& race, const EconomicContext& ctx,
                          FailureCharging charging = FailureCharging::full_window) {
  validate(ctx);
  return attack_cost(summarize_race(race), race.beta, ctx, charging);
}

inline double adversary_reward(const RaceParams& race, const EconomicContext& ctx,
                               FailureCharging charging = FailureCharging::full_window) {
  validate(ctx);
  return adversary_reward(summarize_race(race), race.beta, ctx, charging);
}

// Logistic of the adversary's expected profit; sharpness 1 is the plain sigmoid.
inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline bool attack_decision(const RaceParams& race, const EconomicContext& ctx,
                            FailureCharging charging = FailureCharging::full_window) {
  if (race.beta == 0.0) {
    validate(race);
    return false;
  }
  return adversary_reward(race, ctx, charging) > 0.0;
}

inline double attack_decision_smooth(const RaceParams& race, const EconomicContext& ctx,
                                     double sharpness = 1.0,
                                     FailureCharging charging = FailureCharging::full_window) {
  detail::require(sharpness > 0.0 && std::isfinite(sharpness), "sharpness must be positive");
  return logistic(sharpness * adversary_reward(race, ctx, charging));
}

inline AttackProfile attack_profile(const RaceParams& race, const EconomicContext& ctx,
                                    FailureCharging charging = FailureCharging::full_window) {
  validate(ctx);
  const RaceSummary summary = summarize_race(race);
  AttackProfile p;
  p.success_prob = summary.success_prob;
  p.expected_steps = summary.expected_steps(charging);
  p.expected_cost = attack_cost(summary, race.beta, ctx, charging);
  p.expected_profit = adversary_reward(summary, race.beta, ctx, charging);
  return p;
}

}  // namespace powmfg
