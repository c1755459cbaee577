#pragma once

// Fee function and the honest miners' win probabilities and expected rewards,
// with and without accounting for a rational double-spending adversary.

#include <cmath>
#include <limits>

#include "powmfg/attack_model.hpp"
#include "powmfg/errors.hpp"

namespace powmfg {

enum class FeeKind { proportional, constant };

struct FeePolicy {
  FeeKind kind = FeeKind::proportional;
  double lambda = 0.01;   // used when proportional
  double flat_fee = 0.0;  // used when constant

  static FeePolicy proportional(double lambda) { return {FeeKind::proportional, lambda, 0.0}; }
  static FeePolicy constant(double flat_fee) { return {FeeKind::constant, 0.0, flat_fee}; }
  bool operator==(const FeePolicy&) const = default;
};

inline void validate(const FeePolicy& policy) {
  detail::require(policy.lambda >= 0.0 && std::isfinite(policy.lambda), "lambda must be >= 0");
  detail::require(policy.flat_fee >= 0.0 && std::isfinite(policy.flat_fee),
                  "flat_fee must be >= 0");
}

inline double fee(const FeePolicy& policy, double tx_value) {
  detail::require(tx_value >= 0.0, "tx_value must be non-negative");
  return policy.kind == FeeKind::proportional ? policy.lambda * tx_value : policy.flat_fee;
}

struct MinerAction {
  double alpha = 0.0;     // mining power contributed this round
  double tx_value = 0.0;  // transaction value referenced by the block
};

// Whether the adversary's attack decision is the exact step or its logistic smoothing.
struct DecisionRule {
  enum class Kind { hard, smooth };
  Kind kind = Kind::hard;
  double sharpness = 1.0;
  FailureCharging charging = FailureCharging::full_window;

  static DecisionRule hard_rule(FailureCharging ch = FailureCharging::full_window) {
    return {Kind::hard, 1.0, ch};
  }
  static DecisionRule smooth_rule(double sharpness = 1.0,
                                  FailureCharging ch = FailureCharging::full_window) {
    return {Kind::smooth, sharpness, ch};
  }
};

// Adversary evaluation with the race summary hoisted out; the solver calls
// this in its inner loops.
class AdversaryModel {
public:
  AdversaryModel(const RaceParams& race, int num_miners, double cost_per_power,
                 double block_reward, const FeePolicy& policy, DecisionRule rule)
      : summary_(summarize_race(race)),
        beta_(race.beta),
        num_miners_(num_miners),
        cost_per_power_(cost_per_power),
        block_reward_(block_reward),
        policy_(policy),
        rule_(rule) {
    detail::require(num_miners >= 1, "num_miners must be at least 1");
    detail::require(cost_per_power > 0.0, "cost_per_power must be positive");
    detail::require(block_reward >= 0.0, "block_reward must be non-negative");
    detail::require(rule.kind == DecisionRule::Kind::hard || rule.sharpness > 0.0,
                    "sharpness must be positive");
    validate(policy);
  }

  const RaceSummary& summary() const { return summary_; }
  double beta() const { return beta_; }
  double success_prob() const { return summary_.success_prob; }
  const DecisionRule& rule() const { return rule_; }

  EconomicContext context(double mean_alpha, double tx_value) const {
    return {mean_alpha, num_miners_, cost_per_power_, block_reward_, tx_value,
            fee(policy_, tx_value)};
  }

  double adversary_reward(double mean_alpha, double tx_value) const {
    return powmfg::adversary_reward(summary_, beta_, context(mean_alpha, tx_value),
                                    rule_.charging);
  }

  // A(T, mean_alpha) in {0, 1} for the hard rule, A'(T, mean_alpha) in (0, 1) otherwise.
  double attack_prob(double mean_alpha, double tx_value) const {
    if (beta_ == 0.0) return 0.0;
    const double r = adversary_reward(mean_alpha, tx_value);
    if (rule_.kind == DecisionRule::Kind::hard) return r > 0.0 ? 1.0 : 0.0;
    return logistic(rule_.sharpness * r);
  }

  // Unclamped T solving T + f(T) = C / P - (k+1) b; +inf when P = 0.
  double zero_profit_value(double mean_alpha) const {
    if (summary_.success_prob == 0.0) return std::numeric_limits<double>::infinity();
    const EconomicContext ctx = context(mean_alpha, 0.0);
    const double rhs = attack_cost(summary_, beta_, ctx, rule_.charging) /
                           summary_.success_prob -
                       (summary_.k + 1.0) * block_reward_;
    if (policy_.kind == FeeKind::proportional) return rhs / (1.0 + policy_.lambda);
    return rhs - policy_.flat_fee;
  }

  // 1 - P(beta) * A: probability the block's rewards survive the adversary.
  double survival(double mean_alpha, double tx_value) const {
    return 1.0 - summary_.success_prob * attack_prob(mean_alpha, tx_value);
  }

private:
  RaceSummary summary_;
  double beta_;
  int num_miners_;
  double cost_per_power_;
  double block_reward_;
  FeePolicy policy_;
  DecisionRule rule_;
};

inline double win_prob_naive(double mean_alpha, int num_miners, double alpha) {
  detail::require(alpha >= 0.0 && mean_alpha >= 0.0 && num_miners >= 1,
                  "win probability needs alpha >= 0, mean_alpha >= 0, num_miners >= 1");
  const double total = alpha + num_miners * mean_alpha;
  detail::require(total > 0.0, "total mining power alpha + m * mean_alpha must be positive");
  return alpha / total;
}

inline double reward_naive(double mean_alpha, int num_miners, const MinerAction& action,
                           double block_reward, double cost_per_power, const FeePolicy& policy) {
  const double win = win_prob_naive(mean_alpha, num_miners, action.alpha);
  return win * (block_reward + fee(policy, action.tx_value)) - action.alpha * cost_per_power;
}

inline double win_prob_aware(double mean_alpha, int num_miners, const MinerAction& action,
                             const RaceParams& race, double block_reward,
                             double cost_per_power, const FeePolicy& policy,
                             DecisionRule rule = DecisionRule::hard_rule()) {
  const double win = win_prob_naive(mean_alpha, num_miners, action.alpha);
  const AdversaryModel adversary(race, num_miners, cost_per_power, block_reward, policy, rule);
  return adversary.survival(mean_alpha, action.tx_value) * win;
}

inline double reward_aware(double mean_alpha, int num_miners, const MinerAction& action,
                           const RaceParams& race, double block_reward, double cost_per_power,
                           const FeePolicy& policy,
                           DecisionRule rule = DecisionRule::hard_rule()) {
  const double win = win_prob_aware(mean_alpha, num_miners, action, race, block_reward,
                                    cost_per_power, policy, rule);
  return win * (block_reward + fee(policy, action.tx_value)) - action.alpha * cost_per_power;
}

}  // namespace powmfg
