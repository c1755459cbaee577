#pragma once

// Mean-field equilibrium of the mining game.
//
// The outer loop alternates three passes until the mean-power trajectory stops
// moving:
//   1. backward induction of the value function and the optimal (alpha, T)
//      policy on a wealth grid, given the trajectory mean_alpha_t;
//   2. forward propagation of the wealth distribution under that policy;
//   3. a damped update of mean_alpha_t from the policy-weighted mean power.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "powmfg/attack_model.hpp"
#include "powmfg/errors.hpp"
#include "powmfg/grid.hpp"
#include "powmfg/parallel.hpp"
#include "powmfg/rewards.hpp"

namespace powmfg {

enum class RewardMode { naive, aware };

// How the solver picks the transaction value: full argmax over the T grid, or
// pinned to the adversary's zero-profit value at the current mean power.
enum class TxPolicyMode { optimize, pinned_zero_profit };

// Winner's next wealth: x + R with R the expected one-round reward, or
// x + b + f(T) - alpha c (the realized block payoff).
enum class WealthTransition { expected_reward, realized_reward };

// convex:  a_t <- gamma a_t + (1 - gamma) mean_t
// literal: a_{t+1} <- gamma a_t + mean_t, a_0 kept
enum class MomentumRule { convex, literal };

enum class AttackMode { present, absent };

struct GameParams {
  int num_miners = 10;
  double cost_per_power = 1.0;
  double block_reward = 4.0;
  double beta = 0.0;
  int confirmations = 6;
  int horizon = 20;  // tau; rounds are t = 0..tau
  FeePolicy fee = FeePolicy::proportional(0.01);
  double tx_max = 100.0;
  double momentum = 0.5;
  double initial_mean_alpha = 1.0;

  // Every miner starts at `initial_wealth` unless `initial_distribution` gives
  // explicit masses over the wealth grid.
  double initial_wealth = 10.0;
  std::vector<double> initial_distribution;

  double wealth_max = 100.0;
  int wealth_points = 201;
  int alpha_points = 101;
  int tx_points = 101;

  double sharpness = 1.0;
  std::optional<double> tolerance;  // default 1e-6 * initial_mean_alpha
  int max_iterations = 500;

  RewardMode reward_mode = RewardMode::aware;
  TxPolicyMode tx_mode = TxPolicyMode::optimize;
  WealthTransition transition = WealthTransition::realized_reward;
  MomentumRule momentum_rule = MomentumRule::convex;
  FailureCharging failure_charging = FailureCharging::full_window;
  // Polish the best grid action with a bracketed 1-D search in alpha (and T).
  bool refine_actions = true;
  unsigned threads = 1;

  bool operator==(const GameParams&) const = default;

  RaceParams race() const { return {beta, confirmations}; }
  UniformGrid wealth_grid() const {
    return {wealth_max, static_cast<std::size_t>(wealth_points)};
  }
  std::size_t steps() const { return static_cast<std::size_t>(horizon) + 1; }
  double resolved_tolerance() const { return tolerance.value_or(1e-6 * initial_mean_alpha); }

  std::vector<double> initial_masses() const {
    if (!initial_distribution.empty()) return initial_distribution;
    std::vector<double> w(static_cast<std::size_t>(wealth_points), 0.0);
    wealth_grid().deposit(w, initial_wealth, 1.0);
    return w;
  }
};

inline void validate(const GameParams& p) {
  using detail::require;
  require(p.num_miners >= 1, "num_miners must be >= 1");
  require(p.cost_per_power > 0.0 && std::isfinite(p.cost_per_power), "cost_per_power must be > 0");
  require(p.block_reward >= 0.0 && std::isfinite(p.block_reward), "block_reward must be >= 0");
  validate(p.race());
  require(p.horizon >= 0, "horizon must be >= 0");
  validate(p.fee);
  require(p.tx_max >= 0.0 && std::isfinite(p.tx_max), "tx_max must be >= 0");
  require(p.momentum >= 0.0 && p.momentum < 1.0, "momentum must lie in [0, 1)");
  require(p.initial_mean_alpha > 0.0 && std::isfinite(p.initial_mean_alpha),
          "initial_mean_alpha must be > 0");
  require(p.wealth_max > 0.0 && std::isfinite(p.wealth_max), "wealth_max must be > 0");
  require(p.wealth_points >= 2, "wealth_points must be >= 2");
  require(p.alpha_points >= 2, "alpha_points must be >= 2");
  require(p.tx_points >= 1, "tx_points must be >= 1");
  require(p.sharpness > 0.0 && std::isfinite(p.sharpness), "sharpness must be > 0");
  require(!p.tolerance || *p.tolerance > 0.0, "tolerance must be > 0");
  require(p.max_iterations >= 1, "max_iterations must be >= 1");
  if (p.initial_distribution.empty()) {
    require(p.initial_wealth >= 0.0 && p.initial_wealth <= p.wealth_max,
            "initial_wealth must lie in [0, wealth_max]");
  } else {
    require(p.initial_distribution.size() == static_cast<std::size_t>(p.wealth_points),
            "initial_distribution must have wealth_points entries");
    double total = 0.0;
    for (double m : p.initial_distribution) {
      require(m >= 0.0 && std::isfinite(m), "initial_distribution masses must be >= 0");
      total += m;
    }
    require(std::abs(total - 1.0) <= 1e-9, "initial_distribution must sum to 1");
  }
}

struct ValueTable {
  TimeTable values;  // rows t = 0..tau+1; row tau+1 is identically zero
  bool operator==(const ValueTable&) const = default;
};

struct PolicyTable {
  TimeTable alpha;  // rows t = 0..tau
  TimeTable tx;
  bool operator==(const PolicyTable&) const = default;
};

struct WealthDistribution {
  TimeTable mass;  // rows t = 0..tau+1
  bool operator==(const WealthDistribution&) const = default;
};

struct EquilibriumResult {
  std::vector<double> mean_alpha;  // trajectory the returned policy best-responds to
  PolicyTable policy;
  ValueTable values;
  WealthDistribution wealth;
  std::vector<double> attack_prob;  // smoothed attack probability of a mined block, per t
  bool converged = false;
  int iterations = 0;
  std::vector<double> residuals;  // max_t |delta mean_alpha_t| per outer iteration
  bool operator==(const EquilibriumResult&) const = default;
};

namespace detail {

inline constexpr double kArgmaxTieTolerance = 1e-12;
inline constexpr int kRefinePasses = 2;

// Brent search on [lo, hi]; returns (argmin, min).
template <typename F>
std::pair<double, double> local_minimum(F&& f, double lo, double hi) {
  if (!(hi > lo)) return {lo, f(lo)};
  std::uintmax_t max_iter = 200;
  return boost::math::tools::brent_find_minima(f, lo, hi, std::numeric_limits<double>::digits / 2,
                                               max_iter);
}

// Largest alpha on the j-th node of the uniform grid over [0, x / c] whose cost
// alpha * c does not exceed x.
inline double alpha_candidate(double wealth, double cost, int j, int points) {
  if (j == 0 || wealth <= 0.0) return 0.0;
  double a = (wealth / cost) * (static_cast<double>(j) / static_cast<double>(points - 1));
  while (a * cost > wealth) a = std::nextafter(a, 0.0);
  return a;
}

inline double naive_share(double alpha, double mean_alpha, int num_miners) {
  if (alpha <= 0.0) return 0.0;
  return alpha / (alpha + num_miners * mean_alpha);
}

// The game's reward structure at one parameter point.
class RewardStructure {
public:
  explicit RewardStructure(const GameParams& p)
      : params_(p),
        smooth_(p.race(), p.num_miners, p.cost_per_power, p.block_reward, p.fee,
                DecisionRule::smooth_rule(p.sharpness, p.failure_charging)),
        hard_(p.race(), p.num_miners, p.cost_per_power, p.block_reward, p.fee,
              DecisionRule::hard_rule(p.failure_charging)) {}

  const AdversaryModel& smooth() const { return smooth_; }
  const AdversaryModel& hard() const { return hard_; }

  double prize(double tx) const { return params_.block_reward + fee(params_.fee, tx); }

  double pinned_tx(double mean_alpha) const {
    const double t = hard_.zero_profit_value(mean_alpha);
    return std::clamp(t, 0.0, params_.tx_max);
  }

  // Survival factor 1 - P A the miners believe in under `mode`.
  double believed_survival(RewardMode mode, double mean_alpha, double tx) const {
    if (mode == RewardMode::naive || params_.beta == 0.0) return 1.0;
    if (params_.tx_mode == TxPolicyMode::pinned_zero_profit) return pinned_survival(mean_alpha, tx);
    return smooth_.survival(mean_alpha, tx);
  }

  // Survival factor under the actual (hard-decision) adversary.
  double actual_survival(AttackMode mode, double mean_alpha, double tx) const {
    if (mode == AttackMode::absent) return 1.0;
    if (params_.tx_mode == TxPolicyMode::pinned_zero_profit) return pinned_survival(mean_alpha, tx);
    return hard_.survival(mean_alpha, tx);
  }

  double win_wealth(double wealth, double alpha, double win_prob, double tx) const {
    const double spend = alpha * params_.cost_per_power;
    if (params_.transition == WealthTransition::realized_reward) return wealth + prize(tx) - spend;
    return wealth + win_prob * prize(tx) - spend;
  }

private:
  // At exactly zero profit the hard rule does not attack; a relative slack
  // absorbs the rounding in the closed-form zero-profit value.
  double pinned_survival(double mean_alpha, double tx) const {
    const double r = hard_.adversary_reward(mean_alpha, tx);
    const double scale = std::max(1.0, attack_cost(hard_.summary(), params_.beta,
                                                   hard_.context(mean_alpha, tx),
                                                   params_.failure_charging));
    return r > 1e-9 * scale ? 1.0 - hard_.success_prob() : 1.0;
  }

  const GameParams& params_;
  AdversaryModel smooth_;
  AdversaryModel hard_;
};

inline void check_trajectory(const GameParams& p, std::span<const double> trajectory) {
  require(trajectory.size() == p.steps(), "mean_alpha trajectory must have horizon+1 entries");
  for (double a : trajectory) require(a >= 0.0 && std::isfinite(a), "mean_alpha must be >= 0");
}

inline void check_policy(const GameParams& p, const PolicyTable& policy) {
  const auto n = static_cast<std::size_t>(p.wealth_points);
  require(policy.alpha.steps() == p.steps() && policy.alpha.points() == n &&
              policy.tx.steps() == p.steps() && policy.tx.points() == n,
          "policy table shape does not match the game parameters");
}

// Shared forward pass: win probability comes from `survival(t, tx)`, the
// winner's reward used by the expected-reward transition from `believed(t, tx)`.
template <typename ActualSurvival, typename BelievedSurvival>
WealthDistribution propagate(const GameParams& p, const PolicyTable& policy,
                             std::span<const double> trajectory, std::span<const double> w0,
                             const RewardStructure& rewards, ActualSurvival&& actual,
                             BelievedSurvival&& believed) {
  const UniformGrid grid = p.wealth_grid();
  const std::size_t n = grid.size();
  require(w0.size() == n, "initial distribution must have wealth_points entries");
  WealthDistribution out{TimeTable(p.steps() + 1, n)};
  std::copy(w0.begin(), w0.end(), out.mass.row(0).begin());
  for (std::size_t t = 0; t < p.steps(); ++t) {
    const auto from = out.mass.row(t);
    auto to = out.mass.row(t + 1);
    const double mean_alpha = trajectory[t];
    for (std::size_t i = 0; i < n; ++i) {
      const double mass = from[i];
      if (mass == 0.0) continue;
      const double x = grid[i];
      const double alpha = policy.alpha(t, i);
      const double tx = policy.tx(t, i);
      const double share = naive_share(alpha, mean_alpha, p.num_miners);
      const double win = actual(t, tx) * share;
      const double believed_win = believed(t, tx) * share;
      const double x_win = rewards.win_wealth(x, alpha, believed_win, tx);
      const double x_lose = x - alpha * p.cost_per_power;
      if (!std::isfinite(x_win) || !std::isfinite(x_lose) || !std::isfinite(win)) {
        throw NumericalError("non-finite wealth transition at t=" + std::to_string(t));
      }
      if (win > 0.0) grid.deposit(to, x_win, win * mass);
      if (win < 1.0) grid.deposit(to, x_lose, (1.0 - win) * mass);
    }
  }
  return out;
}

}  // namespace detail

// Backward pass over t = tau..0. For each wealth node the objective
//   R + Gamma V_{t+1}(x_win) + (1 - Gamma) V_{t+1}(x - alpha c)
// is maximized over alpha in [0, x/c] and T in [0, T_max]; ties within 1e-12
// go to the smallest alpha, then the smallest T.
struct BackwardResult {
  PolicyTable policy;
  ValueTable values;
};

inline BackwardResult backward_induction(const GameParams& p, std::span<const double> trajectory) {
  validate(p);
  detail::check_trajectory(p, trajectory);
  const UniformGrid grid = p.wealth_grid();
  const std::size_t n = grid.size();
  const std::size_t steps = p.steps();
  const detail::RewardStructure rewards(p);

  BackwardResult out{{TimeTable(steps, n), TimeTable(steps, n)}, {TimeTable(steps + 1, n)}};

  const auto n_alpha = static_cast<std::size_t>(p.alpha_points);
  std::vector<double> tx_nodes;
  std::vector<double> survival;
  std::vector<double> prize;

  for (std::size_t step = steps; step-- > 0;) {
    const double mean_alpha = trajectory[step];
    tx_nodes.clear();
    if (p.tx_mode == TxPolicyMode::pinned_zero_profit) {
      tx_nodes.push_back(rewards.pinned_tx(mean_alpha));
    } else if (p.tx_points == 1) {
      tx_nodes.push_back(p.tx_max);
    } else {
      for (int l = 0; l < p.tx_points; ++l) {
        tx_nodes.push_back(l + 1 == p.tx_points
                               ? p.tx_max
                               : p.tx_max * static_cast<double>(l) / (p.tx_points - 1));
      }
    }
    const std::size_t n_tx = tx_nodes.size();
    survival.resize(n_tx);
    prize.resize(n_tx);
    for (std::size_t l = 0; l < n_tx; ++l) {
      survival[l] = rewards.believed_survival(p.reward_mode, mean_alpha, tx_nodes[l]);
      prize[l] = rewards.prize(tx_nodes[l]);
    }

    const auto next = out.values.values.row(step + 1);
    auto value_row = out.values.values.row(step);
    auto alpha_row = out.policy.alpha.row(step);
    auto tx_row = out.policy.tx.row(step);

    const bool refine_tx = p.refine_actions && p.tx_mode == TxPolicyMode::optimize && n_tx > 1;

    parallel_chunks(n, p.threads, [&](std::size_t begin, std::size_t end, unsigned) {
      std::vector<double> objective(n_alpha * n_tx);
      std::vector<double> alphas(n_alpha);
      for (std::size_t i = begin; i < end; ++i) {
        const double x = grid[i];
        auto evaluate = [&](double alpha, double tx, double survive, double payoff) {
          const double share = detail::naive_share(alpha, mean_alpha, p.num_miners);
          const double spend = alpha * p.cost_per_power;
          const double win = survive * share;
          const double reward = win * payoff - spend;
          const double x_win = p.transition == WealthTransition::realized_reward
                                   ? x + payoff - spend
                                   : x + reward;
          const double obj = reward + win * grid.interpolate(next, x_win) +
                             (1.0 - win) * grid.interpolate(next, x - spend);
          if (!std::isfinite(obj)) {
            throw NumericalError("non-finite objective at t=" + std::to_string(step) +
                                 ", x=" + std::to_string(x) + ", alpha=" +
                                 std::to_string(alpha) + ", T=" + std::to_string(tx));
          }
          return obj;
        };

        const std::size_t alpha_count = x > 0.0 ? n_alpha : 1;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < alpha_count; ++j) {
          alphas[j] = detail::alpha_candidate(x, p.cost_per_power, static_cast<int>(j),
                                              p.alpha_points);
          for (std::size_t l = 0; l < n_tx; ++l) {
            const double obj = evaluate(alphas[j], tx_nodes[l], survival[l], prize[l]);
            objective[j * n_tx + l] = obj;
            best = std::max(best, obj);
          }
        }
        const double threshold = best - detail::kArgmaxTieTolerance;
        std::size_t pick = 0;
        while (objective[pick] < threshold) ++pick;
        const std::size_t j_pick = pick / n_tx;
        const std::size_t l_pick = pick % n_tx;
        double alpha_best = alphas[j_pick];
        double tx_best = tx_nodes[l_pick];
        double value = best;

        if (p.refine_actions && alpha_count > 1) {
          // Polish alpha around each T node's best grid alpha; at alpha = 0 every
          // T ties, so a single start from the grid argmax can stall there.
          std::size_t j_best = j_pick;
          std::size_t l_best = l_pick;
          for (std::size_t l = 0; l < n_tx; ++l) {
            double col_best = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < alpha_count; ++j) {
              col_best = std::max(col_best, objective[j * n_tx + l]);
            }
            std::size_t j = 0;
            while (objective[j * n_tx + l] < col_best - detail::kArgmaxTieTolerance) ++j;
            auto neg = [&](double a) { return -evaluate(a, tx_nodes[l], survival[l], prize[l]); };
            const auto [a, f] = detail::local_minimum(neg, alphas[j == 0 ? 0 : j - 1],
                                                      alphas[std::min(j + 1, alpha_count - 1)]);
            const bool better = -f > col_best + detail::kArgmaxTieTolerance;
            const double cand = better ? -f : col_best;
            if (cand > value + detail::kArgmaxTieTolerance) {
              value = cand;
              alpha_best = better ? a : alphas[j];
              tx_best = tx_nodes[l];
              j_best = j;
              l_best = l;
            }
          }
          const double a_lo = alphas[j_best == 0 ? 0 : j_best - 1];
          const double a_hi = alphas[std::min(j_best + 1, alpha_count - 1)];
          const double t_lo = tx_nodes[l_best == 0 ? 0 : l_best - 1];
          const double t_hi = tx_nodes[std::min(l_best + 1, n_tx - 1)];
          for (int pass = 0; pass < detail::kRefinePasses; ++pass) {
            if (refine_tx) {
              const double a = alpha_best;
              auto neg = [&](double tx) {
                return -evaluate(a, tx, rewards.believed_survival(p.reward_mode, mean_alpha, tx),
                                 rewards.prize(tx));
              };
              const auto [tx, f] = detail::local_minimum(neg, t_lo, t_hi);
              if (-f > value + detail::kArgmaxTieTolerance) {
                value = -f;
                tx_best = tx;
              }
            }
            const double tx = tx_best;
            const double survive = rewards.believed_survival(p.reward_mode, mean_alpha, tx);
            const double payoff = rewards.prize(tx);
            auto neg = [&](double a) { return -evaluate(a, tx, survive, payoff); };
            const auto [a, f] = detail::local_minimum(neg, a_lo, a_hi);
            if (-f > value + detail::kArgmaxTieTolerance) {
              value = -f;
              alpha_best = a;
            }
          }
        }
        alpha_row[i] = alpha_best;
        tx_row[i] = tx_best;
        value_row[i] = value;
      }
    });
  }
  return out;
}

inline WealthDistribution forward_wealth(const GameParams& p, const PolicyTable& policy,
                                         std::span<const double> trajectory,
                                         std::span<const double> w0) {
  validate(p);
  detail::check_trajectory(p, trajectory);
  detail::check_policy(p, policy);
  const detail::RewardStructure rewards(p);
  auto believed = [&](std::size_t t, double tx) {
    return rewards.believed_survival(p.reward_mode, trajectory[t], tx);
  };
  return detail::propagate(p, policy, trajectory, w0, rewards, believed, believed);
}

// Policy-weighted mean power sum_x alpha_t(x) w_t(x) for t = 0..tau.
inline std::vector<double> policy_mean_power(const GameParams& p, const PolicyTable& policy,
                                             const WealthDistribution& wealth) {
  std::vector<double> out(p.steps(), 0.0);
  for (std::size_t t = 0; t < p.steps(); ++t) {
    const auto a = policy.alpha.row(t);
    const auto w = wealth.mass.row(t);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * w[i];
    out[t] = s;
  }
  return out;
}

inline std::vector<double> update_mean_field(const GameParams& p, const PolicyTable& policy,
                                             const WealthDistribution& wealth,
                                             std::span<const double> previous) {
  detail::check_trajectory(p, previous);
  const std::vector<double> mean = policy_mean_power(p, policy, wealth);
  const double g = p.momentum;
  std::vector<double> out(previous.begin(), previous.end());
  if (p.momentum_rule == MomentumRule::convex) {
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = g * previous[t] + (1.0 - g) * mean[t];
  } else {
    for (std::size_t t = 0; t + 1 < out.size(); ++t) out[t + 1] = g * previous[t] + mean[t];
  }
  return out;
}

inline double mean_wealth(const UniformGrid& grid, std::span<const double> masses) {
  double s = 0.0;
  for (std::size_t i = 0; i < masses.size(); ++i) s += grid[i] * masses[i];
  return s;
}

inline std::vector<double> mean_wealth_by_step(const GameParams& p,
                                               const WealthDistribution& wealth) {
  const UniformGrid grid = p.wealth_grid();
  std::vector<double> out(wealth.mass.steps());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = mean_wealth(grid, wealth.mass.row(t));
  return out;
}

// Probability that a block mined by the population at step t is attacked,
// weighting each wealth node by its mass times its naive win share. The hard
// rule gives the fraction of mined blocks the adversary would attack.
inline std::vector<double> attack_probability_by_step(const GameParams& p,
                                                      const PolicyTable& policy,
                                                      std::span<const double> trajectory,
                                                      const WealthDistribution& wealth,
                                                      DecisionRule::Kind kind) {
  const detail::RewardStructure rewards(p);
  const AdversaryModel& adversary =
      kind == DecisionRule::Kind::hard ? rewards.hard() : rewards.smooth();
  std::vector<double> out(p.steps(), 0.0);
  for (std::size_t t = 0; t < p.steps(); ++t) {
    double weight = 0.0;
    double attacked = 0.0;
    for (std::size_t i = 0; i < policy.alpha.points(); ++i) {
      const double w = wealth.mass(t, i) *
                       detail::naive_share(policy.alpha(t, i), trajectory[t], p.num_miners);
      if (w == 0.0) continue;
      weight += w;
      attacked += w * adversary.attack_prob(trajectory[t], policy.tx(t, i));
    }
    out[t] = weight > 0.0 ? attacked / weight : 0.0;
  }
  return out;
}

inline EquilibriumResult solve_equilibrium(const GameParams& p) {
  validate(p);
  const std::vector<double> w0 = p.initial_masses();
  const double tolerance = p.resolved_tolerance();
  EquilibriumResult result;
  std::vector<double> trajectory(p.steps(), p.initial_mean_alpha);
  for (int n = 0; n < p.max_iterations; ++n) {
    BackwardResult br = backward_induction(p, trajectory);
    WealthDistribution wealth = forward_wealth(p, br.policy, trajectory, w0);
    std::vector<double> next = update_mean_field(p, br.policy, wealth, trajectory);
    double residual = 0.0;
    for (std::size_t t = 0; t < next.size(); ++t) {
      residual = std::max(residual, std::abs(next[t] - trajectory[t]));
    }
    result.residuals.push_back(residual);
    result.iterations = n + 1;
    result.mean_alpha = trajectory;
    result.policy = std::move(br.policy);
    result.values = std::move(br.values);
    result.wealth = std::move(wealth);
    if (residual <= tolerance) {
      result.converged = true;
      break;
    }
    trajectory = std::move(next);
  }
  result.attack_prob = attack_probability_by_step(p, result.policy, result.mean_alpha,
                                                  result.wealth, DecisionRule::Kind::smooth);
  return result;
}

// Wealth distribution when `policy` meets the actual adversary. Win
// probabilities use the hard attack decision when the attack is present; the
// expected-reward transition credits winners with the reward `reward_mode`
// believes in.
inline WealthDistribution evaluate_policy_distribution(const GameParams& p,
                                                       const PolicyTable& policy,
                                                       std::span<const double> trajectory,
                                                       RewardMode reward_mode,
                                                       AttackMode attack_mode) {
  validate(p);
  detail::check_trajectory(p, trajectory);
  detail::check_policy(p, policy);
  const detail::RewardStructure rewards(p);
  const std::vector<double> w0 = p.initial_masses();
  auto actual = [&](std::size_t t, double tx) {
    return rewards.actual_survival(attack_mode, trajectory[t], tx);
  };
  auto believed = [&](std::size_t t, double tx) {
    return rewards.believed_survival(reward_mode, trajectory[t], tx);
  };
  return detail::propagate(p, policy, trajectory, w0, rewards, actual, believed);
}

inline std::vector<double> evaluate_policy(const GameParams& p, const PolicyTable& policy,
                                           std::span<const double> trajectory,
                                           RewardMode reward_mode, AttackMode attack_mode) {
  return mean_wealth_by_step(
      p, evaluate_policy_distribution(p, policy, trajectory, reward_mode, attack_mode));
}

}  // namespace powmfg
