#pragma once

// Sampling oracle for the race and for the full game, used to cross-check the
// closed forms and the solver's forward pass.
//
// Every trial draws from its own stream keyed by (seed, trial index), and
// aggregates are formed over fixed blocks of trials in index order, so a report
// does not depend on the number of worker threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "powmfg/attack_model.hpp"
#include "powmfg/errors.hpp"
#include "powmfg/grid.hpp"
#include "powmfg/parallel.hpp"
#include "powmfg/rewards.hpp"
#include "powmfg/solver.hpp"

namespace powmfg {

// SplitMix64; satisfies UniformRandomBitGenerator.
class SplitMix64 {
public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(state_ += 0x9e3779b97f4a7c15ULL); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Independent stream for trial `index` of a run seeded with `seed`.
  static SplitMix64 stream(std::uint64_t seed, std::uint64_t index) {
    return SplitMix64(mix(mix(seed) ^ mix(index + 0x632be59bd9b4e019ULL)));
  }

private:
  std::uint64_t state_;
};

struct SimConfig {
  std::uint64_t trials = 100000;
  std::uint64_t seed = 0;
  int agents = 1;
  unsigned threads = 1;
  AttackMode attack = AttackMode::present;
  DecisionRule::Kind decision = DecisionRule::Kind::hard;
  // Round each agent's wealth onto the solver grid (randomly, with the solver's
  // linear deposition weights) after every update.
  bool snap_to_grid = false;
  bool operator==(const SimConfig&) const = default;
};

inline void validate(const SimConfig& c) {
  detail::require(c.trials >= 1, "trials must be >= 1");
  detail::require(c.agents >= 1, "agents must be >= 1");
}

struct SimReport {
  std::uint64_t trials = 0;

  // Race statistics.
  std::uint64_t successes = 0;
  double success_rate = 0.0;
  double success_se = 0.0;
  double mean_steps = 0.0;  // actual race length
  double mean_steps_se = 0.0;
  double mean_charged_steps = 0.0;  // failures charged 2k+1
  double mean_charged_steps_se = 0.0;

  // Game statistics, per t = 0..tau+1 (wealth) and t = 0..tau (attacks).
  std::vector<double> mean_wealth;
  std::vector<double> mean_wealth_se;
  std::vector<double> attack_frequency;  // attacked / agent-mined blocks
  std::vector<std::uint64_t> agent_blocks;
  std::uint64_t overfull_rounds = 0;  // rounds where agents' shares summed above 1

  bool operator==(const SimReport&) const = default;
};

namespace detail {

inline constexpr std::uint64_t kTrialBlock = 1024;

inline double sample_se(double sum, double sum_sq, std::uint64_t n) {
  if (n < 2) return 0.0;
  const double nn = static_cast<double>(n);
  const double mean = sum / nn;
  const double var = std::max(0.0, (sum_sq - nn * mean * mean) / (nn - 1.0));
  return std::sqrt(var / nn);
}

}  // namespace detail

// Samples the race step by step until one side reaches k+1 blocks.
inline SimReport simulate_race(const RaceParams& race, std::uint64_t trials, std::uint64_t seed,
                               unsigned threads = 1) {
  validate(race);
  detail::require(trials >= 1, "trials must be >= 1");
  const int target = race.k + 1;
  // uniform() < beta  <=>  (bits >> 11) < ceil(beta * 2^53)
  const auto threshold = static_cast<std::uint64_t>(std::ceil(race.beta * 0x1.0p53));
  const std::uint64_t blocks = (trials + detail::kTrialBlock - 1) / detail::kTrialBlock;

  struct Tally {
    std::uint64_t wins = 0, steps = 0, steps_sq = 0, charged = 0, charged_sq = 0;
  };
  std::vector<Tally> tally(blocks);
  parallel_chunks(blocks, threads, [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t b = begin; b < end; ++b) {
      Tally t;
      const std::uint64_t first = b * detail::kTrialBlock;
      const std::uint64_t last = std::min(trials, first + detail::kTrialBlock);
      for (std::uint64_t i = first; i < last; ++i) {
        SplitMix64 rng = SplitMix64::stream(seed, i);
        int honest = 0, adversary = 0;
        while (honest < target && adversary < target) {
          const int hit = (rng() >> 11) < threshold;  // uniform() < beta
          adversary += hit;
          honest += 1 - hit;
        }
        const std::uint64_t n = static_cast<std::uint64_t>(honest + adversary);
        const bool won = adversary == target;
        const std::uint64_t charged = won ? n : static_cast<std::uint64_t>(2 * race.k + 1);
        t.wins += won;
        t.steps += n;
        t.steps_sq += n * n;
        t.charged += charged;
        t.charged_sq += charged * charged;
      }
      tally[b] = t;
    }
  });

  Tally sum;
  for (const Tally& t : tally) {
    sum.wins += t.wins;
    sum.steps += t.steps;
    sum.steps_sq += t.steps_sq;
    sum.charged += t.charged;
    sum.charged_sq += t.charged_sq;
  }
  const double n = static_cast<double>(trials);
  SimReport out;
  out.trials = trials;
  out.successes = sum.wins;
  out.success_rate = static_cast<double>(sum.wins) / n;
  out.success_se = detail::sample_se(static_cast<double>(sum.wins),
                                     static_cast<double>(sum.wins), trials);
  out.mean_steps = static_cast<double>(sum.steps) / n;
  out.mean_steps_se = detail::sample_se(static_cast<double>(sum.steps),
                                        static_cast<double>(sum.steps_sq), trials);
  out.mean_charged_steps = static_cast<double>(sum.charged) / n;
  out.mean_charged_steps_se = detail::sample_se(static_cast<double>(sum.charged),
                                                static_cast<double>(sum.charged_sq), trials);
  return out;
}

// Agent-by-agent simulation of `policy` against the mean-field trajectory.
// Each round one block is mined: agent i wins with probability equal to its
// naive share alpha_i / (alpha_i + m mean_alpha_t), the rest of the network
// otherwise (shares are rescaled if they sum above 1). An agent's block is
// attacked per the configured decision rule at (mean_alpha_t, T_i) and voided
// with probability P(beta). Wealth updates follow params.transition and are
// clamped to [0, wealth_max] like the solver's grid.
inline SimReport simulate_game(const PolicyTable& policy, std::span<const double> trajectory,
                               const GameParams& params, const SimConfig& config) {
  validate(params);
  validate(config);
  detail::check_trajectory(params, trajectory);
  detail::check_policy(params, policy);

  const detail::RewardStructure rewards(params);
  const AdversaryModel& adversary =
      config.decision == DecisionRule::Kind::hard ? rewards.hard() : rewards.smooth();
  const bool pinned = params.tx_mode == TxPolicyMode::pinned_zero_profit;
  const double success = adversary.success_prob();
  const UniformGrid grid = params.wealth_grid();
  const std::size_t steps = params.steps();
  const auto agents = static_cast<std::size_t>(config.agents);
  const double cost = params.cost_per_power;

  // Initial wealth is drawn from the solver's initial masses when snapping or
  // when an explicit distribution is given; otherwise every agent starts at
  // initial_wealth exactly.
  const std::vector<double> w0 = params.initial_masses();
  const bool sample_start = config.snap_to_grid || !params.initial_distribution.empty();
  std::vector<double> w0_cdf(w0.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < w0.size(); ++i) w0_cdf[i] = (acc += w0[i]);

  const std::uint64_t trials = config.trials;
  const std::uint64_t blocks = (trials + detail::kTrialBlock - 1) / detail::kTrialBlock;

  struct Tally {
    std::vector<double> sum, sum_sq;
    std::vector<std::uint64_t> mined, attacked;
    std::uint64_t overfull = 0;
  };
  std::vector<Tally> tally(blocks);

  parallel_chunks(blocks, config.threads, [&](std::size_t begin, std::size_t end, unsigned) {
    std::vector<double> x(agents), alpha(agents), tx(agents), share(agents);
    for (std::size_t b = begin; b < end; ++b) {
      Tally t{std::vector<double>(steps + 1, 0.0), std::vector<double>(steps + 1, 0.0),
              std::vector<std::uint64_t>(steps, 0), std::vector<std::uint64_t>(steps, 0), 0};
      const std::uint64_t first = b * detail::kTrialBlock;
      const std::uint64_t last = std::min(trials, first + detail::kTrialBlock);
      for (std::uint64_t trial = first; trial < last; ++trial) {
        SplitMix64 rng = SplitMix64::stream(config.seed, trial);
        auto place = [&](double y) {
          y = std::clamp(y, 0.0, grid.upper());
          if (!config.snap_to_grid) return y;
          const auto br = grid.locate(y);
          if (br.upper_weight == 0.0) return grid[br.lower];
          return rng.uniform() < br.upper_weight ? grid[br.lower + 1] : grid[br.lower];
        };
        for (std::size_t a = 0; a < agents; ++a) {
          if (!sample_start) {
            x[a] = params.initial_wealth;
            continue;
          }
          const double u = rng.uniform() * acc;
          const auto it = std::upper_bound(w0_cdf.begin(), w0_cdf.end(), u);
          x[a] = grid[std::min<std::size_t>(it - w0_cdf.begin(), w0.size() - 1)];
        }
        auto record = [&](std::size_t t_idx) {
          double s = 0.0;
          for (double v : x) s += v;
          const double m = s / static_cast<double>(agents);
          t.sum[t_idx] += m;
          t.sum_sq[t_idx] += m * m;
        };
        record(0);
        for (std::size_t step = 0; step < steps; ++step) {
          const double mean_alpha = trajectory[step];
          const auto alpha_row = policy.alpha.row(step);
          const auto tx_row = policy.tx.row(step);
          double total = 0.0;
          for (std::size_t a = 0; a < agents; ++a) {
            alpha[a] = std::clamp(grid.interpolate(alpha_row, x[a]), 0.0, x[a] / cost);
            tx[a] = grid.interpolate(tx_row, x[a]);
            share[a] = detail::naive_share(alpha[a], mean_alpha, params.num_miners);
            total += share[a];
          }
          const double scale = total > 1.0 ? 1.0 / total : 1.0;
          if (total > 1.0) ++t.overfull;

          std::size_t winner = agents;
          double u = rng.uniform();
          for (std::size_t a = 0; a < agents; ++a) {
            const double s = share[a] * scale;
            if (u < s) {
              winner = a;
              break;
            }
            u -= s;
          }

          bool voided = false;
          if (winner < agents) {
            ++t.mined[step];
            bool attacked = false;
            if (config.attack == AttackMode::present && params.beta > 0.0) {
              if (pinned) {
                attacked = rewards.actual_survival(AttackMode::present, mean_alpha, tx[winner]) < 1.0;
              } else {
                const double a_prob = adversary.attack_prob(mean_alpha, tx[winner]);
                attacked = a_prob >= 1.0 || (a_prob > 0.0 && rng.uniform() < a_prob);
              }
            }
            if (attacked) {
              ++t.attacked[step];
              voided = rng.uniform() < success;
            }
          }

          for (std::size_t a = 0; a < agents; ++a) {
            const double spend = alpha[a] * cost;
            double next = x[a] - spend;
            if (a == winner && !voided) {
              const double believed = rewards.believed_survival(params.reward_mode, mean_alpha,
                                                                tx[a]) * share[a];
              next = rewards.win_wealth(x[a], alpha[a], believed, tx[a]);
            }
            x[a] = place(next);
          }
          record(step + 1);
        }
      }
      tally[b] = std::move(t);
    }
  });

  SimReport out;
  out.trials = trials;
  out.mean_wealth.assign(steps + 1, 0.0);
  out.mean_wealth_se.assign(steps + 1, 0.0);
  out.attack_frequency.assign(steps, 0.0);
  out.agent_blocks.assign(steps, 0);
  std::vector<double> sum(steps + 1, 0.0), sum_sq(steps + 1, 0.0);
  std::vector<std::uint64_t> attacked(steps, 0);
  for (const Tally& t : tally) {
    for (std::size_t i = 0; i <= steps; ++i) {
      sum[i] += t.sum[i];
      sum_sq[i] += t.sum_sq[i];
    }
    for (std::size_t i = 0; i < steps; ++i) {
      out.agent_blocks[i] += t.mined[i];
      attacked[i] += t.attacked[i];
    }
    out.overfull_rounds += t.overfull;
  }
  const double n = static_cast<double>(trials);
  for (std::size_t i = 0; i <= steps; ++i) {
    out.mean_wealth[i] = sum[i] / n;
    out.mean_wealth_se[i] = detail::sample_se(sum[i], sum_sq[i], trials);
  }
  for (std::size_t i = 0; i < steps; ++i) {
    out.attack_frequency[i] = out.agent_blocks[i] > 0
                                  ? static_cast<double>(attacked[i]) /
                                        static_cast<double>(out.agent_blocks[i])
                                  : 0.0;
  }
  return out;
}

}  // namespace powmfg
