#pragma once

// Run configuration (JSON), result serialization, and command orchestration.

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "powmfg/attack_model.hpp"
#include "powmfg/errors.hpp"
#include "powmfg/montecarlo.hpp"
#include "powmfg/rewards.hpp"
#include "powmfg/scenarios.hpp"
#include "powmfg/solver.hpp"

namespace powmfg {

class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : std::runtime_error("parse error at line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

private:
  std::size_t line_, column_;
};

class ConfigError : public std::invalid_argument {
public:
  ConfigError(const std::string& field, const std::string& constraint)
      : std::invalid_argument(field + ": " + constraint), field_(field) {}
  const std::string& field() const { return field_; }

private:
  std::string field_;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Command { attack_model, solve, simulate, bitcoin_sweep, fee_evolution };

struct AttackModelBlock {
  std::vector<double> betas;      // defaults to [game.beta]
  std::vector<double> tx_values;  // defaults to [game.tx_max]
  bool operator==(const AttackModelBlock&) const = default;
};

struct SimulationBlock {
  SimConfig config;
  bool has_seed = false;
  std::uint64_t race_trials = 0;  // 0: skip the race simulation
  bool operator==(const SimulationBlock&) const = default;
};

struct SweepBlock {
  std::vector<double> betas;  // defaults to 0.01..0.49
  double observed_value = 0.0;  // defaults to snapshot.observed_value
  bool operator==(const SweepBlock&) const = default;
};

struct FeeEvolutionBlock {
  double beta = 0.3;
  std::vector<double> lambdas{0.01, 0.0125, 0.015, 0.02};
  double target = 0.0;  // defaults to snapshot.observed_value
  FeeEvolutionSetup setup;
  bool operator==(const FeeEvolutionBlock& o) const {
    const auto& a = setup;
    const auto& b = o.setup;
    return beta == o.beta && lambdas == o.lambdas && target == o.target &&
           a.num_miners == b.num_miners && a.cost_per_power == b.cost_per_power &&
           a.horizon == b.horizon && a.initial_wealth == b.initial_wealth &&
           a.wealth_max == b.wealth_max && a.wealth_points == b.wealth_points &&
           a.alpha_points == b.alpha_points && a.momentum == b.momentum &&
           a.tolerance == b.tolerance && a.max_iterations == b.max_iterations &&
           a.transition == b.transition && a.threads == b.threads;
  }
};

struct RunConfig {
  Command command = Command::solve;
  GameParams game;
  ChainSnapshot snapshot;
  AttackModelBlock attack_model;
  SimulationBlock simulation;
  SweepBlock sweep;
  FeeEvolutionBlock fee_evolution;
  std::string out_dir = "out";
  std::string format = "csv";

  bool operator==(const RunConfig& o) const {
    const auto& s = snapshot;
    const auto& t = o.snapshot;
    return command == o.command && game == o.game && s.block_reward == t.block_reward &&
           s.fee == t.fee && s.network_cost == t.network_cost &&
           s.observed_value == t.observed_value && s.confirmations == t.confirmations &&
           s.failure_charging == t.failure_charging && attack_model == o.attack_model &&
           simulation == o.simulation && sweep == o.sweep && fee_evolution == o.fee_evolution &&
           out_dir == o.out_dir && format == o.format;
  }
};

namespace detail {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

template <typename E>
struct EnumName {
  E value;
  const char* name;
};

inline constexpr EnumName<Command> kCommands[] = {
    {Command::attack_model, "attack-model"},
    {Command::solve, "solve"},
    {Command::simulate, "simulate"},
    {Command::bitcoin_sweep, "bitcoin-sweep"},
    {Command::fee_evolution, "fee-evolution"}};
inline constexpr EnumName<RewardMode> kRewardModes[] = {{RewardMode::naive, "naive"},
                                                        {RewardMode::aware, "aware"}};
inline constexpr EnumName<TxPolicyMode> kTxModes[] = {
    {TxPolicyMode::optimize, "optimize"}, {TxPolicyMode::pinned_zero_profit, "pinned_zero_profit"}};
inline constexpr EnumName<WealthTransition> kTransitions[] = {
    {WealthTransition::expected_reward, "expected_reward"},
    {WealthTransition::realized_reward, "realized_reward"}};
inline constexpr EnumName<MomentumRule> kMomentumRules[] = {{MomentumRule::convex, "convex"},
                                                            {MomentumRule::literal, "literal"}};
inline constexpr EnumName<FailureCharging> kChargings[] = {
    {FailureCharging::full_window, "full_window"}, {FailureCharging::exact, "exact"}};
inline constexpr EnumName<FeeKind> kFeeKinds[] = {{FeeKind::proportional, "proportional"},
                                                  {FeeKind::constant, "constant"}};
inline constexpr EnumName<AttackMode> kAttackModes[] = {{AttackMode::present, "present"},
                                                        {AttackMode::absent, "absent"}};
inline constexpr EnumName<DecisionRule::Kind> kDecisions[] = {
    {DecisionRule::Kind::hard, "hard"}, {DecisionRule::Kind::smooth, "smooth"}};

template <typename E, std::size_t N>
const char* enum_name(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  return "?";
}

template <typename E, std::size_t N>
E enum_value(const EnumName<E> (&table)[N], const std::string& s, const std::string& field) {
  std::string options;
  for (const auto& e : table) {
    if (s == e.name) return e.value;
    options += options.empty() ? "" : ", ";
    options += e.name;
  }
  throw ConfigError(field, "must be one of {" + options + "}, got \"" + s + "\"");
}

inline void check(bool ok, const std::string& field, const std::string& constraint) {
  if (!ok) throw ConfigError(field, constraint);
}

// Typed, strict access to one JSON object; unknown keys are errors.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    check(j.is_object(), path_.empty() ? "<root>" : path_, "must be an object");
  }

  ~Section() = default;

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
    }
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      check(v->is_number(), field(key), "must be a number");
      out = v->get<double>();
      check(std::isfinite(out), field(key), "must be finite");
    }
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      check(v->is_number(), field(key), "must be a number");
      out = v->get<double>();
    }
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      check(v->is_number_integer(), field(key), "must be an integer");
      const auto x = v->get<std::int64_t>();
      check(x >= std::numeric_limits<int>::min() && x <= std::numeric_limits<int>::max(),
            field(key), "out of range");
      out = static_cast<int>(x);
    }
  }

  void count(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      check(v->is_number_unsigned() || (v->is_number_integer() && v->get<std::int64_t>() >= 0),
            field(key), "must be a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void threads(const std::string& key, unsigned& out) {
    std::uint64_t x = out;
    count(key, x);
    check(x >= 1 && x <= 1024, field(key), "must lie in [1, 1024]");
    out = static_cast<unsigned>(x);
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      check(v->is_boolean(), field(key), "must be true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      check(v->is_string(), field(key), "must be a string");
      out = v->get<std::string>();
    }
  }

  template <typename E, std::size_t N>
  void enumeration(const std::string& key, const EnumName<E> (&table)[N], E& out) {
    if (const json* v = find(key)) {
      check(v->is_string(), field(key), "must be a string");
      out = enum_value(table, v->get<std::string>(), field(key));
    }
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      check(v->is_array(), field(key), "must be an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        check(e.is_number(), field(key), "must be an array of numbers");
        out.push_back(e.get<double>());
        check(std::isfinite(out.back()), field(key), "entries must be finite");
      }
    }
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_fee(const json& j, const std::string& path, FeePolicy& fee) {
  Section s(j, path);
  s.enumeration("kind", kFeeKinds, fee.kind);
  s.number("lambda", fee.lambda);
  s.number("flat_fee", fee.flat_fee);
  s.finish();
  check(fee.lambda >= 0.0, path + ".lambda", "must be >= 0");
  check(fee.flat_fee >= 0.0, path + ".flat_fee", "must be >= 0");
}

inline void read_game(const json& j, GameParams& g) {
  Section s(j, "game");
  s.integer("num_miners", g.num_miners);
  s.number("cost_per_power", g.cost_per_power);
  s.number("block_reward", g.block_reward);
  s.number("beta", g.beta);
  s.integer("confirmations", g.confirmations);
  s.integer("horizon", g.horizon);
  if (const json* f = s.find("fee")) read_fee(*f, "game.fee", g.fee);
  s.number("tx_max", g.tx_max);
  s.number("momentum", g.momentum);
  s.number("initial_mean_alpha", g.initial_mean_alpha);
  s.number("initial_wealth", g.initial_wealth);
  s.numbers("initial_distribution", g.initial_distribution);
  s.number("wealth_max", g.wealth_max);
  s.integer("wealth_points", g.wealth_points);
  s.integer("alpha_points", g.alpha_points);
  s.integer("tx_points", g.tx_points);
  s.number("sharpness", g.sharpness);
  s.optional_number("tolerance", g.tolerance);
  s.integer("max_iterations", g.max_iterations);
  s.enumeration("reward_mode", kRewardModes, g.reward_mode);
  s.enumeration("tx_mode", kTxModes, g.tx_mode);
  s.enumeration("transition", kTransitions, g.transition);
  s.enumeration("momentum_rule", kMomentumRules, g.momentum_rule);
  s.enumeration("failure_charging", kChargings, g.failure_charging);
  s.boolean("refine_actions", g.refine_actions);
  s.threads("threads", g.threads);
  s.finish();
}

inline void check_game(const GameParams& g) {
  check(g.num_miners >= 1, "game.num_miners", "must be >= 1");
  check(g.cost_per_power > 0.0, "game.cost_per_power", "must be > 0");
  check(g.block_reward >= 0.0, "game.block_reward", "must be >= 0");
  check(g.beta >= 0.0 && g.beta < 1.0, "game.beta", "must lie in [0, 1)");
  check(g.confirmations >= 0, "game.confirmations", "must be >= 0");
  check(g.horizon >= 0, "game.horizon", "must be >= 0");
  check(g.tx_max >= 0.0, "game.tx_max", "must be >= 0");
  check(g.momentum >= 0.0 && g.momentum < 1.0, "game.momentum", "must lie in [0, 1)");
  check(g.initial_mean_alpha > 0.0, "game.initial_mean_alpha", "must be > 0");
  check(g.wealth_max > 0.0, "game.wealth_max", "must be > 0");
  check(g.wealth_points >= 2, "game.wealth_points", "must be >= 2");
  check(g.alpha_points >= 2, "game.alpha_points", "must be >= 2");
  check(g.tx_points >= 1, "game.tx_points", "must be >= 1");
  check(g.sharpness > 0.0, "game.sharpness", "must be > 0");
  check(!g.tolerance || (std::isfinite(*g.tolerance) && *g.tolerance > 0.0), "game.tolerance",
        "must be > 0");
  check(g.max_iterations >= 1, "game.max_iterations", "must be >= 1");
  if (g.initial_distribution.empty()) {
    check(g.initial_wealth >= 0.0 && g.initial_wealth <= g.wealth_max, "game.initial_wealth",
          "must lie in [0, wealth_max]");
  } else {
    check(g.initial_distribution.size() == static_cast<std::size_t>(g.wealth_points),
          "game.initial_distribution", "must have wealth_points entries");
    double total = 0.0;
    for (double m : g.initial_distribution) {
      check(m >= 0.0, "game.initial_distribution", "masses must be >= 0");
      total += m;
    }
    check(std::abs(total - 1.0) <= 1e-9, "game.initial_distribution", "must sum to 1");
  }
  try {
    validate(g);
  } catch (const DomainError& e) {
    throw ConfigError("game", e.what());
  }
}

inline void read_snapshot(const json& j, ChainSnapshot& s) {
  Section sec(j, "snapshot");
  sec.number("block_reward", s.block_reward);
  if (const json* f = sec.find("fee")) read_fee(*f, "snapshot.fee", s.fee);
  sec.number("network_cost", s.network_cost);
  sec.number("observed_value", s.observed_value);
  sec.integer("confirmations", s.confirmations);
  sec.enumeration("failure_charging", kChargings, s.failure_charging);
  sec.finish();
  check(s.block_reward >= 0.0, "snapshot.block_reward", "must be >= 0");
  check(s.network_cost >= 0.0, "snapshot.network_cost", "must be >= 0");
  check(s.observed_value >= 0.0, "snapshot.observed_value", "must be >= 0");
  check(s.confirmations >= 0, "snapshot.confirmations", "must be >= 0");
}

inline void check_betas(const std::vector<double>& betas, const std::string& field) {
  for (double b : betas) check(b >= 0.0 && b < 1.0, field, "entries must lie in [0, 1)");
}

inline std::size_t line_of(const std::string& text, std::size_t byte, std::size_t& column) {
  std::size_t line = 1;
  column = 1;
  const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return line;
}

}  // namespace detail

inline const char* command_name(Command c) { return detail::enum_name(detail::kCommands, c); }

inline Command parse_command(const std::string& s) {
  return detail::enum_value(detail::kCommands, s, "command");
}

// Parses and validates a JSON run configuration, filling every default.
// `command` overrides (and must agree with) the document's own "command".
inline RunConfig parse_config(const std::string& text,
                              std::optional<Command> command = std::nullopt) {
  using detail::check;
  detail::json doc;
  try {
    doc = detail::json::parse(text);
  } catch (const detail::json::parse_error& e) {
    std::size_t column = 0;
    const std::size_t line = detail::line_of(text, e.byte, column);
    std::string msg = e.what();
    if (const auto pos = msg.find("parse error"); pos != std::string::npos) msg = msg.substr(pos);
    throw ParseError(line, column, msg);
  }

  RunConfig c;
  detail::Section root(doc, "");
  if (const auto* v = root.find("command")) {
    check(v->is_string(), "command", "must be a string");
    c.command = parse_command(v->get<std::string>());
    check(!command || *command == c.command, "command",
          std::string("config says \"") + command_name(c.command) + "\" but \"" +
              command_name(*command) + "\" was requested");
  } else {
    check(command.has_value(), "command", "missing");
    c.command = *command;
  }
  if (const auto* v = root.find("game")) detail::read_game(*v, c.game);
  if (const auto* v = root.find("snapshot")) detail::read_snapshot(*v, c.snapshot);

  bool betas_given = false, tx_given = false;
  if (const auto* v = root.find("attack_model")) {
    detail::Section s(*v, "attack_model");
    betas_given = s.find("betas") != nullptr;
    s.numbers("betas", c.attack_model.betas);
    tx_given = s.find("tx_values") != nullptr;
    s.numbers("tx_values", c.attack_model.tx_values);
    s.finish();
  }

  if (const auto* v = root.find("simulation")) {
    detail::Section s(*v, "simulation");
    SimConfig& sim = c.simulation.config;
    s.count("trials", sim.trials);
    if (const auto* seed = s.find("seed")) {
      check(seed->is_number_unsigned() ||
                (seed->is_number_integer() && seed->get<std::int64_t>() >= 0),
            "simulation.seed", "must be a non-negative 64-bit integer");
      sim.seed = seed->get<std::uint64_t>();
      c.simulation.has_seed = true;
    }
    s.integer("agents", sim.agents);
    s.threads("threads", sim.threads);
    s.enumeration("attack", detail::kAttackModes, sim.attack);
    s.enumeration("decision", detail::kDecisions, sim.decision);
    s.boolean("snap_to_grid", sim.snap_to_grid);
    s.count("race_trials", c.simulation.race_trials);
    s.finish();
    check(sim.trials >= 1, "simulation.trials", "must be >= 1");
    check(sim.agents >= 1, "simulation.agents", "must be >= 1");
  }

  bool sweep_betas = false, sweep_observed = false;
  if (const auto* v = root.find("sweep")) {
    detail::Section s(*v, "sweep");
    sweep_betas = s.find("betas") != nullptr;
    s.numbers("betas", c.sweep.betas);
    sweep_observed = s.find("observed_value") != nullptr;
    s.number("observed_value", c.sweep.observed_value);
    s.finish();
  }

  bool fee_target = false;
  if (const auto* v = root.find("fee_evolution")) {
    detail::Section s(*v, "fee_evolution");
    FeeEvolutionBlock& f = c.fee_evolution;
    s.number("beta", f.beta);
    s.numbers("lambdas", f.lambdas);
    fee_target = s.find("target") != nullptr;
    s.number("target", f.target);
    s.integer("num_miners", f.setup.num_miners);
    s.number("cost_per_power", f.setup.cost_per_power);
    s.integer("horizon", f.setup.horizon);
    s.number("initial_wealth", f.setup.initial_wealth);
    s.number("wealth_max", f.setup.wealth_max);
    s.integer("wealth_points", f.setup.wealth_points);
    s.integer("alpha_points", f.setup.alpha_points);
    s.number("momentum", f.setup.momentum);
    s.optional_number("tolerance", f.setup.tolerance);
    s.integer("max_iterations", f.setup.max_iterations);
    s.enumeration("transition", detail::kTransitions, f.setup.transition);
    s.threads("threads", f.setup.threads);
    s.finish();
  }

  if (const auto* v = root.find("output")) {
    detail::Section s(*v, "output");
    s.string("directory", c.out_dir);
    s.string("format", c.format);
    s.finish();
  }
  root.finish();

  // Validation and defaults that depend on other blocks.
  detail::check_game(c.game);
  if (!c.game.tolerance) c.game.tolerance = c.game.resolved_tolerance();

  if (!betas_given) c.attack_model.betas = {c.game.beta};
  if (!tx_given) c.attack_model.tx_values = {c.game.tx_max};
  detail::check_betas(c.attack_model.betas, "attack_model.betas");
  for (double t : c.attack_model.tx_values) {
    check(t >= 0.0, "attack_model.tx_values", "entries must be >= 0");
  }

  if (!sweep_betas) c.sweep.betas = default_beta_grid();
  if (!sweep_observed) c.sweep.observed_value = c.snapshot.observed_value;
  for (double b : c.sweep.betas) check(b > 0.0 && b < 1.0, "sweep.betas", "entries must lie in (0, 1)");
  check(std::is_sorted(c.sweep.betas.begin(), c.sweep.betas.end()), "sweep.betas",
        "must be sorted ascending");
  check(c.sweep.observed_value >= 0.0, "sweep.observed_value", "must be >= 0");

  FeeEvolutionBlock& f = c.fee_evolution;
  if (!fee_target) f.target = c.snapshot.observed_value;
  check(f.beta > 0.0 && f.beta < 1.0, "fee_evolution.beta", "must lie in (0, 1)");
  check(!f.lambdas.empty(), "fee_evolution.lambdas", "must not be empty");
  for (double l : f.lambdas) check(l >= 0.0, "fee_evolution.lambdas", "entries must be >= 0");
  check(f.setup.num_miners >= 1, "fee_evolution.num_miners", "must be >= 1");
  check(f.setup.cost_per_power > 0.0, "fee_evolution.cost_per_power", "must be > 0");
  check(f.setup.horizon >= 0, "fee_evolution.horizon", "must be >= 0");
  check(f.setup.wealth_max > 0.0, "fee_evolution.wealth_max", "must be > 0");
  check(f.setup.initial_wealth >= 0.0 && f.setup.initial_wealth <= f.setup.wealth_max,
        "fee_evolution.initial_wealth", "must lie in [0, wealth_max]");
  check(f.setup.wealth_points >= 2, "fee_evolution.wealth_points", "must be >= 2");
  check(f.setup.alpha_points >= 2, "fee_evolution.alpha_points", "must be >= 2");
  check(f.setup.momentum >= 0.0 && f.setup.momentum < 1.0, "fee_evolution.momentum",
        "must lie in [0, 1)");
  check(!f.setup.tolerance || *f.setup.tolerance > 0.0, "fee_evolution.tolerance", "must be > 0");
  check(f.setup.max_iterations >= 1, "fee_evolution.max_iterations", "must be >= 1");
  if (c.command == Command::fee_evolution) {
    check(c.snapshot.network_cost > 0.0, "snapshot.network_cost",
          "must be > 0 for fee-evolution");
  }
  if (!f.setup.tolerance && c.snapshot.network_cost > 0.0) {
    f.setup.tolerance = 1e-6 * c.snapshot.network_cost /
                        (f.setup.num_miners * f.setup.cost_per_power);
  }

  check(c.format == "csv", "output.format", "only \"csv\" is supported");
  check(!c.out_dir.empty(), "output.directory", "must not be empty");
  if (c.command == Command::simulate) {
    check(c.simulation.has_seed, "simulation.seed", "required for simulate");
  }
  return c;
}

// Fully resolved configuration as JSON; parse_config(to_json(c).dump()) == c.
inline nlohmann::ordered_json to_json(const RunConfig& c) {
  using detail::enum_name;
  using detail::ordered_json;
  auto fee_json = [](const FeePolicy& f) {
    ordered_json j;
    j["kind"] = enum_name(detail::kFeeKinds, f.kind);
    j["lambda"] = f.lambda;
    j["flat_fee"] = f.flat_fee;
    return j;
  };
  const GameParams& g = c.game;
  ordered_json game;
  game["num_miners"] = g.num_miners;
  game["cost_per_power"] = g.cost_per_power;
  game["block_reward"] = g.block_reward;
  game["beta"] = g.beta;
  game["confirmations"] = g.confirmations;
  game["horizon"] = g.horizon;
  game["fee"] = fee_json(g.fee);
  game["tx_max"] = g.tx_max;
  game["momentum"] = g.momentum;
  game["initial_mean_alpha"] = g.initial_mean_alpha;
  game["initial_wealth"] = g.initial_wealth;
  game["initial_distribution"] = g.initial_distribution;
  game["wealth_max"] = g.wealth_max;
  game["wealth_points"] = g.wealth_points;
  game["alpha_points"] = g.alpha_points;
  game["tx_points"] = g.tx_points;
  game["sharpness"] = g.sharpness;
  game["tolerance"] = g.tolerance ? ordered_json(*g.tolerance) : ordered_json(nullptr);
  game["max_iterations"] = g.max_iterations;
  game["reward_mode"] = enum_name(detail::kRewardModes, g.reward_mode);
  game["tx_mode"] = enum_name(detail::kTxModes, g.tx_mode);
  game["transition"] = enum_name(detail::kTransitions, g.transition);
  game["momentum_rule"] = enum_name(detail::kMomentumRules, g.momentum_rule);
  game["failure_charging"] = enum_name(detail::kChargings, g.failure_charging);
  game["refine_actions"] = g.refine_actions;
  game["threads"] = g.threads;

  ordered_json snap;
  snap["block_reward"] = c.snapshot.block_reward;
  snap["fee"] = fee_json(c.snapshot.fee);
  snap["network_cost"] = c.snapshot.network_cost;
  snap["observed_value"] = c.snapshot.observed_value;
  snap["confirmations"] = c.snapshot.confirmations;
  snap["failure_charging"] = enum_name(detail::kChargings, c.snapshot.failure_charging);

  ordered_json attack;
  attack["betas"] = c.attack_model.betas;
  attack["tx_values"] = c.attack_model.tx_values;

  const SimConfig& s = c.simulation.config;
  ordered_json sim;
  sim["trials"] = s.trials;
  if (c.simulation.has_seed) sim["seed"] = s.seed;
  sim["agents"] = s.agents;
  sim["threads"] = s.threads;
  sim["attack"] = enum_name(detail::kAttackModes, s.attack);
  sim["decision"] = enum_name(detail::kDecisions, s.decision);
  sim["snap_to_grid"] = s.snap_to_grid;
  sim["race_trials"] = c.simulation.race_trials;

  ordered_json sweep;
  sweep["betas"] = c.sweep.betas;
  sweep["observed_value"] = c.sweep.observed_value;

  const FeeEvolutionBlock& f = c.fee_evolution;
  ordered_json fee;
  fee["beta"] = f.beta;
  fee["lambdas"] = f.lambdas;
  fee["target"] = f.target;
  fee["num_miners"] = f.setup.num_miners;
  fee["cost_per_power"] = f.setup.cost_per_power;
  fee["horizon"] = f.setup.horizon;
  fee["initial_wealth"] = f.setup.initial_wealth;
  fee["wealth_max"] = f.setup.wealth_max;
  fee["wealth_points"] = f.setup.wealth_points;
  fee["alpha_points"] = f.setup.alpha_points;
  fee["momentum"] = f.setup.momentum;
  fee["tolerance"] =
      f.setup.tolerance ? ordered_json(*f.setup.tolerance) : ordered_json(nullptr);
  fee["max_iterations"] = f.setup.max_iterations;
  fee["transition"] = enum_name(detail::kTransitions, f.setup.transition);
  fee["threads"] = f.setup.threads;

  ordered_json out;
  out["command"] = command_name(c.command);
  out["game"] = game;
  out["snapshot"] = snap;
  out["attack_model"] = attack;
  out["simulation"] = sim;
  out["sweep"] = sweep;
  out["fee_evolution"] = fee;
  out["output"] = {{"directory", c.out_dir}, {"format", c.format}};
  return out;
}

inline RunConfig load_config(const std::filesystem::path& path,
                             std::optional<Command> command = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string() + ": " + std::strerror(errno));
  return parse_config(ss.str(), command);
}

// ---- serialization -------------------------------------------------------

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& path, const std::string& header)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    out_ << header << '\n';
  }

  template <typename... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw IoError("cannot write " + path_.string() + ": " + std::strerror(errno));
  }

private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }

  std::filesystem::path path_;
  std::ofstream out_;
};

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

inline void write_mean_alpha(const std::filesystem::path& dir, std::span<const double> mean_alpha) {
  CsvWriter w(dir / "mean_alpha.csv", "t,alpha_bar");
  for (std::size_t t = 0; t < mean_alpha.size(); ++t) w.row(t, mean_alpha[t]);
  w.close();
}

inline void write_wealth(const std::filesystem::path& dir, const GameParams& p,
                         const WealthDistribution& wealth) {
  const UniformGrid grid = p.wealth_grid();
  CsvWriter w(dir / "wealth.csv", "t,x,mass");
  for (std::size_t t = 0; t < wealth.mass.steps(); ++t) {
    for (std::size_t i = 0; i < grid.size(); ++i) w.row(t, grid[i], wealth.mass(t, i));
  }
  w.close();
}

inline void write_policy(const std::filesystem::path& dir, const GameParams& p,
                         const PolicyTable& policy) {
  const UniformGrid grid = p.wealth_grid();
  CsvWriter w(dir / "policy.csv", "t,x,alpha,T");
  for (std::size_t t = 0; t < policy.alpha.steps(); ++t) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      w.row(t, grid[i], policy.alpha(t, i), policy.tx(t, i));
    }
  }
  w.close();
}

inline void write_attack(const std::filesystem::path& dir, std::span<const double> attack) {
  CsvWriter w(dir / "attack.csv", "t,attack_prob");
  for (std::size_t t = 0; t < attack.size(); ++t) w.row(t, attack[t]);
  w.close();
}

inline void write_safe_value(const std::filesystem::path& dir,
                             std::span<const SafeValuePoint> curve) {
  CsvWriter w(dir / "safe_value.csv", "beta,t_star");
  for (const auto& pt : curve) w.row(pt.beta, pt.t_star);
  w.close();
}

inline void write_fee_evolution(const std::filesystem::path& dir,
                                std::span<const FeeEvolutionSeries> runs) {
  CsvWriter w(dir / "fee_evolution.csv", "lambda,t,t_star");
  for (const auto& run : runs) {
    for (std::size_t t = 0; t < run.t_star.size(); ++t) w.row(run.lambda, t, run.t_star[t]);
  }
  w.close();
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
  out << j.dump(2) << '\n';
  out.close();
  if (!out) throw IoError("cannot write " + path.string() + ": " + std::strerror(errno));
}

// JSON has no infinity; non-finite values are written as strings.
inline nlohmann::ordered_json json_number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

// ---- orchestration -------------------------------------------------------

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 2 flagged non-convergence
  nlohmann::ordered_json diagnostics;
};

inline nlohmann::ordered_json equilibrium_diagnostics(const EquilibriumResult& eq) {
  nlohmann::ordered_json d;
  d["converged"] = eq.converged;
  d["iterations"] = eq.iterations;
  d["final_residual"] = eq.residuals.empty() ? 0.0 : eq.residuals.back();
  d["residuals"] = eq.residuals;
  return d;
}

inline RunOutcome run_command(const RunConfig& c, const std::filesystem::path& dir) {
  ensure_directory(dir);
  RunOutcome outcome;
  auto& diag = outcome.diagnostics;
  switch (c.command) {
    case Command::attack_model: {
      const GameParams& g = c.game;
      CsvWriter w(dir / "attack_model.csv",
                  "beta,k,T,success_prob,expected_steps,expected_cost,expected_profit,attack,"
                  "attack_smooth");
      for (double beta : c.attack_model.betas) {
        const RaceParams race{beta, g.confirmations};
        for (double tx : c.attack_model.tx_values) {
          const EconomicContext ctx{g.initial_mean_alpha, g.num_miners, g.cost_per_power,
                                    g.block_reward,       tx,           fee(g.fee, tx)};
          const AttackProfile prof = attack_profile(race, ctx, g.failure_charging);
          const bool hard = attack_decision(race, ctx, g.failure_charging);
          const double smooth =
              beta == 0.0 ? 0.0 : attack_decision_smooth(race, ctx, g.sharpness, g.failure_charging);
          w.row(beta, g.confirmations, tx, prof.success_prob, prof.expected_steps,
                prof.expected_cost, prof.expected_profit, hard ? 1 : 0, smooth);
        }
      }
      w.close();
      break;
    }
    case Command::solve: {
      const EquilibriumResult eq = solve_equilibrium(c.game);
      write_mean_alpha(dir, eq.mean_alpha);
      write_wealth(dir, c.game, eq.wealth);
      write_policy(dir, c.game, eq.policy);
      write_attack(dir, eq.attack_prob);
      diag = equilibrium_diagnostics(eq);
      if (!eq.converged) outcome.exit_code = 2;
      break;
    }
    case Command::simulate: {
      const EquilibriumResult eq = solve_equilibrium(c.game);
      const SimConfig& sc = c.simulation.config;
      const SimReport rep = simulate_game(eq.policy, eq.mean_alpha, c.game, sc);
      const std::vector<double> dp =
          evaluate_policy(c.game, eq.policy, eq.mean_alpha, c.game.reward_mode, sc.attack);
      write_mean_alpha(dir, eq.mean_alpha);
      CsvWriter w(dir / "simulation.csv",
                  "t,mean_wealth,mean_wealth_se,dp_mean_wealth,attack_frequency");
      for (std::size_t t = 0; t < rep.mean_wealth.size(); ++t) {
        const double freq = t < rep.attack_frequency.size() ? rep.attack_frequency[t] : 0.0;
        w.row(t, rep.mean_wealth[t], rep.mean_wealth_se[t], dp[t], freq);
      }
      w.close();
      diag["equilibrium"] = equilibrium_diagnostics(eq);
      diag["overfull_rounds"] = rep.overfull_rounds;
      if (c.simulation.race_trials > 0) {
        const RaceParams race = c.game.race();
        const SimReport r = simulate_race(race, c.simulation.race_trials, sc.seed, sc.threads);
        nlohmann::ordered_json rj;
        rj["trials"] = r.trials;
        rj["success_rate"] = r.success_rate;
        rj["success_se"] = r.success_se;
        rj["success_prob_exact"] = success_probability(race);
        rj["mean_steps"] = r.mean_steps;
        rj["mean_steps_se"] = r.mean_steps_se;
        rj["mean_charged_steps"] = r.mean_charged_steps;
        rj["mean_charged_steps_se"] = r.mean_charged_steps_se;
        rj["expected_steps_exact"] = expected_attack_steps(race, FailureCharging::exact);
        rj["expected_charged_steps"] = expected_attack_steps(race, FailureCharging::full_window);
        diag["race"] = rj;
      }
      if (!eq.converged) outcome.exit_code = 2;
      break;
    }
    case Command::bitcoin_sweep: {
      const auto curve = safe_value_curve(c.snapshot, c.sweep.betas);
      write_safe_value(dir, curve);
      const auto th = threshold_beta(c.snapshot, c.sweep.observed_value, c.sweep.betas);
      diag["observed_value"] = c.sweep.observed_value;
      diag["threshold_beta"] = th ? nlohmann::ordered_json(*th) : nlohmann::ordered_json(nullptr);
      break;
    }
    case Command::fee_evolution: {
      const FeeEvolutionBlock& f = c.fee_evolution;
      const auto runs = fee_evolution(c.snapshot, f.beta, f.lambdas, f.setup);
      write_fee_evolution(dir, runs);
      nlohmann::ordered_json per = nlohmann::ordered_json::array();
      bool all = true;
      for (const auto& r : runs) {
        nlohmann::ordered_json j;
        j["lambda"] = r.lambda;
        j["converged"] = r.converged;
        j["iterations"] = r.iterations;
        j["terminal_t_star"] = r.t_star.empty() ? 0.0 : r.t_star.back();
        per.push_back(j);
        all = all && r.converged;
      }
      const auto best = smallest_securing_lambda(runs, f.target);
      diag["runs"] = per;
      diag["target"] = f.target;
      diag["smallest_securing_lambda"] =
          best ? nlohmann::ordered_json(*best) : nlohmann::ordered_json(nullptr);
      if (!all) outcome.exit_code = 2;
      break;
    }
  }
  nlohmann::ordered_json manifest;
  manifest["config"] = to_json(c);
  manifest["diagnostics"] = diag;
  manifest["status"] = outcome.exit_code == 0 ? "ok" : "not_converged";
  write_json(dir / "run.json", manifest);
  return outcome;
}

}  // namespace powmfg
