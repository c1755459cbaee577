// powmfg <command> --config <path> [--out <dir>] [--format csv]
//
// Exit codes: 0 ok, 1 parse or validation error, 2 solver did not converge,
// 3 I/O error.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "powmfg/powmfg.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mining mean-field game solver with a double-spend adversary"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::string out_dir;
  std::string format;
  for (const char* name : {"attack-model", "solve", "simulate", "bitcoin-sweep", "fee-evolution"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.directory)");
    sub->add_option("--format", format, "output format (csv)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    powmfg::RunConfig config = powmfg::load_config(config_path, powmfg::parse_command(command));
    if (!format.empty() && format != "csv") {
      throw powmfg::ConfigError("--format", "only \"csv\" is supported");
    }
    if (!out_dir.empty()) config.out_dir = out_dir;
    const powmfg::RunOutcome outcome = powmfg::run_command(config, config.out_dir);
    if (outcome.exit_code == 2) {
      std::cerr << "warning: solver did not converge; results flagged in run.json\n";
    }
    return outcome.exit_code;
  } catch (const powmfg::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const powmfg::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const powmfg::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const powmfg::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
