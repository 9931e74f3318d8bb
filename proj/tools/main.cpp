#include "commands.hpp"
#include "config.hpp"
#include "experiment.hpp"

#include "wdt/errors.hpp"
#include "wdt/io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <Eigen/Core>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

#ifndef WDT_VERSION
#define WDT_VERSION "0.0.0"
#endif

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

std::string key_listing() {
  std::ostringstream os;
  os << "Config keys (section.key = default):\n";
  for (const auto& k : wdt::cli::schema())
    os << "  " << k.key << " = " << (k.default_value.empty() ? "\"\"" : k.default_value) << "\n      "
       << k.help << '\n';
  os << "\nExit codes: 0 success, 2 config error, 3 numerical failure.";
  return os.str();
}

void load_config(wdt::cli::Config& cfg, const std::string& path) {
  const std::string text = wdt::io::read_file(path);
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    nlohmann::json m;
    try {
      m = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw wdt::cli::ConfigError(path + ": " + e.what());
    }
    if (!m.contains("config") || !m["config"].is_object())
      throw wdt::cli::ConfigError(path + ": manifest has no config object");
    for (const auto& [k, v] : m["config"].items()) cfg.set(k, v.get<std::string>());
    return;
  }
  cfg.load_ini(text, path);
}

nlohmann::json versions() {
  return {{"wdt", WDT_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                        "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"compiler", __VERSION__}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted Doppler transform experiments on a disk"};
  app.footer(key_listing());
  std::string subcommand, config_path;
  std::vector<std::string> overrides;
  bool verbose = false;
  app.add_option("subcommand", subcommand, "one of: simulate, decompose, check-elliptic, "
                                           "check-simple, symbol, nullspace, reconstruct, "
                                           "perturb, selftest")
      ->required();
  app.add_option("-c,--config", config_path, "INI config file, or a manifest.json to re-run");
  app.add_option("-s,--set", overrides, "override, section.key=value (repeatable)");
  app.add_flag("-v,--verbose", verbose, "print every selftest check");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  const auto start = std::chrono::steady_clock::now();
  wdt::cli::Config cfg;
  nlohmann::json summary;
  std::vector<std::string> outputs;
  int exit_code = 0;
  std::string status = "ok";
  std::string out_dir;
  try {
    const bool known = subcommand == "selftest" || wdt::cli::find_command(subcommand);
    if (!known) throw wdt::cli::ConfigError("unknown subcommand '" + subcommand + "'");
    if (!config_path.empty()) load_config(cfg, config_path);
    for (const std::string& o : overrides) cfg.set(o);
    out_dir = cfg.str("output.dir");
    if (out_dir.empty()) throw wdt::cli::ConfigError("output.dir must not be empty");
    std::filesystem::create_directories(out_dir);

    if (subcommand == "selftest") {
      const int failures = wdt::cli::run_selftest(verbose);
      summary = {{"failures", failures}};
      std::cout << (failures == 0 ? "selftest passed\n" : "selftest failed\n");
      if (failures > 0) {
        exit_code = 1;
        status = "selftest failures";
      }
    } else {
      const wdt::cli::Experiment ex = wdt::cli::build_experiment(cfg);
      wdt::cli::RunContext ctx{cfg, ex, out_dir, {}};
      try {
        summary = wdt::cli::find_command(subcommand)(ctx);
      } catch (...) {
        outputs = ctx.outputs;
        throw;
      }
      outputs = ctx.outputs;
      std::cout << summary.dump(2) << '\n';
    }
  } catch (const wdt::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    exit_code = kConfigError;
    status = e.what();
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    exit_code = kConfigError;
    status = e.what();
  } catch (const wdt::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    exit_code = kNumericalError;
    status = e.what();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    exit_code = kConfigError;
    status = e.what();
  }

  if (!out_dir.empty() && std::filesystem::is_directory(out_dir)) {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    nlohmann::json manifest = {{"subcommand", subcommand},
                               {"config", cfg.values()},
                               {"config_hash", cfg.hash()},
                               {"versions", versions()},
                               {"timings", {{"total_seconds", seconds}}},
                               {"outputs", outputs},
                               {"summary", summary},
                               {"status", status},
                               {"exit_code", exit_code}};
    try {
      wdt::io::write_file(out_dir + "/config.ini", cfg.to_ini());
      wdt::io::write_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      if (exit_code == 0) exit_code = kConfigError;
    }
  }
  return exit_code;
}
