#pragma once

#include "config.hpp"
#include "experiment.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace wdt::cli {

struct RunContext {
  const Config& cfg;
  const Experiment& ex;
  std::string out_dir;
  /// Files written by the command, relative to out_dir.
  std::vector<std::string> outputs;

  void write(const std::string& name, const std::string& contents);
};

using Command = nlohmann::json (*)(RunContext&);

/// Looks up a subcommand; nullptr when unknown.
Command find_command(const std::string& name);
const std::vector<std::string>& command_names();

/// Runs the quick self-checks; returns the number of failures.
int run_selftest(bool verbose);

}  // namespace wdt::cli
