#pragma once

#include "config.hpp"

#include "wdt/fields.hpp"
#include "wdt/geometry.hpp"
#include "wdt/reconstruct.hpp"
#include "wdt/transform.hpp"
#include "wdt/weights.hpp"

namespace wdt::cli {

/// Everything a subcommand needs, built and validated from a Config.
struct Experiment {
  Domain dom;
  GridPtr grid;
  CurveGenerator gen;
  Weight weight;
  FanPtr fan;
  TraceConfig trace;
  int threads = 1;
};

/// Throws ConfigError on invalid or inconsistent values.
Experiment build_experiment(const Config& cfg);

/// The input pair described by the [field] section.
Pair build_field(const Config& cfg, const Experiment& ex);

/// The perturbation family selected by solver.perturb_target.
PerturbationFamily build_perturbation(const Config& cfg, const Experiment& ex);

}  // namespace wdt::cli
