#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "opbw/config.hpp"
#include "opbw/report.hpp"

namespace opbw {

/// Inputs of a named experiment. Every experiment has its own defaults for
/// p, d, steps and replicas; a value listed in `overridden` (config keys such
/// as "p", "d", "steps", "horizon", "neighborhood") wins over the default.
struct ExperimentOptions {
  SimConfig config;
  std::set<std::string> overridden;
  std::optional<std::int64_t> replicas;
  int jobs = 0;
};

/// lln, annealed-clt, quenched-clt, tails, sigma-scan, tv-decay, annulus,
/// d1-diag, height-tail, pc-scan, regen-iid.
const std::vector<std::string>& experiment_names();
bool is_experiment(const std::string& name);

/// Runs one experiment. The report is a pure function of (name, options
/// apart from jobs). Throws ConfigError for unknown names.
ExperimentReport run_experiment(const std::string& name, const ExperimentOptions& options);

}  // namespace opbw
