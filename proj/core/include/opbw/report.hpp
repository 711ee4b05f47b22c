#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "opbw/config.hpp"

namespace opbw {

/// One reported number. Asserted metrics carry a verdict and the rule that
/// produced it; descriptive ones leave `pass` empty.
struct Metric {
  std::string name;
  double estimate = 0;
  std::optional<double> se;
  std::optional<double> ci_low, ci_high;
  std::optional<double> statistic;
  std::optional<double> pvalue;
  std::int64_t n = 0;
  std::optional<bool> pass;
  std::string rule;
};

/// Long-format data for plotting: one row per observation.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

/// Everything an experiment run produces. Wall-clock time is deliberately
/// absent so that reports are bit-identical across reruns; it lives in the
/// run manifest.
struct ExperimentReport {
  std::string experiment;
  SimConfig config;
  std::string seed_rule;  // how replica seeds derive from config.base_seed
  std::int64_t replicas = 0;
  std::vector<Metric> metrics;
  std::vector<Table> tables;
  std::vector<std::string> warnings;

  Metric& add(Metric m) { return metrics.emplace_back(std::move(m)); }
  const Metric* find(const std::string& name) const;
  bool pass() const;  // every asserted metric passes
  std::vector<std::string> failures() const;

  std::string to_json() const;  // pretty-printed, stable key order
};

void write_table_csv(std::ostream& out, const Table& t);
/// Hex of the config fingerprint, used to tie files to their run.
std::string config_hash(const SimConfig& config);

}  // namespace opbw
