#include "opbw/report.hpp"

#include <cstdio>
#include <ostream>

#include "json.hpp"

namespace opbw {

using nlohmann::ordered_json;

const Metric* ExperimentReport::find(const std::string& name) const {
  for (const auto& m : metrics) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

bool ExperimentReport::pass() const { return failures().empty(); }

std::vector<std::string> ExperimentReport::failures() const {
  std::vector<std::string> out;
  for (const auto& m : metrics) {
    if (m.pass && !*m.pass) out.push_back(m.name);
  }
  return out;
}

std::string config_hash(const SimConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config.fingerprint()));
  return buf;
}

std::string ExperimentReport::to_json() const {
  ordered_json j;
  j["experiment"] = experiment;
  ordered_json cfg;
  for (const auto& [k, v] : config.to_map()) cfg[k] = v;
  j["config"] = cfg;
  j["config_hash"] = config_hash(config);
  j["seeds"] = {{"base_seed", config.base_seed}, {"replicas", replicas}, {"rule", seed_rule}};
  ordered_json ms = ordered_json::object();
  for (const auto& m : metrics) {
    ordered_json e;
    e["estimate"] = m.estimate;
    if (m.se) e["se"] = *m.se;
    if (m.ci_low && m.ci_high) e["ci"] = {*m.ci_low, *m.ci_high};
    if (m.statistic) e["statistic"] = *m.statistic;
    if (m.pvalue) e["pvalue"] = *m.pvalue;
    e["n"] = m.n;
    if (m.pass) {
      e["pass"] = *m.pass;
      e["rule"] = m.rule;
    }
    ms[m.name] = e;
  }
  j["metrics"] = ms;
  ordered_json ts = ordered_json::object();
  for (const auto& t : tables) ts[t.name] = {{"columns", t.columns}, {"rows", t.rows}};
  j["tables"] = ts;
  j["warnings"] = warnings;
  j["failures"] = failures();
  j["pass"] = pass();
  return j.dump(2);
}

void write_table_csv(std::ostream& out, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  char buf[32];
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", r[i]);
      out << (i ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace opbw
