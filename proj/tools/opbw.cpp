#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "opbw/config.hpp"
#include "opbw/env.hpp"
#include "opbw/experiments.hpp"
#include "opbw/parallel.hpp"
#include "opbw/report.hpp"
#include "opbw/walk.hpp"

#ifndef OPBW_BUILD_FINGERPRINT
#define OPBW_BUILD_FINGERPRINT "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Exit codes.
constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;
constexpr int kResource = 3;
constexpr int kRuntime = 4;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  std::string out = "opbw-out";
  std::optional<double> p;
  std::optional<int> d;
  std::optional<std::int32_t> horizon;
  std::optional<std::int32_t> steps;
  std::optional<std::int64_t> replicas;
  std::optional<std::string> capacity_law;
  std::optional<std::string> neighborhood;
  std::optional<double> budget;  // seconds
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config_path, "key = value config file");
  app->add_option("--seed", f.seed, "base seed (u64)");
  app->add_option("--jobs", f.jobs, "worker threads (0 = hardware)");
  app->add_option("--out", f.out, "output directory (OPBW_OUT overrides)");
  app->add_option("--p", f.p, "site openness probability");
  app->add_option("--d", f.d, "spatial dimension");
  app->add_option("--horizon", f.horizon, "time horizon H (0 = steps + slack)");
  app->add_option("--steps", f.steps, "walk length N");
  app->add_option("--replicas", f.replicas, "replicas / samples");
  app->add_option("--capacity-law", f.capacity_law, "const:V | uniform:A:B | geometric:Q | table:V=W,...");
  app->add_option("--neighborhood", f.neighborhood, "default | pm1 | u;u;... offset list");
  app->add_option("--budget", f.budget, "wall-clock budget in seconds; exceeding it is an error");
}

struct Resolved {
  opbw::SimConfig config;
  std::set<std::string> overridden;
};

Resolved resolve(const CommonFlags& f) {
  Resolved r;
  if (!f.config_path.empty()) r.config = opbw::load_config(f.config_path, &r.overridden);
  auto set = [&](const char* key, const std::string& v) {
    opbw::apply_setting(r.config, key, v);
    r.overridden.insert(key);
  };
  if (f.d) set("d", std::to_string(*f.d));
  if (f.p) {
    std::ostringstream s;
    s.precision(17);
    s << *f.p;
    set("p", s.str());
  }
  if (f.horizon) set("horizon", std::to_string(*f.horizon));
  if (f.steps) set("steps", std::to_string(*f.steps));
  if (f.seed) set("seed", std::to_string(*f.seed));
  if (f.capacity_law) set("capacity_law", *f.capacity_law);
  if (f.neighborhood) set("neighborhood", *f.neighborhood);
  return r;
}

std::string out_dir(const CommonFlags& f) {
  if (const char* env = std::getenv("OPBW_OUT"); env && *env) return env;
  return f.out;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

/// Identity of a run: everything that determines its results. The hash
/// ignores the output directory, the job count and the clock.
struct Manifest {
  std::string subcommand;
  std::string config_path;
  opbw::SimConfig config;
  std::string extra;  // experiment name or mode
  std::optional<std::int64_t> replicas;
  std::string dir;
  int jobs = 0;

  std::string hash() const {
    std::uint64_t h = opbw::rng::combine(config.fingerprint(), 0x6d616e);
    for (char c : subcommand + "|" + extra + "|" + (replicas ? std::to_string(*replicas) : "-")) {
      h = opbw::rng::combine(h, static_cast<unsigned char>(c));
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  ordered_json json() const {
    ordered_json j;
    j["manifest_hash"] = hash();
    j["subcommand"] = subcommand;
    if (!extra.empty()) j[subcommand == "verify" ? "experiment" : "mode"] = extra;
    j["config_path"] = config_path;
    ordered_json cfg;
    for (const auto& [k, v] : config.to_map()) cfg[k] = v;
    j["config"] = cfg;
    j["config_hash"] = opbw::config_hash(config);
    j["seeds"] = {{"base_seed", config.base_seed}, {"replicas", replicas ? ordered_json(*replicas) : ordered_json()}};
    j["output_dir"] = dir;
    j["jobs"] = opbw::resolve_jobs(jobs);
    j["build"] = OPBW_BUILD_FINGERPRINT;
    return j;
  }
};

class Run {
 public:
  explicit Run(Manifest m) : m_(std::move(m)), start_(std::chrono::steady_clock::now()) {
    fs::create_directories(m_.dir);
    started_ = utc_now();
    write_manifest(false);
  }

  const Manifest& manifest() const { return m_; }
  fs::path path(const std::string& name) const { return fs::path(m_.dir) / name; }

  std::ofstream open(const std::string& name) const {
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw opbw::Error("cannot write " + path(name).string());
    return out;
  }

  std::ofstream open_csv(const std::string& name) const {
    auto out = open(name);
    out << "# manifest " << m_.hash() << '\n';
    return out;
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  void finish(int exit_code) { write_manifest(true, exit_code); }

 private:
  void write_manifest(bool done, int exit_code = 0) {
    ordered_json j = m_.json();
    j["wall_clock"] = {{"started", started_}};
    if (done) {
      j["wall_clock"]["finished"] = utc_now();
      j["wall_clock"]["seconds"] = elapsed();
      j["exit_code"] = exit_code;
    }
    std::ofstream out(path("manifest.json"));
    out << j.dump(2) << '\n';
  }

  Manifest m_;
  std::chrono::steady_clock::time_point start_;
  std::string started_;
};

void check_budget(const Run& run, const CommonFlags& f) {
  if (f.budget && run.elapsed() > *f.budget) {
    throw opbw::ResourceError("budget exceeded: " + std::to_string(run.elapsed()) + " s > " +
                              std::to_string(*f.budget) + " s");
  }
}

// env ----------------------------------------------------------------------------

int cmd_env(const CommonFlags& f, const std::string& load, std::uint64_t replica) {
  auto r = resolve(f);
  Manifest m{"env", f.config_path, r.config.resolved(), load.empty() ? "generate" : "inspect", std::nullopt,
             out_dir(f), f.jobs};
  std::optional<opbw::Environment> env;
  if (load.empty()) {
    env.emplace(opbw::generate_environment(m.config, replica));
  } else {
    std::ifstream in(load, std::ios::binary);
    if (!in) throw opbw::ConfigError("cannot open dump '" + load + "'");
    env.emplace(opbw::Environment::read_dump(in));
    m.config = env->config();
  }
  Run run(m);
  if (load.empty()) {
    auto out = run.open("env.bin");
    env->write_dump(out);
  }
  ordered_json j;
  j["manifest_hash"] = m.hash();
  j["source"] = load.empty() ? "generated" : load;
  if (load.empty()) j["replica"] = replica;
  j["d"] = env->dim();
  // A dump stores ω only, so p is unknown for a loaded environment.
  if (load.empty()) j["p"] = env->config().p;
  j["half_width"] = env->half_width();
  j["horizon"] = env->horizon();
  j["sites"] = env->box_site_count();
  j["open_fraction"] = env->open_fraction();
  run.open("env_summary.json") << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
  check_budget(run, f);
  run.finish(kPass);
  return kPass;
}

// walk --------------------------------------------------------------------------

int cmd_walk(const CommonFlags& f, const std::string& mode) {
  auto r = resolve(f);
  const std::int64_t reps = f.replicas.value_or(1);
  if (reps <= 0) throw opbw::ConfigError("replicas must be positive");
  if (mode != "coupled" && mode != "direct") throw opbw::ConfigError("walk mode must be coupled or direct");
  Manifest m{"walk", f.config_path, r.config.resolved(), mode, reps, out_dir(f), f.jobs};
  Run run(m);
  const opbw::SimConfig& cfg = m.config;
  struct One {
    opbw::WalkSummaryRow row;
    opbw::RegenerationRecord regen;
    bool truncated = false;
  };
  const auto walks = opbw::parallel_map(static_cast<std::size_t>(reps), f.jobs, [&](std::size_t i) {
    auto cs = opbw::sample_conditioned_start(cfg, i);
    One o;
    o.row.replica = i;
    if (mode == "coupled") {
      auto w = opbw::coupled_walk(*cs.backbone, opbw::Site{}, cfg.steps);
      o.row.steps = w.path.steps();
      o.row.x_n = w.path.positions.back();
      o.row.regenerations = static_cast<std::int64_t>(w.regen.count());
      o.regen = std::move(w.regen);
      o.truncated = w.path.truncated;
    } else {
      const auto w = opbw::direct_walk(*cs.backbone, opbw::Site{}, cfg.steps, i);
      o.row.steps = w.steps();
      o.row.x_n = w.positions.back();
      o.truncated = w.truncated;
    }
    return o;
  });
  std::vector<opbw::WalkSummaryRow> rows;
  std::int64_t truncated = 0;
  for (std::size_t i = 0; i < walks.size(); ++i) {
    rows.push_back(walks[i].row);
    truncated += walks[i].truncated;
    if (mode == "coupled") {
      auto out = run.open_csv("regenerations_" + std::to_string(i) + ".csv");
      opbw::write_regeneration_csv(out, walks[i].regen, cfg.d);
    }
  }
  {
    auto out = run.open_csv("walks.csv");
    opbw::write_walk_summary_csv(out, rows, cfg.d);
  }
  ordered_json j;
  j["manifest_hash"] = m.hash();
  j["mode"] = mode;
  j["replicas"] = reps;
  j["steps"] = cfg.steps;
  j["truncated"] = truncated;
  std::int64_t regens = 0;
  for (const auto& w : rows) regens += w.regenerations;
  j["regenerations"] = regens;
  run.open("walk_summary.json") << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
  check_budget(run, f);
  run.finish(kPass);
  return kPass;
}

// verify ---------------------------------------------------------------------------

int cmd_verify(const CommonFlags& f, const std::string& experiment) {
  if (!opbw::is_experiment(experiment)) {
    std::string names;
    for (const auto& n : opbw::experiment_names()) names += (names.empty() ? "" : ", ") + n;
    throw CLI::ValidationError("--experiment", "unknown experiment '" + experiment + "' (one of: " + names + ")");
  }
  auto r = resolve(f);
  opbw::ExperimentOptions opt;
  opt.config = r.config;
  opt.overridden = r.overridden;
  opt.replicas = f.replicas;
  opt.jobs = f.jobs;
  Manifest m{"verify", f.config_path, r.config.resolved(), experiment, f.replicas, out_dir(f), f.jobs};
  Run run(m);
  const auto report = opbw::run_experiment(experiment, opt);
  auto j = ordered_json::parse(report.to_json());
  j["manifest_hash"] = m.hash();
  run.open("report.json") << j.dump(2) << '\n';
  for (const auto& t : report.tables) {
    auto out = run.open_csv(t.name + ".csv");
    opbw::write_table_csv(out, t);
  }
  const int code = report.pass() ? kPass : kFail;
  for (const auto& metric : report.metrics) {
    if (!metric.pass) continue;
    std::cout << (*metric.pass ? "PASS " : "FAIL ") << metric.name << " = " << metric.estimate << '\n';
  }
  // Machine-parsable failure list.
  std::cout << "failures:";
  for (const auto& name : report.failures()) std::cout << ' ' << name;
  std::cout << '\n' << (code == kPass ? "PASS " : "FAIL ") << experiment << '\n';
  check_budget(run, f);
  run.finish(code);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random walks on the backbone of oriented percolation clusters"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* env = app.add_subcommand("env", "generate, dump or inspect an environment");
  add_common(env, flags);
  std::string load;
  std::uint64_t replica = 0;
  env->add_option("--load", load, "inspect an existing dump instead of generating");
  env->add_option("--replica", replica, "replica index of the generated environment");

  auto* walk = app.add_subcommand("walk", "single-walk runs with regeneration CSVs");
  add_common(walk, flags);
  std::string mode = "coupled";
  walk->add_option("--mode", mode, "coupled (m_infinity path with regenerations) or direct")
      ->check(CLI::IsMember({"coupled", "direct"}));

  auto* verify = app.add_subcommand("verify", "run a named acceptance experiment");
  add_common(verify, flags);
  std::string experiment;
  verify->add_option("--experiment", experiment, "experiment name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kPass : kUsage;
  }

  try {
    if (*env) return cmd_env(flags, load, replica);
    if (*walk) return cmd_walk(flags, mode);
    return cmd_verify(flags, experiment);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "opbw: " << e.what() << '\n';
    return kUsage;
  } catch (const opbw::ConfigError& e) {
    std::cerr << "opbw: config error: " << e.what() << '\n';
    return kUsage;
  } catch (const opbw::ResourceError& e) {
    std::cerr << "opbw: resource error: " << e.what() << '\n';
    return kResource;
  } catch (const std::exception& e) {
    std::cerr << "opbw: " << e.what() << '\n';
    return kRuntime;
  }
}
