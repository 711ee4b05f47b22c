#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "opbw/counter_rng.hpp"
#include "opbw/types.hpp"

namespace opbw {

/// Law of the carrying capacities K(x,n). Constant 1 reproduces the base model.
class CapacityLaw {
 public:
  enum class Kind { kConstant, kUniform, kGeometric, kTable };

  CapacityLaw() = default;
  static CapacityLaw constant(std::int32_t value);
  static CapacityLaw uniform(std::int32_t lo, std::int32_t hi);
  /// Geometric on {1, 2, ...} with success probability q.
  static CapacityLaw geometric(double q);
  static CapacityLaw table(std::vector<std::pair<std::int32_t, double>> weights);

  /// Parses "const:V", "uniform:A:B", "geometric:Q" or "table:V=W,V=W,...".
  static CapacityLaw parse(const std::string& spec);
  std::string to_string() const;

  Kind kind() const { return kind_; }
  bool is_constant() const { return kind_ == Kind::kConstant; }
  std::int32_t sample(rng::CounterStream& stream) const;

 private:
  Kind kind_ = Kind::kConstant;
  std::int32_t a_ = 1;
  std::int32_t b_ = 1;
  double q_ = 0.5;
  std::vector<std::pair<std::int32_t, double>> table_;  // cumulative weights
};

struct SimConfig {
  int d = 1;
  double p = 0.8;
  /// Neighbourhood offsets u, applied as (x + u, n + 1). Empty means the
  /// default {u : |u|_inf <= 1}.
  std::vector<Coord> offsets;
  /// Time horizon H (number of layers above the start layer). 0 = steps + slack.
  std::int32_t horizon = 0;
  /// Spatial half-width L per axis. 0 = smallest value satisfying cone sufficiency.
  std::int32_t half_width = 0;
  std::uint64_t base_seed = 1;
  CapacityLaw capacity;
  /// Intended walk length N.
  std::int32_t steps = 100;
  /// Lookahead reserved above the last trusted walk step.
  std::int32_t slack = 40;

  /// Max-norm radius of the neighbourhood.
  std::int32_t radius() const;
  std::size_t neighborhood_size() const { return offsets.size(); }

  /// Fills defaulted fields (offsets, horizon, half-width) and validates.
  SimConfig resolved() const;
  /// Throws ConfigError naming the first violated invariant.
  void validate() const;

  std::map<std::string, std::string> to_map() const;
  std::uint64_t fingerprint() const;
};

/// All u with |u|_inf <= 1, in lexicographic order.
std::vector<Coord> default_offsets(int d);
/// The two-neighbour d = 1 convention {-1, +1}.
std::vector<Coord> pm1_offsets();

/// "default", "pm1", or an explicit list "u;u;..." with comma-separated coordinates.
std::vector<Coord> parse_offsets(const std::string& spec, int d);
std::string offsets_to_string(const std::vector<Coord>& offsets, int d);

/// Reads key = value lines ('#' starts a comment). Unknown keys are an error.
/// `keys`, if given, receives every key the file sets.
SimConfig parse_config(std::istream& in, std::set<std::string>* keys = nullptr);
SimConfig load_config(const std::string& path, std::set<std::string>* keys = nullptr);
/// Applies one key = value setting (shared by the file reader and CLI flags).
void apply_setting(SimConfig& cfg, const std::string& key, const std::string& value);

}  // namespace opbw
