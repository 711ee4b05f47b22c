#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "opbw/env.hpp"
#include "opbw/sparse_grid.hpp"
#include "opbw/stats.hpp"

namespace opbw {

/// Longest-open-path lengths ℓ over the whole box, computed by one backward
/// sweep from n = H down to 0. Values are capped at H − n; a capped value
/// means "an open path reaches the top layer", never "exactly H − n".
/// Neighbours outside the box count as closed, so values are exact only on
/// sites whose forward cone up to H stays inside the box.
class BackboneField {
 public:
  explicit BackboneField(const Environment& env);

  const Environment& env() const { return *env_; }
  std::int32_t horizon() const { return horizon_; }

  /// ℓ capped at H − n; −1 on closed sites.
  std::int32_t ell(const Site& s) const;
  bool saturated(const Site& s) const { return ell(s) == horizon_ - s.n; }
  bool xi(const Site& s) const { return ell(s) >= 0 && saturated(s); }
  /// min(ℓ, k) with saturation read as +infinity.
  std::int32_t ell_trunc(const Site& s, std::int32_t k) const {
    const std::int32_t v = ell(s);
    if (v >= 0 && v == horizon_ - s.n) return k;
    return v < k ? v : k;
  }

 private:
  const Environment* env_;
  std::int32_t horizon_;
  std::vector<std::int16_t> values_;
};

/// Same surrogate as BackboneField (an open path reaching layer H counts as
/// infinite), evaluated on demand by memoised depth-first search. Only the
/// sites a query actually depends on are visited, and exploration stops as
/// soon as a saturated neighbour is found. Not thread-safe; one per worker.
class LazyBackbone {
 public:
  static constexpr std::int32_t kSaturated = std::numeric_limits<std::int32_t>::max();

  explicit LazyBackbone(std::shared_ptr<const Environment> env);
  LazyBackbone(std::shared_ptr<const Environment> env, std::int32_t horizon);

  const Environment& env() const { return *env_; }
  std::int32_t horizon() const { return horizon_; }

  /// ℓ, or kSaturated if an open path from s reaches layer H.
  std::int32_t raw(const Site& s);
  std::int32_t ell(const Site& s) {
    const std::int32_t v = raw(s);
    return v == kSaturated ? horizon_ - s.n : v;
  }
  bool xi(const Site& s) { return raw(s) == kSaturated; }
  std::int32_t ell_trunc(const Site& s, std::int32_t k) {
    const std::int32_t v = raw(s);
    return v < k ? v : k;
  }

  std::size_t memo_pages() const { return memo_.page_count(); }
  void clear() { memo_.clear(); }
  /// Releases memoised values below layer n; they are recomputed if queried.
  void forget_below(std::int32_t n) { memo_.forget_below(n); }

 private:
  struct Frame {
    Site s;
    std::int32_t best;
    std::uint8_t next;
    std::uint8_t flip;
  };
  static constexpr std::int32_t kUnknown = std::numeric_limits<std::int32_t>::min();

  std::int32_t leaf_value(const Site& s);

  std::shared_ptr<const Environment> env_;
  std::int32_t horizon_;
  detail::SparseGrid memo_;
  std::vector<Frame> stack_;
  std::vector<std::uint8_t> order_[2];  // descent orders, mirror images of each other
};

// Contact process ----------------------------------------------------------

struct ContactState {
  std::int32_t n = 0;
  std::vector<Coord> occupied;  // sorted, unique
};

/// One step of η: occupied at n + 1 are the open sites with an occupied
/// neighbour at n.
ContactState contact_step(const ContactState& state, const Environment& env);

/// τ^A = inf{n : η_n^A = ∅} with the start layer forced to 1_A, or nullopt
/// if η survives through layer cap − 1 (i.e. τ ≥ cap).
std::optional<std::int32_t> survival_time(const Environment& env, const std::vector<Coord>& A, std::int32_t cap);

/// True iff there is a directed open path from `from` to `to`, every site
/// including both endpoints open. Sites outside the box count as closed.
bool reachable(const Environment& env, const Site& from, const Site& to);

/// τ⁰ for the origin computed from the lazy ℓ̂ (τ⁰ = 2 + max over the first
/// layer), nullopt if τ⁰ ≥ cap. Agrees with survival_time.
std::optional<std::int32_t> origin_survival_time(std::shared_ptr<const Environment> env, std::int32_t cap);

// Estimators ---------------------------------------------------------------

struct FrequencyRow {
  double key = 0;  // n or p
  std::int64_t count = 0;
  double frequency = 0;
  double ci_low = 0;
  double ci_high = 0;
};

void write_frequency_csv(std::ostream& out, const std::vector<FrequencyRow>& rows, const char* key_name);

struct HeightTail {
  std::int64_t samples = 0;
  std::int64_t finite = 0;
  std::int32_t cap = 0;
  std::vector<FrequencyRow> rows;  // P(n <= τ⁰ < cap) for n = 0, 1, ...
  stats::TailFitResult fit;
};

/// Monte Carlo over fresh environments (replicas 0..samples-1) of the height
/// of the origin's cluster; cap = config horizon. The fit uses rows with
/// count ≥ 30 and n in [fit_lo, fit_hi]. Throws StatisticalError with fewer
/// than 50 finite samples.
HeightTail height_tail(const SimConfig& config, std::int64_t samples, int jobs = 1, std::int32_t fit_lo = 0,
                       std::int32_t fit_hi = std::numeric_limits<std::int32_t>::max());

/// Frequency with which the origin's process (start forced open) survives to
/// layer H, per p. Replica i uses the same seed for every p, so the
/// frequencies are monotone in p sample by sample.
std::vector<FrequencyRow> estimate_pc(const SimConfig& config, const std::vector<double>& p_grid,
                                      std::int64_t samples, int jobs = 1);

}  // namespace opbw
