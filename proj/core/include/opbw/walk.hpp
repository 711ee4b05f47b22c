#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "opbw/env.hpp"
#include "opbw/perc.hpp"

namespace opbw {

// Backbones (BackboneField, LazyBackbone) expose env(), horizon(), xi(s),
// ell(s) and ell_trunc(s, t); everything below is written against that.

struct WalkPath {
  Site start;
  std::vector<Coord> positions;  // X_0 .. X_N
  std::uint64_t walker_id = 0;   // direct mode only
  bool truncated = false;
  std::int32_t steps() const { return static_cast<std::int32_t>(positions.size()) - 1; }
};

struct RegenerationRecord {
  std::vector<std::int32_t> times;  // T_0 = 0 < T_1 < ...
  std::vector<Coord> positions;     // X_{T_i}

  std::size_t count() const { return times.empty() ? 0 : times.size() - 1; }
  std::int32_t tau(std::size_t i) const { return times[i] - times[i - 1]; }  // i >= 1
  Coord y(std::size_t i) const { return positions[i] - positions[i - 1]; }
};

/// γ_k(0..k) for one starting point. Sites below `base` have been dropped
/// (they are fixed); `fixed` is the largest j with γ_k(j) on the backbone.
struct GammaState {
  std::int32_t k = 0;
  std::int32_t fixed = 0;
  std::int32_t base = 0;
  std::vector<Site> path;

  const Site& at(std::int32_t j) const { return path[static_cast<std::size_t>(j - base)]; }
  const Site& end() const { return path.back(); }
};

/// m_t(s): first element of ω̃(s) maximising ℓ_t over U(s); t = −1 means the
/// permutation's first element.
template <class BB>
Site m_step(BB& bb, const Site& s, std::int32_t t, int field) {
  const Environment& env = bb.env();
  if (t < 0) return env.successor(s, static_cast<std::size_t>(env.first_in_permutation(s, field, [](int) { return true; })));
  const auto& offsets = env.config().offsets;
  std::int32_t vals[kMaxNeighbors];
  std::int32_t best = -1;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    vals[i] = bb.ell_trunc(env.successor(s, i), t);
    if (vals[i] > best) best = vals[i];
  }
  const int idx = env.first_in_permutation(s, field, [&](int i) { return vals[i] == best; });
  return env.successor(s, static_cast<std::size_t>(idx));
}

/// m_∞(s): first element of ω̃(s) on the backbone.
template <class BB>
Site m_infinity(BB& bb, const Site& s, int field) {
  const Environment& env = bb.env();
  const int idx = env.first_in_permutation(s, field, [&](int i) { return bb.xi(env.successor(s, static_cast<std::size_t>(i))); });
  if (idx < 0) {
    throw InvariantViolation("walk left the backbone at " + to_string(s, env.dim()) + ": no backbone successor");
  }
  return env.successor(s, static_cast<std::size_t>(idx));
}

/// γ_k built directly from the definition.
template <class BB>
std::vector<Site> gamma_from_scratch(BB& bb, const Site& start, std::int32_t k, int field = 0) {
  std::vector<Site> path{start};
  path.reserve(static_cast<std::size_t>(k) + 1);
  for (std::int32_t j = 0; j < k; ++j) path.push_back(m_step(bb, path.back(), k - j - 2, field));
  return path;
}

template <class BB>
GammaState gamma_init(BB& bb, const Site& start) {
  if (!bb.xi(start)) throw QueryError("gamma: start " + to_string(start, bb.env().dim()) + " is not on the backbone");
  GammaState st;
  st.path.push_back(start);
  return st;
}

/// γ_k → γ_{k+1}. An open endpoint is extended by its first permutation
/// element; otherwise the suffix after the last backbone point is rebuilt.
/// Returns true if k + 1 is a regeneration time (γ_{k+1}(k+1) on the backbone).
template <class BB>
bool gamma_extend(GammaState& st, BB& bb, int field = 0) {
  const Environment& env = bb.env();
  const std::int32_t k1 = st.k + 1;
  if (env.omega_unchecked(st.end())) {
    st.path.push_back(m_step(bb, st.end(), -1, field));
  } else {
    st.path.resize(static_cast<std::size_t>(st.fixed - st.base) + 1);
    for (std::int32_t j = st.fixed; j < k1; ++j) st.path.push_back(m_step(bb, st.path.back(), k1 - j - 2, field));
  }
  st.k = k1;
  // Backbone points of γ form a prefix, so scanning stops at the first miss.
  while (st.fixed < st.k && bb.xi(st.at(st.fixed + 1))) ++st.fixed;
  return st.fixed == st.k;
}

/// Drops path entries before `j` (which must not exceed `fixed`).
inline void gamma_forget_before(GammaState& st, std::int32_t j) {
  if (j <= st.base) return;
  if (j > st.fixed) throw InvariantViolation("gamma: cannot forget unfixed points");
  st.path.erase(st.path.begin(), st.path.begin() + (j - st.base));
  st.base = j;
}

/// Streams the regeneration times of one γ construction.
template <class BB>
class RegenerationTracker {
 public:
  RegenerationTracker(BB& bb, const Site& start, int field = 0)
      : bb_(&bb), field_(field), state_(gamma_init(bb, start)) {
    record_.times.push_back(0);
    record_.positions.push_back(start.x);
  }

  std::int32_t depth() const { return state_.k; }
  const GammaState& state() const { return state_; }
  const RegenerationRecord& record() const { return record_; }
  std::int32_t last_regeneration() const { return record_.times.back(); }

  /// Advances one step; true if the new depth is a regeneration time.
  bool advance() {
    const bool regen = gamma_extend(state_, *bb_, field_);
    if (regen) {
      record_.times.push_back(state_.k);
      record_.positions.push_back(state_.end().x);
      if (state_.k - state_.base > kCompactEvery) gamma_forget_before(state_, state_.k);
    }
    return regen;
  }

  /// Advances until the next regeneration, or until depth reaches max_depth.
  std::optional<std::int32_t> next_regeneration(std::int32_t max_depth) {
    while (state_.k < max_depth) {
      if (advance()) return state_.k;
    }
    return std::nullopt;
  }

 private:
  static constexpr std::int32_t kCompactEvery = 1 << 16;
  BB* bb_;
  int field_;
  GammaState state_;
  RegenerationRecord record_;
};

struct CoupledWalk {
  WalkPath path;
  RegenerationRecord regen;
};

/// X = γ_∞ up to N steps (each step is m_∞) together with the regeneration
/// times T_j <= N of the γ construction. At every T_j the γ endpoint is
/// checked against X_{T_j}. N is clamped to the horizon; `path.truncated`
/// reports it.
template <class BB>
CoupledWalk coupled_walk(BB& bb, const Site& start, std::int32_t N, int field = 0) {
  CoupledWalk out;
  out.path.start = start;
  const std::int32_t limit = bb.horizon() - start.n;
  if (N > limit) {
    out.path.truncated = true;
    N = limit;
  }
  Site s = start;
  out.path.positions.reserve(static_cast<std::size_t>(N) + 1);
  out.path.positions.push_back(s.x);
  if (!bb.xi(start)) throw QueryError("coupled_walk: start is not on the backbone");
  for (std::int32_t j = 0; j < N; ++j) {
    s = m_infinity(bb, s, field);
    out.path.positions.push_back(s.x);
  }
  RegenerationTracker<BB> tracker(bb, start, field);
  while (tracker.next_regeneration(N)) {
    const std::int32_t t = tracker.depth();
    if (!(tracker.state().end().x == out.path.positions[static_cast<std::size_t>(t)])) {
      throw InvariantViolation("coupled_walk: γ at regeneration time " + std::to_string(t) +
                               " disagrees with the m_infinity path");
    }
  }
  out.regen = tracker.record();
  return out;
}

/// One step of the direct walk: uniform over backbone successors, or
/// proportional to K(y, n + 1) when capacities are configured.
template <class BB>
Coord direct_step(BB& bb, const Site& s, std::uint64_t walker_key) {
  const Environment& env = bb.env();
  const std::size_t m = env.config().offsets.size();
  std::uint8_t cand[kMaxNeighbors];
  std::int64_t weight[kMaxNeighbors];
  std::size_t c = 0;
  std::int64_t total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const Site y = env.successor(s, i);
    if (!bb.xi(y)) continue;
    cand[c] = static_cast<std::uint8_t>(i);
    weight[c] = env.constant_capacity() ? 1 : env.capacity(y);
    total += weight[c];
    ++c;
  }
  if (c == 0) throw InvariantViolation("direct_step: no backbone successor at " + to_string(s, env.dim()));
  rng::CounterStream stream(rng::combine(rng::site_key(env.seed(), rng::Tag::kWalk, s, env.dim()), walker_key));
  auto r = static_cast<std::int64_t>(stream.below(static_cast<std::uint64_t>(total)));
  std::size_t pick = 0;
  while (r >= weight[pick]) r -= weight[pick++];
  return env.successor(s, cand[pick]).x;
}

template <class BB>
WalkPath direct_walk(BB& bb, const Site& start, std::int32_t N, std::uint64_t walker_id) {
  WalkPath w;
  w.start = start;
  w.walker_id = walker_id;
  const std::int32_t limit = bb.horizon() - start.n;
  if (N > limit) {
    w.truncated = true;
    N = limit;
  }
  if (!bb.xi(start)) throw QueryError("direct_walk: start is not on the backbone");
  const std::uint64_t key = rng::mix64(walker_id + rng::kGolden);
  w.positions.reserve(static_cast<std::size_t>(N) + 1);
  Site s = start;
  w.positions.push_back(s.x);
  for (std::int32_t j = 0; j < N; ++j) {
    s = Site{direct_step(bb, s, key), s.n + 1};
    w.positions.push_back(s.x);
  }
  return w;
}

struct ExplorationResult {
  std::vector<std::int32_t> sigmas;  // σ_0 = 1, σ_1, ...
  std::int32_t restarts = 0;         // failures before success
  std::optional<std::int32_t> t1;    // σ at the first success
};

/// σ_0 = 1, σ_{k+1} = σ_k + ℓ(γ_{σ_k}(σ_k)) + 2 while γ_{σ_k}(σ_k) is off the
/// backbone; stops at the first success or once σ exceeds max_t.
template <class BB>
ExplorationResult exploration_schedule(BB& bb, const Site& start, std::int32_t max_t, int field = 0) {
  ExplorationResult r;
  GammaState st = gamma_init(bb, start);
  std::int32_t sigma = 1;
  while (sigma <= max_t) {
    r.sigmas.push_back(sigma);
    while (st.k < sigma) gamma_extend(st, bb, field);
    const Site& e = st.end();
    if (bb.xi(e)) {
      r.t1 = sigma;
      return r;
    }
    ++r.restarts;
    sigma += bb.ell(e) + 2;
  }
  return r;
}

// Conditioned starts ---------------------------------------------------------

struct ConditionedStart {
  std::shared_ptr<const Environment> env;
  std::shared_ptr<LazyBackbone> backbone;
  std::int64_t rejections = 0;
};

/// Rejection-samples environments until the origin is on the backbone.
/// Attempt a of replica r uses seed derive_seed(base_seed, r, a). Throws
/// StatisticalError after max_rejections failures.
ConditionedStart sample_conditioned_start(const SimConfig& config, std::uint64_t replica_id,
                                          std::int64_t max_rejections = 10000);

/// Same, conditioning on every site in `starts` (layer 0) being on the backbone.
ConditionedStart sample_conditioned_starts(const SimConfig& config, std::uint64_t replica_id,
                                           const std::vector<Coord>& starts, std::int64_t max_rejections = 10000);

void write_regeneration_csv(std::ostream& out, const RegenerationRecord& rec, int d);
struct WalkSummaryRow {
  std::uint64_t replica = 0;
  std::int32_t steps = 0;
  Coord x_n{};
  std::int64_t regenerations = 0;
};
void write_walk_summary_csv(std::ostream& out, const std::vector<WalkSummaryRow>& rows, int d);

}  // namespace opbw
