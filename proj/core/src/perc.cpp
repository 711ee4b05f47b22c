#include "opbw/perc.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "opbw/parallel.hpp"

namespace opbw {

// BackboneField ------------------------------------------------------------

BackboneField::BackboneField(const Environment& env) : env_(&env), horizon_(env.horizon()) {
  if (horizon_ > std::numeric_limits<std::int16_t>::max() - 1) {
    throw ResourceError("backbone field: horizon H = " + std::to_string(horizon_) + " exceeds 16-bit storage");
  }
  const auto& cfg = env.config();
  const int d = cfg.d;
  const std::int32_t L = cfg.half_width;
  values_.assign(env.box_site_count(), -1);
  const std::uint64_t per_layer = env.box_site_count() / (static_cast<std::uint64_t>(horizon_) + 1);
  for (std::int32_t n = horizon_; n >= 0; --n) {
    Site s;
    s.n = n;
    for (int i = 0; i < d; ++i) s.x[i] = -L;
    std::uint64_t idx = static_cast<std::uint64_t>(n) * per_layer;
    for (std::uint64_t k = 0; k < per_layer; ++k, ++idx) {
      if (env.omega_unchecked(s)) {
        std::int32_t v = 0;
        if (n < horizon_) {
          std::int32_t best = -1;
          for (const auto& u : cfg.offsets) {
            const Site y{s.x + u, n + 1};
            if (!env.in_box(y)) continue;
            best = std::max<std::int32_t>(best, values_[env.box_index(y)]);
          }
          v = best + 1;  // 0 when every neighbour is closed
        }
        values_[idx] = static_cast<std::int16_t>(v);
      }
      for (int i = d - 1; i >= 0; --i) {
        if (++s.x[i] <= L) break;
        s.x[i] = -L;
      }
    }
  }
}

std::int32_t BackboneField::ell(const Site& s) const {
  env_->check_in_box(s, "ell");
  return values_[env_->box_index(s)];
}

// LazyBackbone -------------------------------------------------------------

LazyBackbone::LazyBackbone(std::shared_ptr<const Environment> env) : LazyBackbone(env, env->horizon()) {}

LazyBackbone::LazyBackbone(std::shared_ptr<const Environment> env, std::int32_t horizon)
    : env_(std::move(env)), horizon_(horizon), memo_(env_->dim(), kUnknown) {
  if (horizon_ < 0) throw ConfigError("lazy backbone: horizon must be non-negative");
  // Probe paths that prefer small steps, and break side ties differently
  // from site to site, do not drift; they stay near the queries and merge
  // into already memoised saturated paths.
  const auto& offsets = env_->config().offsets;
  auto& fwd = order_[0];
  for (std::size_t i = 0; i < offsets.size(); ++i) fwd.push_back(static_cast<std::uint8_t>(i));
  std::stable_sort(fwd.begin(), fwd.end(),
                   [&](std::uint8_t a, std::uint8_t b) { return sup_norm(offsets[a]) < sup_norm(offsets[b]); });
  for (auto i : fwd) {
    const Coord neg = Coord{} - offsets[i];
    const auto it = std::find(offsets.begin(), offsets.end(), neg);
    order_[1].push_back(static_cast<std::uint8_t>(it - offsets.begin()));
  }
}

namespace {
std::uint8_t site_flip(const Site& s) {
  std::uint32_t h = static_cast<std::uint32_t>(s.n) * 0x9E3779B1u;
  for (auto v : s.x) h = (h ^ static_cast<std::uint32_t>(v)) * 0x85EBCA77u;
  return static_cast<std::uint8_t>(h >> 31);
}
}  // namespace

// Value of a site that needs no recursion, or kUnknown.
std::int32_t LazyBackbone::leaf_value(const Site& s) {
  std::int32_t& slot = memo_.at(s);
  if (slot != kUnknown) return slot;
  if (!env_->omega_unchecked(s)) return slot = -1;
  if (s.n >= horizon_) return slot = kSaturated;
  return kUnknown;
}

std::int32_t LazyBackbone::raw(const Site& s) {
  if (s.n > horizon_) throw QueryError("lazy backbone: site " + to_string(s, env_->dim()) + " above the horizon");
  if (const std::int32_t v = leaf_value(s); v != kUnknown) return v;

  const auto& offsets = env_->config().offsets;
  const auto m = static_cast<std::uint8_t>(offsets.size());
  stack_.clear();
  stack_.push_back(Frame{s, -1, 0, site_flip(s)});

  auto finish = [&](std::int32_t value) {
    memo_.at(stack_.back().s) = value;
    stack_.pop_back();
    if (!stack_.empty()) {
      Frame& parent = stack_.back();
      if (value == kSaturated) {
        parent.best = kSaturated;
        parent.next = m;
      } else {
        parent.best = std::max(parent.best, value);
      }
    }
  };

  while (!stack_.empty()) {
    Frame& f = stack_.back();
    if (f.next == 0 && f.best == -1) {
      // First visit: settle every neighbour that needs no recursion, so a
      // saturated one short-circuits before any descent.
      for (std::uint8_t i = 0; i < m; ++i) {
        const std::int32_t v = leaf_value(Site{f.s.x + offsets[i], f.s.n + 1});
        if (v == kSaturated) {
          f.best = kSaturated;
          break;
        }
      }
      if (f.best == kSaturated) {
        finish(kSaturated);
        continue;
      }
    }
    if (f.best == kSaturated) {
      finish(kSaturated);
      continue;
    }
    bool descended = false;
    while (f.next < m) {
      const Site y{f.s.x + offsets[order_[f.flip][f.next]], f.s.n + 1};
      ++f.next;
      const std::int32_t v = memo_.get(y);
      if (v == kUnknown) {
        // f.next already advanced; the child's value is folded in by finish().
        stack_.push_back(Frame{y, -1, 0, site_flip(y)});
        descended = true;
        break;
      }
      f.best = std::max(f.best, v);
    }
    if (descended) continue;
    finish(f.best + 1);
  }
  return memo_.get(s);
}

// Contact process ----------------------------------------------------------

ContactState contact_step(const ContactState& state, const Environment& env) {
  if (state.n >= env.horizon()) throw QueryError("contact_step: state already at the horizon");
  ContactState next;
  next.n = state.n + 1;
  const auto& offsets = env.config().offsets;
  std::vector<Coord> candidates;
  candidates.reserve(state.occupied.size() * offsets.size());
  for (const auto& y : state.occupied) {
    for (const auto& u : offsets) candidates.push_back(y + u);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  for (const auto& x : candidates) {
    if (env.omega(Site{x, next.n})) next.occupied.push_back(x);
  }
  return next;
}

std::optional<std::int32_t> survival_time(const Environment& env, const std::vector<Coord>& A, std::int32_t cap) {
  if (A.empty()) throw ConfigError("survival_time: A must be non-empty");
  if (cap > env.horizon()) throw ConfigError("survival_time: cap exceeds the horizon");
  ContactState state;
  state.occupied = A;
  std::sort(state.occupied.begin(), state.occupied.end());
  state.occupied.erase(std::unique(state.occupied.begin(), state.occupied.end()), state.occupied.end());
  while (state.n < cap) {
    if (state.occupied.empty()) return state.n;
    if (state.n + 1 == cap) break;
    state = contact_step(state, env);
  }
  return std::nullopt;
}

bool reachable(const Environment& env, const Site& from, const Site& to) {
  if (from.n > to.n) throw QueryError("reachable: from.n must not exceed to.n");
  const auto& cfg = env.config();
  const std::int32_t r = cfg.radius();
  env.check_in_box(to, "reachable");
  if (!env.omega(from)) return false;
  std::vector<Coord> layer{from.x};
  for (std::int32_t n = from.n + 1; n <= to.n; ++n) {
    std::vector<Coord> next;
    for (const auto& y : layer) {
      for (const auto& u : cfg.offsets) {
        const Coord x = y + u;
        // Only keep sites from which `to` is still within reach.
        if (sup_norm(x - to.x) > static_cast<std::int64_t>(to.n - n) * r) continue;
        next.push_back(x);
      }
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    layer.clear();
    // Paths through sites outside the box are not counted.
    for (const auto& x : next) {
      const Site s{x, n};
      if (env.in_box(s) && env.omega(s)) layer.push_back(x);
    }
    if (layer.empty()) return false;
  }
  return std::find(layer.begin(), layer.end(), to.x) != layer.end();
}

std::optional<std::int32_t> origin_survival_time(std::shared_ptr<const Environment> env, std::int32_t cap) {
  if (cap <= 1) return std::nullopt;  // τ⁰ ≥ 1 always
  // η_{cap−1} ≠ ∅ iff some open path from layer 1 reaches layer cap − 1.
  LazyBackbone bb(env, cap - 1);
  std::int32_t best = -1;
  for (const auto& u : env->config().offsets) {
    const std::int32_t v = bb.raw(Site{u, 1});
    if (v == LazyBackbone::kSaturated) return std::nullopt;
    best = std::max(best, v);
  }
  return best + 2;
}

// Estimators -----------------------------------------------------------------

void write_frequency_csv(std::ostream& out, const std::vector<FrequencyRow>& rows, const char* key_name) {
  out << key_name << ",count,frequency,ci_low,ci_high\n";
  out.precision(10);
  for (const auto& r : rows) {
    out << r.key << ',' << r.count << ',' << r.frequency << ',' << r.ci_low << ',' << r.ci_high << '\n';
  }
}

HeightTail height_tail(const SimConfig& config, std::int64_t samples, int jobs, std::int32_t fit_lo,
                       std::int32_t fit_hi) {
  if (samples < 1) throw ConfigError("height_tail: samples must be positive");
  const SimConfig cfg = config.resolved();
  HeightTail out;
  out.samples = samples;
  out.cap = cfg.horizon;
  const auto taus = parallel_map(static_cast<std::size_t>(samples), jobs, [&](std::size_t i) {
    auto env = std::make_shared<const Environment>(lazy_environment(cfg, i));
    const auto t = origin_survival_time(env, cfg.horizon);
    return t ? *t : -1;
  });
  std::vector<std::int64_t> hist(static_cast<std::size_t>(cfg.horizon) + 1, 0);
  for (auto t : taus) {
    if (t >= 0) {
      ++hist[static_cast<std::size_t>(t)];
      ++out.finite;
    }
  }
  if (out.finite < 50) {
    throw StatisticalError("height_tail: only " + std::to_string(out.finite) +
                           " finite cluster heights; increase samples or lower p");
  }
  // count(n) = #{n <= τ < cap}
  std::int64_t tail = out.finite;
  std::vector<double> keys;
  std::vector<std::int64_t> counts;
  for (std::int32_t n = 0; n < cfg.horizon && tail > 0; ++n) {
    FrequencyRow row;
    row.key = n;
    row.count = tail;
    row.frequency = static_cast<double>(tail) / static_cast<double>(samples);
    const auto ci = stats::wilson(tail, samples);
    row.ci_low = ci.low;
    row.ci_high = ci.high;
    out.rows.push_back(row);
    if (n >= fit_lo && n <= fit_hi) {
      keys.push_back(n);
      counts.push_back(tail);
    }
    tail -= hist[static_cast<std::size_t>(n)];
  }
  out.fit = stats::fit_log_counts(keys, counts, samples);
  return out;
}

std::vector<FrequencyRow> estimate_pc(const SimConfig& config, const std::vector<double>& p_grid,
                                      std::int64_t samples, int jobs) {
  if (samples < 1) throw ConfigError("estimate_pc: samples must be positive");
  std::vector<FrequencyRow> rows;
  for (double p : p_grid) {
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("estimate_pc: p must lie in (0, 1]");
    SimConfig cfg = config;
    cfg.p = p;
    cfg = cfg.resolved();
    const auto survived = parallel_map(static_cast<std::size_t>(samples), jobs, [&](std::size_t i) {
      auto env = std::make_shared<const Environment>(lazy_environment(cfg, i));
      // Survival to layer H means τ⁰ > H.
      return origin_survival_time(env, cfg.horizon + 1).has_value() ? 0 : 1;
    });
    std::int64_t k = 0;
    for (int s : survived) k += s;
    const auto ci = stats::wilson(k, samples);
    rows.push_back(FrequencyRow{p, k, static_cast<double>(k) / static_cast<double>(samples), ci.low, ci.high});
  }
  return rows;
}

}  // namespace opbw
