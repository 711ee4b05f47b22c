#include "opbw/walk.hpp"

#include <ostream>

namespace opbw {

ConditionedStart sample_conditioned_starts(const SimConfig& config, std::uint64_t replica_id,
                                           const std::vector<Coord>& starts, std::int64_t max_rejections) {
  const SimConfig cfg = config.resolved();
  for (std::int64_t attempt = 0; attempt <= max_rejections; ++attempt) {
    auto env = std::make_shared<const Environment>(
        cfg, rng::derive_seed(cfg.base_seed, replica_id, static_cast<std::uint64_t>(attempt)));
    auto bb = std::make_shared<LazyBackbone>(env);
    bool ok = true;
    for (const auto& x : starts) {
      if (!bb->xi(Site{x, 0})) {
        ok = false;
        break;
      }
    }
    if (ok) return ConditionedStart{std::move(env), std::move(bb), attempt};
  }
  throw StatisticalError("conditioned start: no environment with the start on the backbone after " +
                         std::to_string(max_rejections) + " rejections; use a larger p");
}

ConditionedStart sample_conditioned_start(const SimConfig& config, std::uint64_t replica_id,
                                          std::int64_t max_rejections) {
  return sample_conditioned_starts(config, replica_id, {Coord{}}, max_rejections);
}

void write_regeneration_csv(std::ostream& out, const RegenerationRecord& rec, int d) {
  out << "i,T_i,tau_i";
  for (int c = 0; c < d; ++c) out << ",Y_" << (c + 1);
  out << '\n';
  for (std::size_t i = 1; i < rec.times.size(); ++i) {
    out << i << ',' << rec.times[i] << ',' << rec.tau(i);
    const Coord y = rec.y(i);
    for (int c = 0; c < d; ++c) out << ',' << y[c];
    out << '\n';
  }
}

void write_walk_summary_csv(std::ostream& out, const std::vector<WalkSummaryRow>& rows, int d) {
  out << "replica,N";
  for (int c = 0; c < d; ++c) out << ",X_N_" << (c + 1);
  out << ",regenerations\n";
  for (const auto& r : rows) {
    out << r.replica << ',' << r.steps;
    for (int c = 0; c < d; ++c) out << ',' << r.x_n[c];
    out << ',' << r.regenerations << '\n';
  }
}

}  // namespace opbw
