#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "opbw/stats.hpp"
#include "opbw/walk.hpp"

namespace opbw {

/// Two walks with their simultaneous regenerations. Index 0 of J, J′, T^sim,
/// X̂ and X̂′ is the start.
struct JointRegenRecord {
  RegenerationRecord walk1, walk2;
  std::vector<std::int32_t> J{0}, Jp{0}, tsim{0};
  std::vector<Coord> xhat, xhatp;
  bool truncated = false;

  std::size_t count() const { return tsim.size() - 1; }
  Coord separation(std::size_t m) const { return xhat[m] - xhatp[m]; }
};

struct Increment {
  Coord y{};
  std::int32_t tau = 0;
  bool operator==(const Increment&) const = default;
};

/// Ξ_m: both walks' increments between T^sim_{m−1} and T^sim_m, plus (X̂_m, X̂′_m).
struct XiBlock {
  std::vector<Increment> walk1, walk2;
  Coord xhat{}, xhatp{};
};

std::vector<Increment> increments(const RegenerationRecord& rec);
XiBlock xi_block(const JointRegenRecord& rec, std::size_t m);  // 1 <= m <= count()
std::vector<XiBlock> xi_blocks(const JointRegenRecord& rec);
/// Concatenates the per-walk increment lists of consecutive blocks.
std::pair<std::vector<Increment>, std::vector<Increment>> flatten(const std::vector<XiBlock>& blocks);

/// Simultaneous regenerations recomputed from two complete records by
/// intersecting their time sets; regenerations after the last common time
/// stay in the walk records.
JointRegenRecord joint_from_records(const RegenerationRecord& a, const RegenerationRecord& b);

/// Streams simultaneous regenerations of two γ constructions. The two
/// backbones may be the same object (one environment) or two independent ones.
template <class BB1, class BB2 = BB1>
class JointTracker {
 public:
  JointTracker(BB1& bb1, const Site& s1, int field1, BB2& bb2, const Site& s2, int field2)
      : bb1_(&bb1), bb2_(&bb2), t1_(bb1, s1, field1), t2_(bb2, s2, field2) {
    if (s1.n != s2.n) throw QueryError("joint walk: starts must lie in the same layer");
    rec_.xhat.push_back(s1.x);
    rec_.xhatp.push_back(s2.x);
  }

  /// Advances to the next simultaneous regeneration, or returns nullopt once
  /// either walk reaches depth max_depth without one.
  std::optional<std::int32_t> next_joint(std::int32_t max_depth) {
    const std::int32_t prev = rec_.tsim.back();
    std::int32_t a = t1_.last_regeneration();
    std::int32_t b = t2_.last_regeneration();
    while (!(a == b && a > prev)) {
      if (a <= b) {
        const auto r = t1_.next_regeneration(max_depth);
        if (!r) return std::nullopt;
        a = *r;
      } else {
        const auto r = t2_.next_regeneration(max_depth);
        if (!r) return std::nullopt;
        b = *r;
      }
    }
    rec_.tsim.push_back(a);
    rec_.J.push_back(static_cast<std::int32_t>(t1_.record().count()));
    rec_.Jp.push_back(static_cast<std::int32_t>(t2_.record().count()));
    rec_.xhat.push_back(t1_.state().end().x);
    rec_.xhatp.push_back(t2_.state().end().x);
    if (a - pruned_ >= kPruneEvery) {
      bb1_->forget_below(a);
      if (static_cast<void*>(bb2_) != static_cast<void*>(bb1_)) bb2_->forget_below(a);
      pruned_ = a;
    }
    return a;
  }

  std::size_t count() const { return rec_.count(); }
  std::int32_t last_joint() const { return rec_.tsim.back(); }
  const Coord& xhat() const { return rec_.xhat.back(); }
  const Coord& xhatp() const { return rec_.xhatp.back(); }

  /// Snapshot including both individual records.
  JointRegenRecord record() const {
    JointRegenRecord out = rec_;
    out.walk1 = t1_.record();
    out.walk2 = t2_.record();
    return out;
  }

 private:
  static constexpr std::int32_t kPruneEvery = 4096;
  BB1* bb1_;
  BB2* bb2_;
  RegenerationTracker<BB1> t1_;
  RegenerationTracker<BB2> t2_;
  JointRegenRecord rec_;
  std::int32_t pruned_ = 0;
};

/// Two γ constructions on one environment, with permutation fields field1
/// and field2, run until depth N (clamped to the horizon). Both starts must
/// be on the backbone.
template <class BB>
JointRegenRecord joint_walk(BB& bb, const Coord& x, const Coord& xp, std::int32_t N, int field1 = 0,
                            int field2 = 1) {
  bool truncated = false;
  if (N > bb.horizon()) {
    N = bb.horizon();
    truncated = true;
  }
  JointTracker<BB> jt(bb, Site{x, 0}, field1, bb, Site{xp, 0}, field2);
  while (jt.next_joint(N)) {
  }
  JointRegenRecord out = jt.record();
  out.truncated = truncated;
  return out;
}

enum class PairLaw { kJoint, kIndependent };
const char* to_string(PairLaw law);

/// Environments for a pair started at (x, 0) and (x′, 0). Joint: one
/// environment with both starts on its backbone. Independent: the second walk
/// gets its own environment from a separate seed stream, conditioned on x′.
struct PairStart {
  ConditionedStart first, second;  // second.env == first.env under kJoint
  PairLaw law = PairLaw::kJoint;
};
PairStart sample_pair_start(const SimConfig& config, PairLaw law, std::uint64_t replica, const Coord& x,
                            const Coord& xp, std::int64_t max_rejections = 10000);

/// Runs the pair to depth N (clamped to the horizon). Under kJoint walk 2 uses
/// permutation field 1, under kIndependent field 0 of its own environment.
JointRegenRecord run_pair(PairStart& start, const Coord& x, const Coord& xp, std::int32_t N);

JointRegenRecord independent_pair_walk(const SimConfig& config, std::uint64_t replica, const Coord& x,
                                       const Coord& xp, std::int32_t N);

/// Ξ_1 for one replica; nullopt if no simultaneous regeneration happens below
/// the horizon.
std::optional<XiBlock> sample_first_block(const SimConfig& config, PairLaw law, std::uint64_t replica,
                                          const Coord& x, const Coord& xp);

// Kernel comparison ------------------------------------------------------------

struct Projection {
  std::string name;
  int bins = 0;
  std::function<int(const XiBlock&, const Coord& x, const Coord& xp)> map;
};

/// (Y-sum sign of walk 1, T^sim_1 capped at 6, sign of the change in
/// separation |X̂ − X̂′|_2): 54 bins.
Projection default_projection();

struct KernelTv {
  stats::TvEstimate tv;
  std::vector<std::int64_t> joint_counts, ind_counts;
  std::int64_t joint_lost = 0, ind_lost = 0;  // samples truncated at the horizon
  bool undersampled = false;
};

/// Empirical TV between the projected Ψ^joint((x,x′),·) and Ψ^ind((x,x′),·).
/// Requires x ≠ x′: with x = x′ the separation-change coordinate is degenerate.
KernelTv kernel_tv_estimate(const SimConfig& config, const Coord& x, const Coord& xp, std::int64_t samples,
                            const Projection& projection, int jobs = 1, int bootstrap_reps = 400);

// Annulus ----------------------------------------------------------------------

/// Probability that a d-dimensional Brownian motion started at radius r
/// leaves the annulus r1 < |z| < r2 through the outer sphere.
double f_d(double r, double r1, double r2, int d);

struct AnnulusResult {
  double r1 = 0, r = 0, r2 = 0;
  std::int64_t outer = 0;      // H(r2) < h(r1)
  std::int64_t completed = 0;  // excursions that reached either sphere
  std::int64_t truncated = 0;  // excursions still inside at the horizon
  double estimate = 0;
  stats::Interval ci;
  double reference = 0;
};

/// Runs Ψ^ind pairs from separation r·e_1 until |X̂ − X̂′|_2 ≤ r1 or ≥ r2.
AnnulusResult annulus_exit_experiment(const SimConfig& config, double r1, double r, double r2,
                                      std::int64_t samples, int jobs = 1);

// Separation -------------------------------------------------------------------

struct SeparationRow {
  std::int64_t n = 0;
  double radius = 0;    // n^b1
  std::int64_t index = 0;  // n^b2
  std::int64_t hits = 0;   // H(n^b1) ≥ n^b2
  std::int64_t samples = 0;
  std::int64_t truncated = 0;
  double frequency = 0;
  stats::Interval ci;
};
struct SeparationResult {
  double b1 = 0, b2 = 0;
  std::vector<SeparationRow> rows;
  std::vector<std::string> warnings;
};

/// Under Ψ^joint from x = x′ = 0: frequency of H(n^b1) ≥ n^b2, where H(r)
/// is the first joint-regeneration index with |X̂ − X̂′|_2 ≥ r.
SeparationResult separation_time_experiment(const SimConfig& config, const std::vector<std::int64_t>& n_values,
                                            std::int64_t samples, double b1, double b2, int jobs = 1);

// One-dimensional diagnostics --------------------------------------------------------

/// One-step moments of Ψ̂^joint from (0, s): φ_1 = E[X̂_1], φ_2 = E[X̂′_1 − s],
/// φ_11, φ_22, φ_12 the second moments of those increments.
struct PhiRow {
  std::int32_t s = 0;
  std::int64_t samples = 0;
  double phi1 = 0, phi2 = 0, phi11 = 0, phi22 = 0, phi12 = 0;
  double phi1_se = 0, phi2_se = 0, phi12_se = 0;
  /// Antisymmetrised drift of walk 1 at separation x − x′ = −s:
  /// (φ_1(s) − φ_2(s)) / 2, which is exactly odd in s.
  double drift = 0, drift_se = 0;
};

std::vector<PhiRow> phi_table(const SimConfig& config, std::int32_t max_separation, std::int64_t samples,
                              int jobs = 1);

/// W type of a crossing interval from the signs of X̂ − X̂′ at its two ends:
/// 1 (> then <), 2 (> then >), 3 (< then >), 4 (< then <), 0 if either is a tie.
int crossing_type(std::int64_t diff_before, std::int64_t diff_after);

struct CrossingInterval {
  std::int64_t d = 0;  // 𝒟_{n,i}
  std::int64_t r = 0;  // 𝓡_{n,i}
  int type = 0;
};

/// Black-box intervals of a separation sequence diff[m] = X̂_m − X̂′_m for
/// m <= n: 𝒟_i is the first m > 𝓡_{i−1} with |diff| ≥ n^b, 𝓡_i the first
/// m > 𝒟_i with |diff| ≤ K log n; 𝓡_0 = 0.
std::vector<CrossingInterval> crossing_intervals(const std::vector<std::int64_t>& diff, std::int64_t n, double K,
                                                 double b);

/// #{0 ≤ j ≤ n : |diff_j| ≤ K log n}.
std::int64_t collision_count(const std::vector<std::int64_t>& diff, std::int64_t n, double K);

struct D1Level {
  std::int64_t n = 0;
  double mean_R = 0, mean_R_over_n = 0;
  double mean_abs_A = 0, abs_A_over_sqrt_n = 0, abs_A_se = 0;  // |A_n^{(1)}| over runs
  double mean_M_var = 0;                                       // mean of M_n² / n
  std::array<std::int64_t, 5> w_counts{};                      // index = type
  double w13_z = 0, w24_z = 0;
  double q_eig_min = 0, q_eig_max = 0;  // eigenvalues of the mean of Q_n / n
  double collision_band = 0;            // K log n
};

struct D1Report {
  double K = 1, b = 0.3;
  std::int64_t runs = 0, truncated_runs = 0;
  std::vector<PhiRow> phi;
  double sigma2_ind = 0, sigma2_ind_se = 0;  // variance of one X̂ increment under Ψ^ind
  std::vector<D1Level> levels;
  bool R_over_n_decreasing = false;
  bool A_decreasing = false;
  bool w_symmetric = false;
  std::int32_t phi_check_separation = 0;  // ceil(K log n_max)
  double phi_check_z = 0;                 // drift / se there
  double phi12_check_z = 0;
};

/// d = 1 only. Runs `runs` Ψ^joint pairs from x = x′ = 0 for max(n_values)
/// joint regenerations each and evaluates R_n, A_n^{(1)}, M_n, Q_n and the W
/// types at every n. Throws ConfigError for d ≠ 1.
D1Report d1_diagnostics(const SimConfig& config, const std::vector<std::int64_t>& n_values, std::int64_t runs,
                        std::int64_t phi_samples, std::int32_t phi_max_separation, double K, double b,
                        int jobs = 1);

}  // namespace opbw
