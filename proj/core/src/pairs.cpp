#include "opbw/pairs.hpp"

#include <algorithm>
#include <cmath>

#include "opbw/parallel.hpp"

namespace opbw {

namespace {

// Seed streams of the two environments of an independent pair.
constexpr std::uint64_t kIndependentFirst = 0x696e6431;
constexpr std::uint64_t kIndependentSecond = 0x696e6432;
constexpr std::int32_t kBlockHorizon = 1000;

std::vector<Increment> slice(const RegenerationRecord& rec, std::int32_t from, std::int32_t to) {
  std::vector<Increment> out;
  out.reserve(static_cast<std::size_t>(to - from));
  for (std::int32_t k = from + 1; k <= to; ++k) {
    out.push_back({rec.y(static_cast<std::size_t>(k)), rec.tau(static_cast<std::size_t>(k))});
  }
  return out;
}

double norm2(const Coord& c, int d) {
  double s = 0;
  for (int i = 0; i < d; ++i) s += static_cast<double>(c[i]) * c[i];
  return s;
}

int sign(double v) { return (v > 0) - (v < 0); }

}  // namespace

std::vector<Increment> increments(const RegenerationRecord& rec) {
  return slice(rec, 0, static_cast<std::int32_t>(rec.count()));
}

XiBlock xi_block(const JointRegenRecord& rec, std::size_t m) {
  if (m == 0 || m > rec.count()) throw QueryError("xi_block: index out of range");
  XiBlock b;
  b.walk1 = slice(rec.walk1, rec.J[m - 1], rec.J[m]);
  b.walk2 = slice(rec.walk2, rec.Jp[m - 1], rec.Jp[m]);
  b.xhat = rec.xhat[m];
  b.xhatp = rec.xhatp[m];
  return b;
}

std::vector<XiBlock> xi_blocks(const JointRegenRecord& rec) {
  std::vector<XiBlock> out;
  out.reserve(rec.count());
  for (std::size_t m = 1; m <= rec.count(); ++m) out.push_back(xi_block(rec, m));
  return out;
}

std::pair<std::vector<Increment>, std::vector<Increment>> flatten(const std::vector<XiBlock>& blocks) {
  std::pair<std::vector<Increment>, std::vector<Increment>> out;
  for (const auto& b : blocks) {
    out.first.insert(out.first.end(), b.walk1.begin(), b.walk1.end());
    out.second.insert(out.second.end(), b.walk2.begin(), b.walk2.end());
  }
  return out;
}

JointRegenRecord joint_from_records(const RegenerationRecord& a, const RegenerationRecord& b) {
  JointRegenRecord out;
  out.walk1 = a;
  out.walk2 = b;
  out.xhat.push_back(a.positions.front());
  out.xhatp.push_back(b.positions.front());
  std::size_t i = 1, j = 1;
  while (i < a.times.size() && j < b.times.size()) {
    if (a.times[i] < b.times[j]) {
      ++i;
    } else if (b.times[j] < a.times[i]) {
      ++j;
    } else {
      out.J.push_back(static_cast<std::int32_t>(i));
      out.Jp.push_back(static_cast<std::int32_t>(j));
      out.tsim.push_back(a.times[i]);
      out.xhat.push_back(a.positions[i]);
      out.xhatp.push_back(b.positions[j]);
      ++i;
      ++j;
    }
  }
  return out;
}

const char* to_string(PairLaw law) { return law == PairLaw::kJoint ? "joint" : "independent"; }

PairStart sample_pair_start(const SimConfig& config, PairLaw law, std::uint64_t replica, const Coord& x,
                            const Coord& xp, std::int64_t max_rejections) {
  PairStart ps;
  ps.law = law;
  if (law == PairLaw::kJoint) {
    ps.first = sample_conditioned_starts(config, replica, {x, xp}, max_rejections);
    ps.second = ps.first;
    return ps;
  }
  SimConfig c1 = config, c2 = config;
  c1.base_seed = rng::derive_seed(config.base_seed, kIndependentFirst);
  c2.base_seed = rng::derive_seed(config.base_seed, kIndependentSecond);
  ps.first = sample_conditioned_starts(c1, replica, {x}, max_rejections);
  ps.second = sample_conditioned_starts(c2, replica, {xp}, max_rejections);
  return ps;
}

namespace {

JointTracker<LazyBackbone> make_tracker(PairStart& ps, const Coord& x, const Coord& xp) {
  if (ps.law == PairLaw::kJoint) {
    return JointTracker<LazyBackbone>(*ps.first.backbone, Site{x, 0}, 0, *ps.first.backbone, Site{xp, 0}, 1);
  }
  return JointTracker<LazyBackbone>(*ps.first.backbone, Site{x, 0}, 0, *ps.second.backbone, Site{xp, 0}, 0);
}

}  // namespace

JointRegenRecord run_pair(PairStart& start, const Coord& x, const Coord& xp, std::int32_t N) {
  const std::int32_t H = std::min(start.first.backbone->horizon(), start.second.backbone->horizon());
  bool truncated = false;
  if (N > H) {
    N = H;
    truncated = true;
  }
  auto jt = make_tracker(start, x, xp);
  while (jt.next_joint(N)) {
  }
  JointRegenRecord out = jt.record();
  out.truncated = truncated;
  return out;
}

JointRegenRecord independent_pair_walk(const SimConfig& config, std::uint64_t replica, const Coord& x,
                                       const Coord& xp, std::int32_t N) {
  PairStart ps = sample_pair_start(config, PairLaw::kIndependent, replica, x, xp);
  return run_pair(ps, x, xp, N);
}

std::optional<XiBlock> sample_first_block(const SimConfig& config, PairLaw law, std::uint64_t replica,
                                          const Coord& x, const Coord& xp) {
  PairStart ps = sample_pair_start(config, law, replica, x, xp);
  auto jt = make_tracker(ps, x, xp);
  if (!jt.next_joint(ps.first.backbone->horizon())) return std::nullopt;
  return xi_block(jt.record(), 1);
}

// Kernel comparison ------------------------------------------------------------

Projection default_projection() {
  Projection p;
  p.name = "ysum-sign,tsim-cap6,separation-change";
  p.bins = 54;
  p.map = [](const XiBlock& b, const Coord& x, const Coord& xp) {
    std::int64_t ysum = 0;
    std::int64_t tsum = 0;
    for (const auto& inc : b.walk1) {
      ysum += inc.y[0];
      tsum += inc.tau;
    }
    const int ys = sign(static_cast<double>(ysum)) + 1;
    const int t = static_cast<int>(std::min<std::int64_t>(tsum, 6)) - 1;
    const double before = norm2(x - xp, kMaxDim);
    const double after = norm2(b.xhat - b.xhatp, kMaxDim);
    const int sc = sign(after - before) + 1;
    return (ys * 6 + t) * 3 + sc;
  };
  return p;
}

KernelTv kernel_tv_estimate(const SimConfig& config, const Coord& x, const Coord& xp, std::int64_t samples,
                            const Projection& projection, int jobs, int bootstrap_reps) {
  if (x == xp) throw ConfigError("kernel_tv_estimate: starts must differ (x = x' makes the projection degenerate)");
  if (samples <= 0) throw ConfigError("kernel_tv_estimate: samples must be positive");
  KernelTv out;
  auto collect = [&](PairLaw law, std::vector<std::int64_t>& counts, std::int64_t& lost) {
    const auto bins = parallel_map(static_cast<std::size_t>(samples), jobs, [&](std::size_t i) {
      const auto blk = sample_first_block(config, law, i, x, xp);
      return blk ? projection.map(*blk, x, xp) : -1;
    });
    counts.assign(static_cast<std::size_t>(projection.bins), 0);
    for (int b : bins) {
      if (b < 0) {
        ++lost;
        continue;
      }
      if (b >= projection.bins) throw InvariantViolation("projection returned bin out of range");
      ++counts[static_cast<std::size_t>(b)];
    }
  };
  collect(PairLaw::kJoint, out.joint_counts, out.joint_lost);
  collect(PairLaw::kIndependent, out.ind_counts, out.ind_lost);
  out.tv = stats::bootstrap_tv(out.joint_counts, out.ind_counts, bootstrap_reps,
                               rng::derive_seed(config.base_seed, 0x7476));
  if (out.tv.sparse_bins > 0) {
    // Mass in sparse bins is too noisy to resolve; widen by its share.
    double na = 0, nb = 0;
    for (std::size_t i = 0; i < out.joint_counts.size(); ++i) {
      na += static_cast<double>(out.joint_counts[i]);
      nb += static_cast<double>(out.ind_counts[i]);
    }
    double slack = 0;
    for (std::size_t i = 0; i < out.joint_counts.size(); ++i) {
      if (out.joint_counts[i] < 5 && out.ind_counts[i] < 5) {
        slack += 0.5 * (static_cast<double>(out.joint_counts[i]) / na + static_cast<double>(out.ind_counts[i]) / nb);
      }
    }
    out.tv.ci_low = std::max(0.0, out.tv.ci_low - slack);
    out.tv.ci_high = std::min(1.0, out.tv.ci_high + slack);
    out.undersampled = true;
  }
  return out;
}

// Annulus ----------------------------------------------------------------------

double f_d(double r, double r1, double r2, int d) {
  if (!(r1 > 0 && r1 < r && r < r2)) throw ConfigError("f_d: need 0 < r1 < r < r2");
  if (d == 1) return (r - r1) / (r2 - r1);
  if (d == 2) return std::log(r / r1) / std::log(r2 / r1);
  const double e = 2.0 - d;
  return (std::pow(r1, e) - std::pow(r, e)) / (std::pow(r1, e) - std::pow(r2, e));
}

AnnulusResult annulus_exit_experiment(const SimConfig& config, double r1, double r, double r2,
                                      std::int64_t samples, int jobs) {
  const SimConfig cfg = config.resolved();
  AnnulusResult res;
  res.r1 = r1;
  res.r = r;
  res.r2 = r2;
  res.reference = f_d(r, r1, r2, cfg.d);
  Coord xp{};
  xp[0] = static_cast<std::int32_t>(std::lround(r));
  const double in2 = r1 * r1, out2 = r2 * r2;
  // 1 = outer exit, 0 = inner exit, -1 = still inside at the horizon
  const auto outcomes = parallel_map(static_cast<std::size_t>(samples), jobs, [&](std::size_t i) {
    PairStart ps = sample_pair_start(cfg, PairLaw::kIndependent, i, Coord{}, xp);
    auto jt = make_tracker(ps, Coord{}, xp);
    const std::int32_t H = ps.first.backbone->horizon();
    while (jt.next_joint(H)) {
      const double q = norm2(jt.xhat() - jt.xhatp(), cfg.d);
      if (q >= out2) return 1;
      if (q <= in2) return 0;
    }
    return -1;
  });
  for (int o : outcomes) {
    if (o < 0) {
      ++res.truncated;
      continue;
    }
    ++res.completed;
    res.outer += o;
  }
  if (res.completed > 0) {
    res.estimate = static_cast<double>(res.outer) / static_cast<double>(res.completed);
    res.ci = stats::wilson(res.outer, res.completed);
  }
  return res;
}

// Separation -------------------------------------------------------------------

SeparationResult separation_time_experiment(const SimConfig& config, const std::vector<std::int64_t>& n_values,
                                            std::int64_t samples, double b1, double b2, int jobs) {
  const SimConfig cfg = config.resolved();
  SeparationResult res;
  res.b1 = b1;
  res.b2 = b2;
  if (!(b1 > 0 && b1 < 0.5) || !(b2 > 0 && b2 < 0.5)) {
    res.warnings.push_back("b1 and b2 outside (0, 1/2): the separation bound is not claimed there");
  }
  std::int64_t max_index = 0;
  for (auto n : n_values) {
    SeparationRow row;
    row.n = n;
    row.radius = std::pow(static_cast<double>(n), b1);
    row.index = static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(n), b2)));
    max_index = std::max(max_index, row.index);
    res.rows.push_back(row);
  }
  // Per sample: squared separation after each joint regeneration, up to max_index.
  const auto paths = parallel_map(static_cast<std::size_t>(samples), jobs, [&](std::size_t i) {
    PairStart ps = sample_pair_start(cfg, PairLaw::kJoint, i, Coord{}, Coord{});
    auto jt = make_tracker(ps, Coord{}, Coord{});
    std::vector<double> q{0.0};
    const std::int32_t H = ps.first.backbone->horizon();
    while (static_cast<std::int64_t>(q.size()) <= max_index && jt.next_joint(H)) {
      q.push_back(norm2(jt.xhat() - jt.xhatp(), cfg.d));
    }
    return q;
  });
  for (auto& row : res.rows) {
    const double r2 = row.radius * row.radius;
    for (const auto& q : paths) {
      std::int64_t hit = -1;
      for (std::size_t m = 0; m < q.size() && static_cast<std::int64_t>(m) < row.index; ++m) {
        if (q[m] >= r2) {
          hit = static_cast<std::int64_t>(m);
          break;
        }
      }
      if (hit >= 0) {
        ++row.samples;
      } else if (static_cast<std::int64_t>(q.size()) > row.index) {
        ++row.samples;
        ++row.hits;
      } else {
        ++row.truncated;
      }
    }
    if (row.samples > 0) {
      row.frequency = static_cast<double>(row.hits) / static_cast<double>(row.samples);
      row.ci = stats::wilson(row.hits, row.samples);
    }
  }
  return res;
}

// One-dimensional diagnostics --------------------------------------------------------

std::vector<PhiRow> phi_table(const SimConfig& config, std::int32_t max_separation, std::int64_t samples, int jobs) {
  const SimConfig cfg = config.resolved();
  std::vector<PhiRow> rows;
  for (std::int32_t s = 0; s <= max_separation; ++s) {
    SimConfig c = cfg;
    c.base_seed = rng::derive_seed(cfg.base_seed, 0x706869, static_cast<std::uint64_t>(s));
    Coord xp{};
    xp[0] = s;
    struct Step {
      bool ok;
      double a, b;
    };
    const auto steps = parallel_map(static_cast<std::size_t>(samples), jobs, [&](std::size_t i) {
      const auto blk = sample_first_block(c, PairLaw::kJoint, i, Coord{}, xp);
      if (!blk) return Step{false, 0, 0};
      return Step{true, static_cast<double>(blk->xhat[0]), static_cast<double>(blk->xhatp[0] - s)};
    });
    std::vector<double> a, b, half;
    for (const auto& st : steps) {
      if (!st.ok) continue;
      a.push_back(st.a);
      b.push_back(st.b);
      half.push_back(0.5 * (st.a - st.b));
    }
    if (a.size() < 2) throw StatisticalError("phi_table: too few completed blocks");
    PhiRow row;
    row.s = s;
    row.samples = static_cast<std::int64_t>(a.size());
    const auto sa = stats::summarize(a), sb = stats::summarize(b), sh = stats::summarize(half);
    row.phi1 = sa.mean;
    row.phi2 = sb.mean;
    row.phi1_se = sa.se;
    row.phi2_se = sb.se;
    row.phi11 = sa.var;
    row.phi22 = sb.var;
    std::vector<double> cross(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) cross[i] = (a[i] - sa.mean) * (b[i] - sb.mean);
    const auto sc = stats::summarize(cross);
    row.phi12 = sc.mean;
    row.phi12_se = sc.se;
    if (s == 0) {
      row.drift = 0;
      row.drift_se = 0;
    } else {
      row.drift = sh.mean;
      row.drift_se = sh.se;
    }
    rows.push_back(row);
  }
  return rows;
}

int crossing_type(std::int64_t before, std::int64_t after) {
  if (before == 0 || after == 0) return 0;
  if (before > 0) return after < 0 ? 1 : 2;
  return after > 0 ? 3 : 4;
}

std::vector<CrossingInterval> crossing_intervals(const std::vector<std::int64_t>& diff, std::int64_t n, double K,
                                                 double b) {
  const double far = std::pow(static_cast<double>(n), b);
  const double near = K * std::log(static_cast<double>(n));
  const std::int64_t last = std::min<std::int64_t>(n, static_cast<std::int64_t>(diff.size()) - 1);
  std::vector<CrossingInterval> out;
  std::int64_t r_prev = 0;
  std::int64_t m = 1;
  for (;;) {
    while (m <= last && static_cast<double>(std::llabs(diff[static_cast<std::size_t>(m)])) < far) ++m;
    if (m > last) break;
    CrossingInterval ci;
    ci.d = m;
    ci.type = crossing_type(diff[static_cast<std::size_t>(r_prev)], diff[static_cast<std::size_t>(m)]);
    ++m;
    while (m <= last && static_cast<double>(std::llabs(diff[static_cast<std::size_t>(m)])) > near) ++m;
    ci.r = m <= last ? m : -1;  // -1: not closed by n
    out.push_back(ci);
    if (m > last) break;
    r_prev = m;
    ++m;
  }
  return out;
}

std::int64_t collision_count(const std::vector<std::int64_t>& diff, std::int64_t n, double K) {
  const double near = K * std::log(static_cast<double>(n));
  const std::int64_t last = std::min<std::int64_t>(n, static_cast<std::int64_t>(diff.size()) - 1);
  std::int64_t c = 0;
  for (std::int64_t j = 0; j <= last; ++j) {
    if (static_cast<double>(std::llabs(diff[static_cast<std::size_t>(j)])) <= near) ++c;
  }
  return c;
}

D1Report d1_diagnostics(const SimConfig& config, const std::vector<std::int64_t>& n_values, std::int64_t runs,
                        std::int64_t phi_samples, std::int32_t phi_max_separation, double K, double b, int jobs) {
  const SimConfig cfg = config.resolved();
  if (cfg.d != 1) throw ConfigError("d1_diagnostics: only defined for d = 1 (got d = " + std::to_string(cfg.d) + ")");
  if (n_values.empty()) throw ConfigError("d1_diagnostics: no n values");
  D1Report rep;
  rep.K = K;
  rep.b = b;
  rep.runs = runs;
  // One-block samples only need a horizon covering T^sim_1.
  SimConfig block_cfg = cfg;
  block_cfg.horizon = std::min(cfg.horizon, kBlockHorizon);
  rep.phi = phi_table(block_cfg, phi_max_separation, phi_samples, jobs);

  {
    SimConfig c = block_cfg;
    c.base_seed = rng::derive_seed(cfg.base_seed, 0x7369676d61);
    const auto ys = parallel_map(static_cast<std::size_t>(phi_samples), jobs, [&](std::size_t i) {
      const auto blk = sample_first_block(c, PairLaw::kIndependent, i, Coord{}, Coord{});
      return blk ? std::optional<double>(static_cast<double>(blk->xhat[0])) : std::nullopt;
    });
    std::vector<double> sq;
    for (const auto& y : ys) {
      if (y) sq.push_back(*y * *y);
    }
    const auto s = stats::summarize(sq);
    rep.sigma2_ind = s.mean;
    rep.sigma2_ind_se = s.se;
  }

  const auto S = static_cast<std::int64_t>(rep.phi.size()) - 1;
  auto drift = [&](std::int64_t s) {  // φ_1 for separation s = x′ − x
    if (std::llabs(s) > S) return 0.0;
    return s >= 0 ? rep.phi[static_cast<std::size_t>(s)].drift : -rep.phi[static_cast<std::size_t>(-s)].drift;
  };
  auto row_at = [&](std::int64_t s) -> const PhiRow& {
    return rep.phi[static_cast<std::size_t>(std::min<std::int64_t>(std::llabs(s), S))];
  };

  const std::int64_t n_max = *std::max_element(n_values.begin(), n_values.end());
  struct Run {
    std::vector<std::int64_t> diff;  // X̂_m − X̂′_m
    std::vector<std::int64_t> xhat;  // X̂_m
  };
  SimConfig run_cfg = cfg;
  run_cfg.base_seed = rng::derive_seed(cfg.base_seed, 0x72756e);
  const auto paths = parallel_map(static_cast<std::size_t>(runs), jobs, [&](std::size_t i) {
    PairStart ps = sample_pair_start(run_cfg, PairLaw::kJoint, i, Coord{}, Coord{});
    auto jt = make_tracker(ps, Coord{}, Coord{});
    Run r;
    r.diff.push_back(0);
    r.xhat.push_back(0);
    const std::int32_t H = ps.first.backbone->horizon();
    while (static_cast<std::int64_t>(r.diff.size()) <= n_max && jt.next_joint(H)) {
      r.diff.push_back(jt.xhat()[0] - jt.xhatp()[0]);
      r.xhat.push_back(jt.xhat()[0]);
    }
    return r;
  });

  for (const auto& p : paths) {
    if (static_cast<std::int64_t>(p.diff.size()) <= n_max) ++rep.truncated_runs;
  }

  for (const std::int64_t n : n_values) {
    D1Level lv;
    lv.n = n;
    lv.collision_band = K * std::log(static_cast<double>(n));
    std::vector<double> R, absA, mvar;
    double q11 = 0, q12 = 0, q22 = 0;
    for (const auto& p : paths) {
      if (static_cast<std::int64_t>(p.diff.size()) <= n) continue;
      R.push_back(static_cast<double>(collision_count(p.diff, n, K)));
      double A = 0, a11 = 0, a12 = 0, a22 = 0;
      for (std::int64_t j = 0; j < n; ++j) {
        const std::int64_t s = -p.diff[static_cast<std::size_t>(j)];
        A += drift(s);
        const PhiRow& row = row_at(s);
        const double v = 0.5 * (row.phi11 + row.phi22);
        a11 += v;
        a22 += v;
        a12 += std::llabs(s) > S ? 0.0 : row.phi12;
      }
      absA.push_back(std::fabs(A));
      const double M = static_cast<double>(p.xhat[static_cast<std::size_t>(n)]) - A;
      mvar.push_back(M * M / static_cast<double>(n));
      q11 += a11 / static_cast<double>(n);
      q12 += a12 / static_cast<double>(n);
      q22 += a22 / static_cast<double>(n);
      for (const auto& ci : crossing_intervals(p.diff, n, K, b)) ++lv.w_counts[static_cast<std::size_t>(ci.type)];
    }
    if (R.empty()) throw StatisticalError("d1_diagnostics: every run was truncated before n = " + std::to_string(n));
    const auto cnt = static_cast<double>(R.size());
    const auto sR = stats::summarize(R), sA = stats::summarize(absA), sM = stats::summarize(mvar);
    lv.mean_R = sR.mean;
    lv.mean_R_over_n = sR.mean / static_cast<double>(n);
    lv.mean_abs_A = sA.mean;
    lv.abs_A_over_sqrt_n = sA.mean / std::sqrt(static_cast<double>(n));
    lv.abs_A_se = sA.se / std::sqrt(static_cast<double>(n));
    lv.mean_M_var = sM.mean;
    q11 /= cnt;
    q12 /= cnt;
    q22 /= cnt;
    const double tr = q11 + q22, det = q11 * q22 - q12 * q12;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
    lv.q_eig_max = tr / 2 + disc;
    lv.q_eig_min = tr / 2 - disc;
    auto z = [](std::int64_t a, std::int64_t c) {
      return a + c == 0 ? 0.0 : static_cast<double>(a - c) / std::sqrt(static_cast<double>(a + c));
    };
    lv.w13_z = z(lv.w_counts[1], lv.w_counts[3]);
    lv.w24_z = z(lv.w_counts[2], lv.w_counts[4]);
    rep.levels.push_back(lv);
  }

  rep.R_over_n_decreasing = true;
  rep.A_decreasing = true;
  rep.w_symmetric = true;
  for (std::size_t i = 0; i < rep.levels.size(); ++i) {
    const auto& lv = rep.levels[i];
    if (std::fabs(lv.w13_z) > 3 || std::fabs(lv.w24_z) > 3) rep.w_symmetric = false;
    if (i > 0) {
      const auto& pv = rep.levels[i - 1];
      if (!(lv.mean_R_over_n < pv.mean_R_over_n)) rep.R_over_n_decreasing = false;
      if (!(lv.abs_A_over_sqrt_n < pv.abs_A_over_sqrt_n)) rep.A_decreasing = false;
    }
  }
  rep.phi_check_separation = static_cast<std::int32_t>(std::ceil(K * std::log(static_cast<double>(n_max))));
  if (rep.phi_check_separation <= S) {
    const auto& row = rep.phi[static_cast<std::size_t>(rep.phi_check_separation)];
    rep.phi_check_z = row.drift_se > 0 ? row.drift / row.drift_se : 0.0;
    rep.phi12_check_z = row.phi12_se > 0 ? row.phi12 / row.phi12_se : 0.0;
  }
  return rep;
}

}  // namespace opbw
