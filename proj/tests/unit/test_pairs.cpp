#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "opbw/pairs.hpp"

using namespace opbw;

namespace {

Coord at(int a) {
  Coord c{};
  c[0] = a;
  return c;
}

SimConfig base(double p, std::int32_t steps) {
  SimConfig c;
  c.p = p;
  c.steps = steps;
  return c;
}

}  // namespace

TEST(Pairs, BlocksRoundTrip) {
  const auto cfg = base(0.75, 300);
  for (std::uint64_t r = 0; r < 10; ++r) {
    auto ps = sample_pair_start(cfg, PairLaw::kJoint, r, at(0), at(3));
    const auto rec = run_pair(ps, at(0), at(3), 300);
    ASSERT_GT(rec.count(), 0u);
    const auto blocks = xi_blocks(rec);
    const auto [w1, w2] = flatten(blocks);
    const auto i1 = increments(rec.walk1);
    const auto i2 = increments(rec.walk2);
    // Increments past the last joint regeneration are not in any block.
    ASSERT_LE(w1.size(), i1.size());
    ASSERT_TRUE(std::equal(w1.begin(), w1.end(), i1.begin()));
    ASSERT_TRUE(std::equal(w2.begin(), w2.end(), i2.begin()));
    ASSERT_EQ(w1.size(), static_cast<std::size_t>(rec.J.back()));
    // Summing increments through block m lands on X̂_m.
    Coord x = at(0), xp = at(3);
    for (std::size_t m = 0; m < blocks.size(); ++m) {
      std::int32_t t = 0, tp = 0;
      for (const auto& inc : blocks[m].walk1) {
        x = x + inc.y;
        t += inc.tau;
      }
      for (const auto& inc : blocks[m].walk2) {
        xp = xp + inc.y;
        tp += inc.tau;
      }
      ASSERT_EQ(x, blocks[m].xhat);
      ASSERT_EQ(xp, blocks[m].xhatp);
      ASSERT_EQ(t, rec.tsim[m + 1] - rec.tsim[m]);
      ASSERT_EQ(tp, t);
    }
  }
}

TEST(Pairs, StreamingTrackerMatchesIntersection) {
  const auto cfg = base(0.7, 400);
  for (std::uint64_t r = 0; r < 10; ++r) {
    auto ps = sample_pair_start(cfg, PairLaw::kJoint, r, at(-2), at(2));
    const auto rec = run_pair(ps, at(-2), at(2), 400);
    const auto again = joint_from_records(rec.walk1, rec.walk2);
    EXPECT_EQ(again.tsim, rec.tsim);
    EXPECT_EQ(again.J, rec.J);
    EXPECT_EQ(again.Jp, rec.Jp);
    EXPECT_EQ(again.xhat, rec.xhat);
    EXPECT_EQ(again.xhatp, rec.xhatp);
  }
}

TEST(Pairs, FullyOpenJointRegenerationsEveryStep) {
  auto ps = sample_pair_start(base(1.0, 100), PairLaw::kJoint, 0, at(0), at(5));
  const auto rec = run_pair(ps, at(0), at(5), 100);
  ASSERT_EQ(rec.count(), 100u);
  for (std::size_t m = 0; m <= 100; ++m) EXPECT_EQ(rec.tsim[m], static_cast<std::int32_t>(m));
}

TEST(Pairs, SameStartSameFieldCoincide) {
  const auto cfg = base(0.7, 300);
  auto ps = sample_pair_start(cfg, PairLaw::kJoint, 2, at(0), at(0));
  auto& bb = *ps.first.backbone;
  const auto same = joint_walk(bb, at(0), at(0), 300, 0, 0);
  EXPECT_EQ(same.walk1.times, same.walk2.times);
  EXPECT_EQ(same.xhat, same.xhatp);
  EXPECT_EQ(same.walk1.times.size() - 1, same.count());
  // Different fields give different walks on the same ω.
  const auto diff = joint_walk(bb, at(0), at(0), 300, 0, 1);
  EXPECT_NE(diff.walk1.positions, diff.walk2.positions);
}

TEST(Pairs, AnnulusReferenceValues) {
  EXPECT_NEAR(f_d(3, 1, 5, 1), 0.5, 1e-12);
  EXPECT_NEAR(f_d(std::exp(1.0), 1, std::exp(2.0), 2), 0.5, 1e-12);
  EXPECT_NEAR(f_d(16, 4, 64, 1), 0.2, 1e-12);
  // d = 3: (1/r1 − 1/r) / (1/r1 − 1/r2).
  EXPECT_NEAR(f_d(2, 1, 4, 3), (1 - 0.5) / (1 - 0.25), 1e-12);
  EXPECT_THROW(f_d(1, 2, 3, 1), ConfigError);
}

TEST(Pairs, CrossingTypes) {
  EXPECT_EQ(crossing_type(5, -5), 1);
  EXPECT_EQ(crossing_type(5, 7), 2);
  EXPECT_EQ(crossing_type(-5, 5), 3);
  EXPECT_EQ(crossing_type(-5, -1), 4);
  EXPECT_EQ(crossing_type(0, 3), 0);
}

TEST(Pairs, CrossingIntervalsOnAHandSequence) {
  // n = 100: n^0.5 = 10 away, K log n ≈ 4.6 back.
  const std::vector<std::int64_t> diff{0, 3, 8, 12, 11, 6, 4, 2, -3, -11, -9, -1, 0};
  const auto iv = crossing_intervals(diff, 100, 1.0, 0.5);
  ASSERT_EQ(iv.size(), 2u);
  EXPECT_EQ(iv[0].d, 3);
  EXPECT_EQ(iv[0].r, 6);
  EXPECT_EQ(iv[1].d, 9);
  EXPECT_EQ(iv[1].r, 11);
  EXPECT_EQ(iv[0].type, 0);
  EXPECT_EQ(iv[1].type, 1);
  EXPECT_EQ(collision_count(diff, 100, 1.0), 7);
}

TEST(Pairs, DiagnosticsRejectHigherDimensions) {
  SimConfig c = base(0.8, 100);
  c.d = 2;
  EXPECT_THROW(d1_diagnostics(c, {10}, 2, 10, 2, 1, 0.3), ConfigError);
}

TEST(Pairs, KernelTvNeedsDistinctStarts) {
  EXPECT_THROW(kernel_tv_estimate(base(0.8, 100), at(0), at(0), 10, default_projection()), ConfigError);
}

TEST(Pairs, IndependentWalksAreUncorrelated) {
  const auto cfg = base(0.8, 200);
  constexpr int n = 600;
  std::vector<double> a, b;
  for (int r = 0; r < n; ++r) {
    const auto rec = independent_pair_walk(cfg, static_cast<std::uint64_t>(r), at(0), at(1), 200);
    a.push_back(static_cast<double>(rec.walk1.positions.back()[0]));
    b.push_back(static_cast<double>(rec.walk2.positions.back()[0] - 1));
  }
  double ma = 0, mb = 0;
  for (int i = 0; i < n; ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (int i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  EXPECT_LT(std::abs(sab / std::sqrt(saa * sbb)), 3 / std::sqrt(static_cast<double>(n)));
  // The difference of two independent centred walks has mean zero.
  std::vector<double> d;
  for (int i = 0; i < n; ++i) d.push_back(a[i] - b[i]);
  const auto s = stats::summarize(d);
  EXPECT_LT(std::abs(s.mean), 3 * s.se);
}

TEST(Pairs, IndependentFirstBlockLawIgnoresSeparation) {
  const auto cfg = base(0.8, 100);
  constexpr int n = 1500;
  std::vector<std::int64_t> near(8, 0), far(8, 0);
  for (int r = 0; r < n; ++r) {
    const auto a = sample_first_block(cfg, PairLaw::kIndependent, static_cast<std::uint64_t>(r), at(0), at(1));
    const auto b = sample_first_block(cfg, PairLaw::kIndependent, static_cast<std::uint64_t>(r + n), at(0), at(20));
    ASSERT_TRUE(a && b);
    std::int32_t ta = 0, tb = 0;
    for (const auto& inc : a->walk1) ta += inc.tau;
    for (const auto& inc : b->walk1) tb += inc.tau;
    near[std::min(ta, 7)]++;
    far[std::min(tb, 7)]++;
  }
  EXPECT_GT(stats::chi2_homogeneity(near, far).pvalue, 0.001);
}

TEST(Pairs, SeparationWarnsOutsideRegime) {
  const auto res = separation_time_experiment(base(0.8, 100), {16}, 5, 0.3, 0.7);
  EXPECT_FALSE(res.warnings.empty());
  const auto ok = separation_time_experiment(base(0.8, 100), {16}, 5, 0.3, 0.3);
  EXPECT_TRUE(ok.warnings.empty());
}

TEST(Pairs, JointFirstBlockIsSpatiallyHomogeneous) {
  const auto cfg = base(0.8, 100);
  constexpr int n = 1500;
  const auto proj = default_projection();
  std::vector<std::int64_t> here(static_cast<std::size_t>(proj.bins), 0), there(here.size(), 0);
  for (int r = 0; r < n; ++r) {
    const auto a = sample_first_block(cfg, PairLaw::kJoint, static_cast<std::uint64_t>(r), at(0), at(4));
    const auto b = sample_first_block(cfg, PairLaw::kJoint, static_cast<std::uint64_t>(r + n), at(10), at(14));
    ASSERT_TRUE(a && b);
    here[static_cast<std::size_t>(proj.map(*a, at(0), at(4)))]++;
    there[static_cast<std::size_t>(proj.map(*b, at(10), at(14)))]++;
  }
  EXPECT_GT(stats::chi2_homogeneity(here, there).pvalue, 0.001);
}
