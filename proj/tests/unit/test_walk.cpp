#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <memory>

#include "opbw/perc.hpp"
#include "opbw/stats.hpp"
#include "opbw/walk.hpp"
#include "lemma.hpp"
#include "oracles.hpp"

using namespace opbw;

namespace {

Coord at(int a) {
  Coord c{};
  c[0] = a;
  return c;
}

SimConfig box(double p, std::int32_t H, std::int32_t L, std::vector<Coord> offsets = {}) {
  SimConfig c;
  c.p = p;
  c.steps = 1;
  c.horizon = H;
  c.half_width = L;
  c.offsets = std::move(offsets);
  return c.resolved();
}

std::vector<Coord> xs(const std::vector<Site>& path) {
  std::vector<Coord> out;
  for (const auto& s : path) out.push_back(s.x);
  return out;
}

std::vector<Coord> line(std::initializer_list<int> v) {
  std::vector<Coord> out;
  for (int a : v) out.push_back(at(a));
  return out;
}

// The two-neighbour configuration drawn for γ_1..γ_4: open/closed sites in
// layers 0..3 and the first element of every permutation (offset index 0 is
// −1, index 1 is +1).
Environment figure_environment() {
  SimConfig c;
  c.offsets = pm1_offsets();
  c.steps = 1;
  c.horizon = 4;
  c.half_width = 5;
  Environment env(c.resolved(), 0);
  for (int n = 0; n <= 3; ++n) {
    for (int x = -5; x <= 5; ++x) env.set_omega(Site{at(x), n}, false);
  }
  for (auto [x, n] : {std::pair{0, 0}, {-1, 1}, {1, 1}, {2, 2}, {-2, 2}, {-3, 3}, {-1, 3}}) {
    env.set_omega(Site{at(x), n}, true);
  }
  const std::vector<std::uint8_t> left{0, 1}, right{1, 0};
  const std::map<std::pair<int, int>, bool> first_right{
      {{0, 0}, true},  {{-1, 1}, true}, {{1, 1}, false}, {{-2, 2}, false}, {{0, 2}, true},
      {{2, 2}, true},  {{-3, 3}, true}, {{-1, 3}, true}, {{1, 3}, false},  {{3, 3}, true},
  };
  for (const auto& [site, r] : first_right) env.set_permutation(Site{at(site.first), site.second}, 0, r ? right : left);
  return env;
}

}  // namespace

TEST(Walk, FigureGammaPaths) {
  const Environment env = figure_environment();
  const BackboneField bb(env);
  const Site o{at(0), 0};
  EXPECT_EQ(xs(gamma_from_scratch(bb, o, 1)), line({0, 1}));
  EXPECT_EQ(xs(gamma_from_scratch(bb, o, 2)), line({0, 1, 0}));
  EXPECT_EQ(xs(gamma_from_scratch(bb, o, 3)), line({0, 1, 2, 3}));
  EXPECT_EQ(xs(gamma_from_scratch(bb, o, 4)), line({0, -1, -2, -3, -2}));
}

TEST(Walk, IncrementalGammaMatchesScratch) {
  for (std::uint64_t r = 0; r < 60; ++r) {
    const auto env = generate_environment(box(0.6 + 0.005 * static_cast<double>(r % 40), 24, 25), r);
    const BackboneField bb(env);
    for (int x = -3; x <= 3; ++x) {
      const Site s{at(x), 0};
      if (!bb.xi(s)) continue;
      GammaState st = gamma_init(bb, s);
      for (std::int32_t k = 1; k <= 20; ++k) {
        gamma_extend(st, bb);
        ASSERT_EQ(st.path, gamma_from_scratch(bb, s, k)) << r << " " << x << " " << k;
      }
    }
  }
}

TEST(Walk, FullyOpenGammaNeverRebuilds) {
  const auto env = generate_environment(box(1.0, 30, 31), 3);
  const BackboneField bb(env);
  const Site o{at(0), 0};
  GammaState st = gamma_init(bb, o);
  for (std::int32_t k = 1; k <= 25; ++k) {
    const auto before = st.path;
    EXPECT_TRUE(gamma_extend(st, bb));
    ASSERT_TRUE(std::equal(before.begin(), before.end(), st.path.begin()));
    const Site& prev = before.back();
    EXPECT_EQ(st.end(), env.successor(prev, env.permutation(prev)[0]));
  }
}

TEST(Walk, LemmaPropertiesOnRandomEnvironments) {
  constexpr std::int32_t H = 18;
  lemma::Tally t;
  for (std::uint64_t r = 0; r < 150; ++r) {
    const auto env = generate_environment(box(0.55 + 0.002 * static_cast<double>(r), H, H + 1), 1000 + r);
    const BackboneField bb(env);
    for (int x = -2; x <= 2; ++x) {
      if (bb.xi(Site{at(x), 0})) lemma::check(bb, Site{at(x), 0}, 12, t);
    }
  }
  EXPECT_EQ(t.violations, 0) << t.first;
  EXPECT_GT(t.checks_e, 20);
  EXPECT_GT(t.checks_c, 100);
}

TEST(Walk, DirectStepSingleBackboneNeighbour) {
  auto env = generate_environment(box(1.0, 10, 11), 0);
  env.set_omega(Site{at(-1), 1}, false);
  env.set_omega(Site{at(0), 1}, false);
  const BackboneField bb(env);
  for (std::uint64_t w = 0; w < 200; ++w) EXPECT_EQ(direct_step(bb, Site{at(0), 0}, rng::mix64(w)), at(1));
}

TEST(Walk, DirectStepUniformWhenFullyOpen) {
  const auto env = generate_environment(box(1.0, 4, 5), 0);
  const BackboneField bb(env);
  std::array<std::int64_t, 3> c{};
  constexpr int n = 30000;
  for (std::uint64_t w = 0; w < n; ++w) c[direct_step(bb, Site{at(0), 0}, rng::mix64(w + 17))[0] + 1]++;
  const double se = std::sqrt((1.0 / 3) * (2.0 / 3) / n);
  for (auto v : c) EXPECT_NEAR(static_cast<double>(v) / n, 1.0 / 3, 3 * se);
}

TEST(Walk, DirectStepWeightedByCapacity) {
  SimConfig c;
  c.offsets = pm1_offsets();
  c.capacity = CapacityLaw::uniform(1, 3);
  c.steps = 1;
  c.horizon = 4;
  c.half_width = 5;
  c.p = 1;
  Environment env(c.resolved(), 0);
  env.materialize();
  env.set_capacity(Site{at(-1), 1}, 2);
  env.set_capacity(Site{at(1), 1}, 1);
  const BackboneField bb(env);
  constexpr int n = 100000;
  std::int64_t left = 0;
  for (std::uint64_t w = 0; w < n; ++w) left += direct_step(bb, Site{at(0), 0}, rng::mix64(w)) == at(-1);
  const double se = std::sqrt((2.0 / 9) / n);
  EXPECT_NEAR(static_cast<double>(left) / n, 2.0 / 3, 3 * se);
}

TEST(Walk, PathLawOfGammaEqualsDirectWalk) {
  const auto cfg = box(0.7, 40, 45);
  std::uint64_t replica = 0;
  std::shared_ptr<Environment> env;
  // First replica with the origin on the backbone and a branching path law.
  for (;; ++replica) {
    env = std::make_shared<Environment>(generate_environment(cfg, replica));
    const BackboneField bb(*env);
    if (bb.xi(Site{at(0), 0}) &&
        oracle::path_law(*env, Site{at(0), 0}, 4, [&](const Site& y) { return bb.xi(y); }).size() >= 6) {
      break;
    }
  }
  const BackboneField bb(*env);
  const auto law = oracle::path_law(*env, Site{at(0), 0}, 4, [&](const Site& y) { return bb.xi(y); });
  std::map<std::vector<Coord>, std::size_t> cell;
  std::vector<double> probs;
  for (const auto& [path, p] : law) {
    cell[path] = probs.size();
    probs.push_back(p);
  }
  constexpr int n = 20000;
  std::vector<std::int64_t> gamma(probs.size(), 0), direct(probs.size(), 0);
  for (int i = 0; i < n; ++i) {
    // Walk i of the γ construction uses permutation field i on the same ω.
    std::vector<Coord> path{at(0)};
    Site s{at(0), 0};
    for (int j = 0; j < 4; ++j) {
      s = m_infinity(bb, s, i);
      path.push_back(s.x);
    }
    ASSERT_TRUE(cell.count(path));
    gamma[cell[path]]++;
    const auto w = direct_walk(bb, Site{at(0), 0}, 4, static_cast<std::uint64_t>(i));
    ASSERT_TRUE(cell.count(w.positions));
    direct[cell[w.positions]]++;
  }
  EXPECT_GT(stats::chi2_gof(gamma, probs).pvalue, 0.001);
  EXPECT_GT(stats::chi2_gof(direct, probs).pvalue, 0.001);
  EXPECT_GT(stats::chi2_homogeneity(gamma, direct).pvalue, 0.001);
}

TEST(Walk, FullyOpenRegeneratesEveryStep) {
  SimConfig c;
  c.p = 1;
  c.steps = 200;
  const auto cs = sample_conditioned_start(c, 0);
  EXPECT_EQ(cs.rejections, 0);
  const auto w = coupled_walk(*cs.backbone, Site{}, 200);
  ASSERT_EQ(w.regen.count(), 200u);
  for (std::size_t j = 1; j <= 200; ++j) {
    EXPECT_EQ(w.regen.times[j], static_cast<std::int32_t>(j));
    EXPECT_EQ(w.regen.tau(j), 1);
    const Site prev{w.path.positions[j - 1], static_cast<std::int32_t>(j - 1)};
    EXPECT_EQ(w.regen.y(j), cs.env->config().offsets[cs.env->permutation(prev)[0]]);
  }
}

TEST(Walk, CoupledWalkInvariants) {
  SimConfig c;
  c.p = 0.7;
  c.steps = 400;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto cs = sample_conditioned_start(c, r);
    auto& bb = *cs.backbone;
    const auto w = coupled_walk(bb, Site{}, c.steps);
    for (std::size_t k = 0; k < w.path.positions.size(); ++k) {
      ASSERT_TRUE(bb.xi(Site{w.path.positions[k], static_cast<std::int32_t>(k)}));
      if (k) ASSERT_LE(sup_norm(w.path.positions[k] - w.path.positions[k - 1]), 1);
    }
    for (std::size_t j = 1; j <= w.regen.count(); ++j) {
      ASSERT_LE(sup_norm(w.regen.y(j)), w.regen.tau(j));
    }
    // The walk up to a regeneration time is γ at that time.
    if (w.regen.count() >= 3) {
      const std::int32_t t = w.regen.times[3];
      const auto g = gamma_from_scratch(bb, Site{}, t);
      for (std::int32_t m = 0; m <= t; ++m) ASSERT_EQ(g[m].x, w.path.positions[m]);
    }
    // Exploration finds the same T_1.
    const auto ex = exploration_schedule(bb, Site{}, c.steps);
    if (w.regen.count() >= 1) {
      ASSERT_TRUE(ex.t1.has_value());
      ASSERT_EQ(*ex.t1, w.regen.times[1]);
    }
  }
}

TEST(Walk, ExplorationImmediateSuccess) {
  SimConfig c;
  c.p = 1;
  c.steps = 50;
  const auto cs = sample_conditioned_start(c, 0);
  const auto ex = exploration_schedule(*cs.backbone, Site{}, 50);
  EXPECT_EQ(ex.restarts, 0);
  EXPECT_EQ(ex.t1, 1);
}

TEST(Walk, ExplorationRestartsAreGeometricLike) {
  SimConfig c;
  c.p = 0.8;
  c.steps = 200;
  constexpr int n = 4000;
  std::vector<std::int64_t> at_least(8, 0);
  std::int64_t rejections = 0;
  for (int r = 0; r < n; ++r) {
    const auto cs = sample_conditioned_start(c, static_cast<std::uint64_t>(r));
    rejections += cs.rejections;
    const auto ex = exploration_schedule(*cs.backbone, Site{}, c.steps);
    ASSERT_TRUE(ex.t1.has_value());
    for (int k = 0; k < 8 && k <= ex.restarts; ++k) at_least[k]++;
  }
  // Success probability per attempt is at least P(B_0), estimated by the
  // acceptance rate of the conditioning.
  const double pb0 = static_cast<double>(n) / static_cast<double>(n + rejections);
  const double se0 = std::sqrt(pb0 * (1 - pb0) / static_cast<double>(n + rejections));
  for (int k = 0; k + 1 < 8 && at_least[k] >= 100; ++k) {
    const double ratio = static_cast<double>(at_least[k + 1]) / static_cast<double>(at_least[k]);
    const double se = std::sqrt(ratio * (1 - ratio) / static_cast<double>(at_least[k]));
    EXPECT_LE(ratio, 1 - pb0 + 3 * (se + se0)) << k;
  }
}

TEST(Walk, ConditioningAcceptanceMatchesSurvival) {
  // Acceptance ≈ P(B_0) = p · P(survive to H | origin open).
  SimConfig c;
  c.p = 0.6;
  c.steps = 100;
  const SimConfig rc = c.resolved();
  constexpr int n = 3000;
  std::int64_t tries = 0;
  for (int r = 0; r < n; ++r) tries += 1 + sample_conditioned_start(c, static_cast<std::uint64_t>(r)).rejections;
  const double acc = static_cast<double>(n) / static_cast<double>(tries);
  const double acc_se = std::sqrt(acc * (1 - acc) / static_cast<double>(tries));
  SimConfig pc = rc;
  const auto rows = estimate_pc(pc, {0.6}, 6000);
  const double theta = 0.6 * rows[0].frequency;
  const double theta_se = 0.6 * std::sqrt(rows[0].frequency * (1 - rows[0].frequency) / 6000.0);
  EXPECT_NEAR(acc, theta, 3 * std::hypot(acc_se, theta_se));
}

TEST(Walk, SubcriticalConditioningGivesUp) {
  SimConfig c;
  c.p = 0.2;
  c.steps = 200;
  EXPECT_THROW(sample_conditioned_start(c, 0, 200), StatisticalError);
}

TEST(Walk, DirectWalkIsDeterministicPerWalker) {
  SimConfig c;
  c.p = 0.75;
  c.steps = 300;
  const auto a = sample_conditioned_start(c, 4);
  const auto b = sample_conditioned_start(c, 4);
  EXPECT_EQ(direct_walk(*a.backbone, Site{}, 300, 9).positions, direct_walk(*b.backbone, Site{}, 300, 9).positions);
  EXPECT_NE(direct_walk(*a.backbone, Site{}, 300, 9).positions, direct_walk(*a.backbone, Site{}, 300, 10).positions);
}
