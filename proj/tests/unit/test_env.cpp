#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "opbw/env.hpp"
#include "opbw/stats.hpp"

using namespace opbw;

namespace {

SimConfig box(double p, int d, std::int32_t H, std::int32_t L) {
  SimConfig c;
  c.p = p;
  c.d = d;
  c.steps = 1;
  c.horizon = H;
  c.half_width = L;
  return c.resolved();
}

Coord at(int a, int b = 0) {
  Coord c{};
  c[0] = a;
  c[1] = b;
  return c;
}

}  // namespace

TEST(Env, FullyOpenWhenPIsOne) {
  const auto env = generate_environment(box(1.0, 2, 6, 7), 3);
  EXPECT_EQ(env.open_fraction(), 1.0);
  EXPECT_TRUE(env.omega(Site{at(-7, 7), 6}));
}

TEST(Env, OutOfBoxQueryIsAnError) {
  const auto env = generate_environment(box(0.5, 1, 10, 11), 0);
  EXPECT_THROW(env.omega(Site{at(0), 11}), QueryError);
  EXPECT_THROW(env.omega(Site{at(12), 3}), QueryError);
  EXPECT_THROW(env.permutation(Site{at(0), 10}), QueryError);
}

TEST(Env, RegenerationIsBitExact) {
  const auto cfg = box(0.8, 1, 63, 64);
  const auto a = generate_environment(cfg, 0);
  const auto b = generate_environment(cfg, 0);
  EXPECT_EQ(a.bits(), b.bits());
}

TEST(Env, ReplicasDifferAtIndependenceRate) {
  const auto cfg = box(0.8, 1, 63, 64);
  const auto a = generate_environment(cfg, 0);
  const auto b = generate_environment(cfg, 1);
  std::int64_t diff = 0;
  const auto n = static_cast<std::int64_t>(a.box_site_count());
  for (std::int32_t t = 0; t <= cfg.horizon; ++t) {
    for (int x = -cfg.half_width; x <= cfg.half_width; ++x) diff += a.omega(Site{at(x), t}) != b.omega(Site{at(x), t});
  }
  const double q = 2 * 0.8 * 0.2;
  const double se = std::sqrt(q * (1 - q) / static_cast<double>(n));
  EXPECT_NEAR(static_cast<double>(diff) / static_cast<double>(n), q, 4 * se);
}

TEST(Env, OpenFractionNearP) {
  for (double p : {0.3, 0.55, 0.8}) {
    const auto env = generate_environment(box(p, 2, 20, 21), 5);
    const double n = static_cast<double>(env.box_site_count());
    ASSERT_GE(n, 1e4);
    EXPECT_NEAR(env.open_fraction(), p, 4 * std::sqrt(p * (1 - p) / n)) << p;
  }
}

TEST(Env, LazyAndStoredFieldsAgreeInAnyQueryOrder) {
  const auto cfg = box(0.6, 2, 8, 9);
  const auto stored = generate_environment(cfg, 7);
  const auto lazy = lazy_environment(cfg, 7);
  std::vector<Site> sites;
  for (int t = 0; t <= 8; ++t) {
    for (int x = -9; x <= 9; ++x) {
      for (int y = -9; y <= 9; ++y) sites.push_back(Site{at(x, y), t});
    }
  }
  std::mt19937 g(1);
  std::shuffle(sites.begin(), sites.end(), g);
  for (const auto& s : sites) {
    ASSERT_EQ(stored.omega(s), lazy.omega(s));
    if (s.n < 8) {
      const auto p1 = lazy.permutation(s);
      const auto p2 = stored.permutation(s);
      ASSERT_TRUE(std::equal(p1.begin(), p1.end(), p2.begin(), p2.end()));
    }
  }
}

TEST(Env, SingleOffsetPermutation) {
  SimConfig c;
  c.offsets = {Coord{}};
  c.steps = 1;
  c.horizon = 3;
  c.half_width = 1;
  const Environment env(c.resolved(), 1);
  const auto perm = env.permutation(Site{Coord{}, 0});
  ASSERT_EQ(perm.size, 1);
  EXPECT_EQ(perm[0], 0);
}

TEST(Env, UniformPermutationsWithConstantCapacity) {
  const auto cfg = box(0.8, 1, 1, 60000);
  const Environment env(cfg, 11);
  std::map<std::vector<int>, std::int64_t> counts;
  std::array<std::int64_t, 3> first{};
  std::int64_t sites = 0;
  for (int x = -50000; x < 50000; ++x) {
    const auto perm = env.permutation(Site{at(x), 0});
    counts[{perm[0], perm[1], perm[2]}]++;
    first[perm[0]]++;
    ++sites;
  }
  ASSERT_EQ(counts.size(), 6u);
  std::vector<std::int64_t> obs;
  for (const auto& [k, v] : counts) obs.push_back(v);
  const std::vector<double> probs(6, 1.0 / 6);
  EXPECT_GT(stats::chi2_gof(obs, probs).pvalue, 0.01);
  const double se = std::sqrt((1.0 / 3) * (2.0 / 3) / static_cast<double>(sites));
  for (auto f : first) EXPECT_NEAR(static_cast<double>(f) / static_cast<double>(sites), 1.0 / 3, 4 * se);
}

TEST(Env, WeightedPermutationFollowsCapacities) {
  // |U| = 2 with K(left) = 3, K(right) = 1: left first with probability 3/4.
  SimConfig c;
  c.offsets = pm1_offsets();
  c.capacity = CapacityLaw::uniform(1, 3);
  c.steps = 1;
  c.horizon = 1;
  c.half_width = 250000;
  Environment env(c.resolved(), 2);
  std::int64_t left = 0, n = 0;
  for (int x = -200000; x < 200000; x += 4) {
    env.set_capacity(Site{at(x - 1), 1}, 3);
    env.set_capacity(Site{at(x + 1), 1}, 1);
    left += env.permutation(Site{at(x), 0})[0] == 0;
    ++n;
  }
  const double se = std::sqrt(0.75 * 0.25 / static_cast<double>(n));
  EXPECT_NEAR(static_cast<double>(left) / static_cast<double>(n), 0.75, 3 * se);
}

TEST(Env, NeighbourhoodOrder) {
  const auto u = neighborhood(Site{at(0), 0}, box(0.5, 1, 4, 5));
  ASSERT_EQ(u.size(), 3u);
  EXPECT_EQ(u[0].x, at(-1));
  EXPECT_EQ(u[1].x, at(0));
  EXPECT_EQ(u[2].x, at(1));
  for (const auto& s : u) EXPECT_EQ(s.n, 1);

  SimConfig fig;
  fig.offsets = pm1_offsets();
  fig.steps = 1;
  fig.horizon = 4;
  fig.half_width = 5;
  const auto v = neighborhood(Site{at(0), 0}, fig.resolved());
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].x, at(-1));
  EXPECT_EQ(v[1].x, at(1));

  EXPECT_EQ(neighborhood(Site{at(0, 0), 0}, box(0.5, 2, 4, 5)).size(), 9u);
}

TEST(Env, DumpRoundTrip) {
  const auto env = generate_environment(box(0.6, 2, 5, 6), 9);
  std::stringstream buf;
  env.write_dump(buf);
  const std::string bytes = buf.str();
  ASSERT_EQ(bytes.substr(0, 4), "OPBW");
  EXPECT_EQ(bytes.size(), 16 + (env.box_site_count() + 7) / 8);
  const auto back = Environment::read_dump(buf);
  EXPECT_FALSE(back.has_seed());
  EXPECT_EQ(back.box_site_count(), env.box_site_count());
  EXPECT_EQ(back.bits(), env.bits());
  for (int t = 0; t <= 5; ++t) {
    for (int x = -6; x <= 6; ++x) {
      for (int y = -6; y <= 6; ++y) ASSERT_EQ(back.omega(Site{at(x, y), t}), env.omega(Site{at(x, y), t}));
    }
  }
}

TEST(Env, FullyOpenDumpHasAllBitsSet) {
  const auto env = generate_environment(box(1.0, 1, 7, 8), 0);
  std::stringstream buf;
  env.write_dump(buf);
  const std::string bytes = buf.str();
  const std::uint64_t count = env.box_site_count();
  for (std::uint64_t i = 0; i < count; ++i) {
    ASSERT_TRUE((static_cast<unsigned char>(bytes[16 + i / 8]) >> (i % 8)) & 1U);
  }
}

TEST(Env, CorruptDumpRejected) {
  std::stringstream bad("XXXX0000000000000000");
  EXPECT_THROW(Environment::read_dump(bad), Error);
  const auto env = generate_environment(box(0.5, 1, 7, 8), 0);
  std::stringstream buf;
  env.write_dump(buf);
  std::string s = buf.str();
  s.resize(s.size() - 3);
  std::stringstream cut(s);
  EXPECT_THROW(Environment::read_dump(cut), Error);
}
