#include <gtest/gtest.h>

#include <sstream>

#include "opbw/config.hpp"

using namespace opbw;

namespace {

Coord c1(int a) {
  Coord c{};
  c[0] = a;
  return c;
}

}  // namespace

TEST(Config, DefaultsResolve) {
  const SimConfig c = SimConfig{}.resolved();
  EXPECT_EQ(c.offsets.size(), 3u);
  EXPECT_EQ(c.horizon, c.steps + c.slack);
  EXPECT_EQ(c.half_width, c.steps + c.horizon);
}

TEST(Config, DefaultOffsetsD1AreLexicographic) {
  const auto u = default_offsets(1);
  ASSERT_EQ(u.size(), 3u);
  EXPECT_EQ(u[0], c1(-1));
  EXPECT_EQ(u[1], c1(0));
  EXPECT_EQ(u[2], c1(1));
}

TEST(Config, DefaultOffsetCountIsThreeToTheD) {
  EXPECT_EQ(default_offsets(2).size(), 9u);
  EXPECT_EQ(default_offsets(3).size(), 27u);
}

TEST(Config, PRangeEnforced) {
  SimConfig c;
  c.p = 0;
  EXPECT_THROW(c.resolved(), ConfigError);
  c.p = 1.2;
  EXPECT_THROW(c.resolved(), ConfigError);
  c.p = 1;
  EXPECT_NO_THROW(c.resolved());
}

TEST(Config, AsymmetricNeighbourhoodRejected) {
  SimConfig c;
  c.offsets = {c1(0), c1(1)};
  EXPECT_THROW(c.resolved(), ConfigError);
}

TEST(Config, ConeSufficiencyEnforced) {
  SimConfig c;
  c.steps = 10;
  c.horizon = 20;
  c.half_width = 29;
  EXPECT_THROW(c.resolved(), ConfigError);
  c.half_width = 30;
  EXPECT_NO_THROW(c.resolved());
}

TEST(Config, ParseFileAndReportKeys) {
  std::istringstream in(
      "# comment\n"
      "neighborhood = 1,0;-1,0;0,1;0,-1\n"
      "d = 2\n"
      "p = 0.7  # trailing\n"
      "capacity_law = uniform:1:3\n");
  std::set<std::string> keys;
  const SimConfig c = parse_config(in, &keys);
  EXPECT_EQ(c.d, 2);
  EXPECT_DOUBLE_EQ(c.p, 0.7);
  EXPECT_EQ(c.offsets.size(), 4u);
  EXPECT_EQ(c.capacity.to_string(), "uniform:1:3");
  EXPECT_EQ(keys, (std::set<std::string>{"neighborhood", "d", "p", "capacity_law"}));
}

TEST(Config, UnknownKeyIsAnError) {
  std::istringstream in("colour = blue\n");
  EXPECT_THROW(parse_config(in), ConfigError);
}

TEST(Config, Pm1OnlyInOneDimension) {
  EXPECT_EQ(parse_offsets("pm1", 1).size(), 2u);
  EXPECT_THROW(parse_offsets("pm1", 2), ConfigError);
}

TEST(Config, CapacityLawRoundTrip) {
  for (const char* s : {"const:1", "const:4", "uniform:2:5", "geometric:0.25", "table:1=0.5,3=0.5"}) {
    const auto law = CapacityLaw::parse(s);
    EXPECT_EQ(CapacityLaw::parse(law.to_string()).to_string(), law.to_string()) << s;
  }
  EXPECT_THROW(CapacityLaw::parse("poisson:3"), ConfigError);
}

TEST(Config, FingerprintTracksEveryField) {
  const SimConfig a = SimConfig{}.resolved();
  SimConfig b = a;
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  b.base_seed = 2;
  EXPECT_NE(a.fingerprint(), b.fingerprint());
  b = a;
  b.p = 0.8000000001;
  EXPECT_NE(a.fingerprint(), b.fingerprint());
}
