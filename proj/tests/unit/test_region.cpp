#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "capmod/error.hpp"
#include "capmod/expression.hpp"
#include "capmod/region.hpp"
#include "capmod_cli/config.hpp"

namespace capmod {
namespace {

double eval(const char* text) { return Expression::parse(text).evaluate(); }

TEST(Expression, Arithmetic) {
  EXPECT_DOUBLE_EQ(eval("1 + 2 * 3"), 7.0);
  EXPECT_DOUBLE_EQ(eval("(1 + 2) * 3"), 9.0);
  EXPECT_DOUBLE_EQ(eval("2 ^ 3 ^ 2"), 512.0);
  EXPECT_DOUBLE_EQ(eval("-2 ^ 2"), -4.0);
  EXPECT_DOUBLE_EQ(eval("1/16"), 0.0625);
  EXPECT_DOUBLE_EQ(eval("e"), std::exp(1.0));
  EXPECT_DOUBLE_EQ(eval("pi"), M_PI);
  EXPECT_DOUBLE_EQ(eval("atan2(1, 1)"), M_PI / 4);
  EXPECT_DOUBLE_EQ(eval("max(1, min(5, 3))"), 3.0);
  EXPECT_DOUBLE_EQ(eval("pow(2, 10) + abs(-1) + sqrt(16)"), 1029.0);
  EXPECT_NEAR(eval("log(exp(2)) + cosh(0) + tanh(0)"), 3.0, 1e-15);
}

TEST(Expression, Variables) {
  const Expression ex = Expression::parse("1 + x^2 - y/2", {"x", "y"});
  EXPECT_FALSE(ex.is_constant());
  const std::vector<double> v{3.0, 4.0};
  EXPECT_DOUBLE_EQ(ex.evaluate(v), 8.0);
  EXPECT_TRUE(Expression::parse("2*pi", {"x"}).is_constant());
  EXPECT_DOUBLE_EQ(Expression::parse("2", {"x"}).evaluate(), 2.0);
  EXPECT_THROW(ex.evaluate(), std::exception);
}

TEST(Expression, Errors) {
  EXPECT_THROW(Expression::parse("1 +"), ConfigError);
  EXPECT_THROW(Expression::parse("(1"), ConfigError);
  EXPECT_THROW(Expression::parse("q + 1", {"x"}), ConfigError);
  EXPECT_THROW(Expression::parse("foo(1)"), ConfigError);
  EXPECT_THROW(Expression::parse("1 2"), ConfigError);
}

TEST(Expression, SplitAndTrim) {
  const auto parts = split_top_level("a, f(b, c), [d, e]");
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(trim(parts[1]), "f(b, c)");
  EXPECT_EQ(trim("  x \t"), "x");
}

TEST(Region, Primitives) {
  const GroupSpec h = GroupSpec::heisenberg(1);
  const Region b = Region::ball(1.0);
  EXPECT_TRUE(b.contains(h, h.make_point({0.5, 0.5}, {0})));
  EXPECT_TRUE(b.contains(h, h.make_point({0, 0}, {0.25})));   // gauge exactly 1
  EXPECT_FALSE(b.contains(h, h.make_point({0, 0}, {0.26})));
  const Region s = Region::shell(1.0, 2.0);
  EXPECT_FALSE(s.contains(h, h.identity()));
  EXPECT_TRUE(s.contains(h, h.make_point({1.5, 0}, {0})));
  const Region bx = Region::box({0, 0, -1}, {1, 1, 1});
  EXPECT_TRUE(bx.contains(h, h.make_point({1, 0}, {1})));
  EXPECT_FALSE(bx.contains(h, h.make_point({1.01, 0}, {0})));
  const Region hs = Region::halfspace({1, 1, 0}, 1.0);
  EXPECT_TRUE(hs.contains(h, h.make_point({0.5, 0.5}, {9})));
  EXPECT_FALSE(hs.contains(h, h.make_point({0.6, 0.5}, {9})));
  EXPECT_TRUE(Region::everything().contains(h, h.make_point({1e6, 0}, {0})));
  EXPECT_FALSE(Region().contains(h, h.identity()));
}

TEST(Region, CenteredBallIsLeftTranslate) {
  const GroupSpec h = GroupSpec::heisenberg(1);
  const Point c = h.make_point({1, 0}, {0.5});
  const Region b = Region::ball(0.7, {1, 0, 0.5});
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int s = 0; s < 2000; ++s) {
    const Point x = h.make_point({u(rng), u(rng)}, {u(rng)});
    EXPECT_EQ(b.contains(h, x), gauge_distance(h, c, x) <= 0.7);
  }
}

TEST(Region, BooleanAlgebra) {
  const GroupSpec a = GroupSpec::abelian(2);
  const Region b1 = Region::ball(1.0), b2 = Region::ball(1.0, {1, 0});
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2, 3);
  for (int s = 0; s < 2000; ++s) {
    const Point x = a.make_point({u(rng), u(rng)});
    const bool in1 = b1.contains(a, x), in2 = b2.contains(a, x);
    EXPECT_EQ(Region::unite(b1, b2).contains(a, x), in1 || in2);
    EXPECT_EQ(Region::intersect(b1, b2).contains(a, x), in1 && in2);
    EXPECT_EQ(Region::complement(b1).contains(a, x), !in1);
    EXPECT_EQ(Region::minus(b1, b2).contains(a, x), in1 && !in2);
  }
}

TEST(Region, DilationMapsMembership) {
  const GroupSpec h = GroupSpec::heisenberg(1);
  const Region r = Region::unite(Region::box({0, 0, 0}, {1, 1, 1}), Region::ball(0.5, {2, 0, 0}));
  const Region d = r.dilated(2.0);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-3, 5);
  for (int s = 0; s < 2000; ++s) {
    const Point x = h.make_point({u(rng), u(rng)}, {u(rng)});
    EXPECT_EQ(d.contains(h, dilate(h, 2.0, x)), r.contains(h, x));
  }
}

TEST(Region, BoundsAndValidation) {
  const GroupSpec h = GroupSpec::heisenberg(1);
  const auto bb = Region::box({0, 0, 0}, {1, 2, 3}).bounds(h);
  ASSERT_TRUE(bb.has_value());
  EXPECT_EQ(bb->hi[1], 2.0);
  const auto ball = Region::ball(1.0).bounds(h);
  ASSERT_TRUE(ball.has_value());
  EXPECT_GE(ball->hi[2], 0.25);
  EXPECT_FALSE(Region::everything().bounds(h).has_value());
  EXPECT_FALSE(Region::complement(Region::ball(1)).bounds(h).has_value());
  EXPECT_TRUE(Region::intersect(Region::everything(), Region::ball(1)).bounds(h).has_value());
  EXPECT_THROW(Region::box({0, 0}, {1, 1}).validate(h), DimensionError);
  EXPECT_THROW(Region::ball(1, {0, 0}).validate(h), DimensionError);
  EXPECT_NO_THROW(Region::ball(1, {0, 0, 0}).validate(h));
}

TEST(RegionParser, MatchesBuiltRegions) {
  const GroupSpec a = GroupSpec::abelian(2);
  const Region built = Region::unite(
      Region::box({0, 0}, {1, 1}),
      Region::intersect(Region::ball(0.5, {2, 0}),
                        Region::complement(Region::halfspace({1, 0}, 2.25))));
  const Region parsed = cli::parse_region(
      "box([0, 0], [1, 1]) | ball(0.5; 2, 0) & !halfspace([1, 0], 0.25 + 2)");
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 3);
  for (int s = 0; s < 4000; ++s) {
    const Point x = a.make_point({u(rng), u(rng)});
    ASSERT_EQ(parsed.contains(a, x), built.contains(a, x));
  }
}

TEST(RegionParser, DifferenceScaleAndBindings) {
  const GroupSpec a = GroupSpec::abelian(2);
  const Region r = cli::parse_region("scale(2, ball(1)) - shell(0, 1/j)", {{"j", 2.0}});
  EXPECT_FALSE(r.contains(a, a.make_point({0.4, 0})));
  EXPECT_TRUE(r.contains(a, a.make_point({0.6, 0})));
  EXPECT_TRUE(r.contains(a, a.make_point({1.9, 0})));
  EXPECT_FALSE(r.contains(a, a.make_point({2.1, 0})));
  EXPECT_FALSE(cli::parse_region("empty").contains(a, a.identity()));
  EXPECT_TRUE(cli::parse_region(" all ").contains(a, a.identity()));
  EXPECT_TRUE(cli::parse_region("(ball(1) | ball(1; 3, 0)) & halfspace([1,0], 0.5)")
                  .contains(a, a.make_point({0.2, 0})));
}

TEST(RegionParser, Errors) {
  EXPECT_THROW(cli::parse_region("ball("), ConfigError);
  EXPECT_THROW(cli::parse_region("cube(1)"), ConfigError);
  EXPECT_THROW(cli::parse_region("ball(1) |"), ConfigError);
  EXPECT_THROW(cli::parse_region("box([0], 1)"), ConfigError);
  EXPECT_THROW(cli::parse_region("ball(j)"), ConfigError);
}

}  // namespace
}  // namespace capmod
