#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "capmod/error.hpp"
#include "capmod/modulus.hpp"

namespace capmod {
namespace {

// Unit square between plates {x <= 0} and {x >= 1}; the plates are one
// column of cells wide.
Condenser square(double h, double lambda = 1.0) {
  const Condenser c(GroupSpec::abelian(2), MetricSpec::euclidean(2), Region::box({-h, 0}, {1 + h, 1}),
                    Region::box({-1, -1}, {0, 2}), Region::box({1, -1}, {2, 2}));
  return lambda == 1.0 ? c : c.dilated(lambda);
}

ModulusOptions options(double p = 2.0) {
  ModulusOptions o;
  o.p = p;
  o.tol = 1e-4;
  o.max_iter = 400;
  return o;
}

TEST(ShortestViolatedCurve, ZeroAndUnitDensity) {
  const double h = 1.0 / 16;
  const auto graph = build_horizontal_graph(build_grid(square(h), h), 1);
  const MetricSpec& m = graph->grid().metric();
  const ViolatedCurve zero = shortest_violated_curve(*graph, m, DensityField::constant(graph->grid_ptr(), 0.0));
  ASSERT_TRUE(zero.found);
  EXPECT_EQ(zero.rho_length, 0.0);
  const ViolatedCurve one = shortest_violated_curve(*graph, m, DensityField::constant(graph->grid_ptr(), 1.0));
  ASSERT_TRUE(one.found);
  EXPECT_NEAR(one.rho_length, 1.0, 2 * h);
  // The path is a horizontal straight segment.
  EXPECT_NEAR(one.path.front().x1[1], one.path.back().x1[1], 1e-12);
  EXPECT_NEAR(one.rho_length, rho_length(m, DensityField::constant(graph->grid_ptr(), 1.0), one.path), 2 * h);
}

TEST(Modulus, UnitSquare) {
  const double h = 1.0 / 32;
  const ModulusReport r = solve_modulus(square(h), h, options());
  const double ball = M_PI;  // Lebesgue area of the unit disc
  EXPECT_NEAR(r.value * ball, 1.0, 0.05);
  EXPECT_LE(r.lower_bound, r.value * (1 + 1e-12));
  EXPECT_GE(r.lower_bound, r.value * (1 - 1e-3));
  EXPECT_FALSE(r.max_iter_reached);
  EXPECT_FALSE(r.empty_family);
  EXPECT_FALSE(r.active_family.empty());
}

TEST(Modulus, ReportedDensityIsAdmissible) {
  const double h = 1.0 / 16;
  const auto graph = build_horizontal_graph(build_grid(square(h), h), 2);
  const ModulusReport r = solve_modulus(*graph, options());
  r.density.check();
  EXPECT_NEAR(r.density.energy(2.0), r.value, 1e-12 * r.value);
  const ViolatedCurve v = shortest_violated_curve(*graph, graph->grid().metric(), r.density);
  EXPECT_GE(v.rho_length, 1.0 - 1e-9);
  for (const CurvePath& c : r.active_family) {
    EXPECT_GE(rho_length(graph->grid().metric(), r.density, c), 1.0 - 1e-9);
  }
}

TEST(Modulus, TraceIsMonotone) {
  const double h = 1.0 / 16;
  const ModulusReport r = solve_modulus(square(h), h, options(3.0), 2);
  ASSERT_GE(r.trace.size(), 2u);
  for (std::size_t k = 1; k < r.trace.size(); ++k) {
    EXPECT_GE(r.trace[k].objective, r.trace[k - 1].objective * (1 - 1e-9));
    EXPECT_GE(r.trace[k].lower_bound, r.trace[k - 1].lower_bound * (1 - 1e-9));
    EXPECT_GE(r.trace[k].family_size, r.trace[k - 1].family_size);
  }
}

TEST(Modulus, EmptyFamilyIsZero) {
  const Region d = Region::minus(Region::box({0, 0}, {1, 1}), Region::box({0.45, -1}, {0.55, 2}));
  const Condenser c(GroupSpec::abelian(2), MetricSpec::euclidean(2), d, Region::box({0, 0}, {0.1, 1}),
                    Region::box({0.9, 0}, {1, 1}));
  const ModulusReport r = solve_modulus(c, 0.05, options());
  EXPECT_TRUE(r.empty_family);
  EXPECT_EQ(r.value, 0.0);
}

TEST(Modulus, SubfamilyMonotonicity) {
  const double h = 1.0 / 16;
  const Condenser big = square(h);
  const Condenser small = big.with_plates(Region::box({-1, 0.25}, {0, 0.75}), Region::box({1, 0.25}, {2, 0.75}));
  const double m_big = solve_modulus(big, h, options()).value;
  const double m_small = solve_modulus(small, h, options()).value;
  EXPECT_LE(m_small, m_big * (1 + 1e-4));
  EXPECT_GT(m_small, 0.0);
}

TEST(Modulus, ScalingLawOnSameDiscreteProblem) {
  // The dilated condenser on the dilated lattice is the same discrete problem
  // with lengths times 2 and measures times 4.
  const double h = 1.0 / 16;
  for (double p : {2.0, 3.0}) {
    const double m1 = solve_modulus(square(h), h, options(p)).value;
    const double m2 = solve_modulus(square(h, 2.0), 2 * h, options(p)).value;
    EXPECT_NEAR(m2 / m1, std::pow(2.0, 2.0 - p), 1e-6);
  }
}

TEST(Modulus, RejectsBadExponent) {
  ModulusOptions o = options(1.0);
  EXPECT_THROW(solve_modulus(square(0.125), 0.125, o), ConfigError);
}

TEST(Mollifier, BumpNormalization) {
  // Independent midpoint rule for Q int r^(Q-1) phi(r) dr.
  for (int q : {2, 4}) {
    const int n = 200000;
    double s = 0.0;
    for (int k = 0; k < n; ++k) {
      const double r = (k + 0.5) / n;
      s += q * std::pow(r, q - 1) * standard_bump(r) / n;
    }
    EXPECT_NEAR(bump_normalization(q, standard_bump), s, 1e-9);
  }
  EXPECT_EQ(standard_bump(1.0), 0.0);
  EXPECT_GT(standard_bump(0.5), 0.0);
}

TEST(Mollifier, KernelMassIsOne) {
  const Condenser ca(GroupSpec::abelian(2), MetricSpec::euclidean(2), Region::box({-1, -1}, {1, 1}),
                     Region::box({-1, -1}, {-0.9, 1}), Region::box({0.9, -1}, {1, 1}));
  const auto ga = build_grid(ca, 1.0 / 64);
  for (double t : {0.5, 0.25, 0.125}) {
    EXPECT_NEAR(kernel_mass(*ga, ga->group().make_point({0.1, -0.2}), t), 1.0, 0.01) << t;
  }
  const GroupSpec h = GroupSpec::heisenberg(1);
  const Condenser ch(h, MetricSpec::euclidean(2), Region::box({-1, -1, -1}, {1, 1, 1}),
                     Region::box({-1, -1, -1}, {-0.9, 1, 1}), Region::box({0.9, -1, -1}, {1, 1, 1}));
  const auto gh = build_grid(ch, 1.0 / 16);
  EXPECT_NEAR(kernel_mass(*gh, h.make_point({0.125, -0.25}, {0.1}), 0.5), 1.0, 0.02);
}

TEST(Mollifier, ConstantIsPreservedInside) {
  const double h = 1.0 / 32;
  const auto g = build_grid(square(h), h);
  const DensityField rho = DensityField::constant(g, 2.0);
  const double t = 0.125;
  const DensityField m = mollify_density(rho, t);
  for (std::int64_t i = 0; i < g->size(); ++i) {
    const Point x = g->center(i);
    if (g->label(i) != CellLabel::kInterior) {
      EXPECT_EQ(m.values[static_cast<std::size_t>(i)], 0.0);
      continue;
    }
    const double margin = std::min({x.x1[0] + h, 1 + h - x.x1[0], x.x1[1], 1 - x.x1[1]});
    if (margin > t + h) EXPECT_NEAR(m.values[static_cast<std::size_t>(i)], 2.0, 0.02);
  }
  EXPECT_THROW(mollify_density(rho, h), ConfigError);
}

TEST(Mollifier, HeisenbergConstantIsPreservedInside) {
  const GroupSpec hg = GroupSpec::heisenberg(1);
  const Condenser c(hg, MetricSpec::euclidean(2), Region::box({-1, -1, -1}, {1, 1, 1}),
                    Region::box({-1, -1, -1}, {-0.75, 1, 1}), Region::box({0.75, -1, -1}, {1, 1, 1}));
  const auto g = build_grid(c, 1.0 / 8);
  const DensityField m = mollify_density(DensityField::constant(g, 3.0), 0.25);
  const Point x = hg.make_point({0.0, 0.0}, {0.0});
  FlatVector s = g->lattice_coords(x);
  const std::int64_t i = g->nearest(s);
  ASSERT_EQ(g->label(i), CellLabel::kInterior);
  EXPECT_NEAR(m.values[static_cast<std::size_t>(i)], 3.0, 1e-12);
}

TEST(Mollifier, LpDistance) {
  const auto g = build_grid(square(0.125), 0.125);
  const DensityField a = DensityField::constant(g, 1.0), b = DensityField::constant(g, 3.0);
  EXPECT_NEAR(lp_distance(a, b, 2.0), 2.0 * std::sqrt(g->total_measure()), 1e-12);
  EXPECT_EQ(lp_distance(a, a, 3.0), 0.0);
  const auto g2 = build_grid(square(0.125), 0.25);
  EXPECT_THROW(lp_distance(a, DensityField::constant(g2, 1.0), 2.0), DimensionError);
}

TEST(Continuity, ConstantPlatesGiveConstantSequence) {
  const double h = 1.0 / 16;
  const Condenser c = square(h);
  const auto levels = modulus_continuity_experiment(
      c, h, {{c.plate0, c.plate1}, {c.plate0, c.plate1}, {c.plate0, c.plate1}}, options());
  ASSERT_EQ(levels.size(), 3u);
  EXPECT_EQ(levels[0].value, levels[1].value);
  EXPECT_EQ(levels[1].value, levels[2].value);
  EXPECT_EQ(levels[2].j, 3);
}

TEST(Continuity, ShrinkingPlatesAreMonotone) {
  const double h = 1.0 / 16;
  const Condenser c = square(h);
  std::vector<std::pair<Region, Region>> plates;
  for (double w : {0.25, 0.125}) {
    plates.emplace_back(Region::box({-1, -1}, {w, 2}), Region::box({1 - w, -1}, {2, 2}));
  }
  const auto levels = modulus_continuity_experiment(c, h, plates, options());
  const double limit = solve_modulus(c, h, options()).value;
  EXPECT_GE(levels[0].value, levels[1].value * (1 - 1e-4));
  EXPECT_GE(levels[1].value, limit * (1 - 1e-4));
}

TEST(Continuity, RejectsNonNestedLevels) {
  const double h = 1.0 / 16;
  const Condenser c = square(h);
  std::vector<std::pair<Region, Region>> plates{
      {Region::box({-1, -1}, {0.125, 2}), Region::box({0.875, -1}, {2, 2})},
      {Region::box({-1, -1}, {0.25, 2}), Region::box({0.75, -1}, {2, 2})}};
  EXPECT_THROW(modulus_continuity_experiment(c, h, plates, options()), ConfigError);
  // A level that misses the limiting plates.
  std::vector<std::pair<Region, Region>> bad{
      {Region::box({-1, 0.5}, {0, 2}), Region::box({1, -1}, {2, 2})}};
  EXPECT_THROW(modulus_continuity_experiment(c, h, bad, options()), ConfigError);
}

}  // namespace
}  // namespace capmod
