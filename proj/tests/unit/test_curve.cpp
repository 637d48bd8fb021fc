#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "capmod/curve.hpp"
#include "capmod/fields.hpp"
#include "capmod/graph.hpp"

namespace capmod {
namespace {

std::vector<ControlSegment> circle_controls(const GroupSpec& g, int n, double scale = 1.0) {
  std::vector<ControlSegment> out;
  const double dt = 2.0 * M_PI / n;
  for (int k = 0; k < n; ++k) {
    const double t = (k + 0.5) * dt;
    out.push_back({g.make_horizontal({scale * std::cos(t), scale * std::sin(t)}), dt});
  }
  return out;
}

TEST(Curve, StraightLineInPlane) {
  const GroupSpec a = GroupSpec::abelian(2);
  const CurvePath p = integrate_horizontal(a, a.identity(), {{a.make_horizontal({1, 0}), 0.25},
                                                              {a.make_horizontal({1, 0}), 0.75}});
  EXPECT_EQ(p.nodes.size(), 3u);
  EXPECT_DOUBLE_EQ(p.back().x1[0], 1.0);
  EXPECT_DOUBLE_EQ(p.back().x1[1], 0.0);
  EXPECT_DOUBLE_EQ(finsler_length(MetricSpec::euclidean(2), p), 1.0);
}

TEST(Curve, ZeroControlIsConstant) {
  const GroupSpec h = GroupSpec::heisenberg(1);
  const Point x0 = h.make_point({0.3, 0.4}, {1});
  const CurvePath p = integrate_horizontal(h, x0, {{h.make_horizontal({0, 0}), 2.0}});
  EXPECT_EQ(p.back().flat(), x0.flat());
  EXPECT_EQ(finsler_length(MetricSpec::euclidean(2), p), 0.0);
}

TEST(Curve, CircleLiftEnclosesArea) {
  const GroupSpec h = GroupSpec::heisenberg(1);
  // Piecewise-constant controls trace a regular n-gon with side 2 pi / n; the
  // vertical coordinate of the lift is its enclosed area.
  const int n = 4096;
  const CurvePath p = integrate_horizontal(h, h.identity(), circle_controls(h, n));
  EXPECT_NEAR(p.back().x1[0], 0.0, 1e-10);
  EXPECT_NEAR(p.back().x1[1], 0.0, 1e-10);
  EXPECT_NEAR(p.back().x2[0], M_PI, 1e-5);
  const double radius = (M_PI / n) / std::sin(M_PI / n);
  const double poly_area = 0.5 * n * radius * radius * std::sin(2.0 * M_PI / n);
  EXPECT_NEAR(p.back().x2[0], poly_area, 1e-8);
  EXPECT_NEAR(finsler_length(MetricSpec::euclidean(2), p), 2.0 * M_PI, 1e-4);
}

TEST(Curve, SegmentsAreExactFlows) {
  // Constant control on a step-2 group: the endpoint is x * exp(t u).
  const GroupSpec h = GroupSpec::heisenberg(2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int s = 0; s < 50; ++s) {
    const Point x = h.make_point({u(rng), u(rng), u(rng), u(rng)}, {u(rng)});
    const HorizontalVector c = h.make_horizontal({u(rng), u(rng), u(rng), u(rng)});
    const double dt = 0.1 + std::abs(u(rng));
    const CurvePath p = integrate_horizontal(h, x, {{c, dt}});
    const Point exact = multiply(h, x, exp_horizontal(h, {dt * c.xi}));
    EXPECT_LE((p.back().flat() - exact.flat()).norm(), 1e-8 * dt);
    EXPECT_LE((flow(h, x, c, dt).flat() - exact.flat()).norm(), 1e-12);
  }
}

TEST(Curve, ReparametrizationInvariance) {
  const GroupSpec h = GroupSpec::heisenberg(1);
  Eigen::MatrixXd a(2, 2);
  a << 2, 0.3, 0.3, 1;
  const MetricSpec m = MetricSpec::riemannian(a);
  std::vector<ControlSegment> c = circle_controls(h, 64), slow = c;
  for (auto& s : slow) {
    s.control.xi *= 0.5;
    s.dt *= 2.0;
  }
  const CurvePath p = integrate_horizontal(h, h.identity(), c);
  const CurvePath q = integrate_horizontal(h, h.identity(), slow);
  EXPECT_NEAR(finsler_length(m, p), finsler_length(m, q), 1e-10);
  EXPECT_LE((p.back().flat() - q.back().flat()).norm(), 1e-10);
}

TEST(Curve, LeftInvarianceOfLength) {
  const GroupSpec h = GroupSpec::heisenberg(1);
  const MetricSpec m = MetricSpec::lq(2, 3.0);
  const CurvePath p = integrate_horizontal(h, h.identity(), circle_controls(h, 32));
  const CurvePath q = integrate_horizontal(h, h.make_point({5, -2}, {7}), circle_controls(h, 32));
  EXPECT_NEAR(finsler_length(m, p), finsler_length(m, q), 1e-8);
}

TEST(Curve, DilationScalesLength) {
  const GroupSpec h = GroupSpec::heisenberg(1);
  const MetricSpec m = MetricSpec::euclidean(2);
  const Point x0 = h.make_point({0.2, 0.1}, {0.3});
  const CurvePath p = integrate_horizontal(h, x0, circle_controls(h, 16));
  const CurvePath q = integrate_horizontal(h, dilate(h, 3.0, x0), circle_controls(h, 16, 3.0));
  EXPECT_NEAR(finsler_length(m, q), 3.0 * finsler_length(m, p), 1e-12);
  EXPECT_LE((q.back().flat() - dilate(h, 3.0, p.back()).flat()).norm(), 1e-9);
}

class DensityCurves : public ::testing::Test {
 protected:
  void SetUp() override {
    const GroupSpec a = GroupSpec::abelian(2);
    Condenser c(a, MetricSpec::euclidean(2), Region::ball(std::exp(1.0) + 0.1), Region::ball(1.0),
                Region::shell(std::exp(1.0), std::exp(1.0) + 0.1));
    graph = build_horizontal_graph(build_grid(c, 1.0 / 64), 1);
    grid = graph->grid_ptr();
  }
  std::shared_ptr<const HorizontalGraph> graph;
  std::shared_ptr<const Grid> grid;
};

TEST_F(DensityCurves, ConstantDensityScalesLength) {
  const GroupSpec& a = grid->group();
  const CurvePath p = integrate_horizontal(a, a.make_point({1.1, 0.2}),
                                           {{a.make_horizontal({0.6, 0.8}), 1.0}});
  const MetricSpec& m = grid->metric();
  EXPECT_NEAR(rho_length(m, DensityField::constant(grid, 1.0), p), finsler_length(m, p), 1e-12);
  EXPECT_NEAR(rho_length(m, DensityField::constant(grid, 2.5), p), 2.5 * finsler_length(m, p), 1e-12);
}

TEST_F(DensityCurves, AnnulusExtremalDensityHasUnitLength) {
  // rho = 1 / (|x| log(R / r)) with R / r = e.
  DensityField rho = DensityField::constant(grid, 0.0);
  for (std::int64_t i = 0; i < grid->size(); ++i) {
    if (grid->label(i) == CellLabel::kExterior) continue;
    const Point x = grid->center(i);
    rho.values[static_cast<std::size_t>(i)] = 1.0 / x.x1.norm();
  }
  const GroupSpec& a = grid->group();
  const double r0 = 1.0, r1 = std::exp(1.0);
  const double ang = 0.3;
  const int n = 400;
  std::vector<ControlSegment> c(n, {a.make_horizontal({std::cos(ang), std::sin(ang)}), (r1 - r0) / n});
  const CurvePath p = integrate_horizontal(a, a.make_point({r0 * std::cos(ang), r0 * std::sin(ang)}), c);
  EXPECT_NEAR(rho_length(grid->metric(), rho, p), 1.0, 1e-3);
}

TEST_F(DensityCurves, RhoLengthMonotoneAndOutOfRange) {
  const GroupSpec& a = grid->group();
  const CurvePath p = integrate_horizontal(a, a.make_point({0.5, 0.5}),
                                           {{a.make_horizontal({1, 0}), 1.0}});
  DensityField lo = DensityField::constant(grid, 1.0), hi = lo;
  for (std::size_t i = 0; i < hi.values.size(); i += 3) hi.values[i] += 0.5;
  EXPECT_LE(rho_length(grid->metric(), lo, p), rho_length(grid->metric(), hi, p));
  const CurvePath out = integrate_horizontal(a, a.make_point({2.5, 0}),
                                             {{a.make_horizontal({1, 0}), 2.0}});
  EXPECT_THROW(rho_length(grid->metric(), lo, out), std::out_of_range);
}

TEST_F(DensityCurves, EuclideanGraphDistance) {
  const GroupSpec& a = grid->group();
  const MetricSpec& m = grid->metric();
  const Point x = a.make_point({-1.5, 0.25}), y = a.make_point({1.25, 1.5});
  const double d = cc_distance(a, m, *graph, x, y);
  // The 8-direction graph overestimates by at most 1 / cos(pi / 8).
  const double e = (x.flat() - y.flat()).norm();
  EXPECT_GE(d, e - 2.0 / 64);
  EXPECT_LE(d, e / std::cos(M_PI / 8) + 2.0 / 64);
  EXPECT_EQ(cc_distance(a, m, *graph, x, x), 0.0);
  EXPECT_DOUBLE_EQ(cc_distance(a, m, *graph, x, y), cc_distance(a, m, *graph, y, x));
  const Point z = a.make_point({0.1, -1.9});
  EXPECT_LE(d, cc_distance(a, m, *graph, x, z) + cc_distance(a, m, *graph, z, y) + 1e-12);
}

TEST(CurveGraph, HeisenbergVerticalDistanceDecreases) {
  const GroupSpec h = GroupSpec::heisenberg(1);
  const MetricSpec m = MetricSpec::euclidean(2);
  const Condenser c(h, m, Region::box({-1.5, -1.5, -1}, {1.5, 1.5, 1}), Region::ball(0.1, {-1.5, 0, 0}),
                    Region::ball(0.1, {1.5, 0, 0}));
  std::vector<double> d;
  for (double step : {0.5, 0.25}) {
    const auto graph = build_horizontal_graph(build_grid(c, step), 1);
    d.push_back(cc_distance(h, m, *graph, h.identity(), h.make_point({0, 0}, {0.5})));
  }
  // Exact value: a circle of area 1/2, perimeter sqrt(2 pi).
  EXPECT_TRUE(std::isfinite(d[0]));
  EXPECT_LE(d[1], d[0] + 1e-12);
  EXPECT_GE(d[1], std::sqrt(2.0 * M_PI) - 1e-9);
  // Comparable with the gauge |(0, 0; 1/2)| = 2^(1/4) * 1^(1/2).
  const double gauge = homogeneous_norm(h, h.make_point({0, 0}, {0.5}));
  EXPECT_GT(d[1] / gauge, 1.0);
  EXPECT_LT(d[1] / gauge, 4.0);
}

}  // namespace
}  // namespace capmod
