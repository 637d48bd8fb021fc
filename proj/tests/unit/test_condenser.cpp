#include <cmath>
#include <queue>
#include <vector>

#include <gtest/gtest.h>

#include "capmod/condenser.hpp"
#include "capmod/error.hpp"
#include "capmod/graph.hpp"

namespace capmod {
namespace {

Condenser unit_square() {
  return Condenser(GroupSpec::abelian(2), MetricSpec::euclidean(2), Region::box({0, 0}, {1, 1}),
                   Region::box({0, 0}, {0.1, 1}), Region::box({0.9, 0}, {1, 1}));
}

Condenser h1_ring() {
  return Condenser(GroupSpec::heisenberg(1), MetricSpec::euclidean(2), Region::ball(3.0),
                   Region::ball(0.5), Region::shell(2.0, 3.0));
}

TEST(Grid, UnitSquareCounts) {
  const auto g = build_grid(unit_square(), 0.1);
  EXPECT_EQ(g->size(), 100);
  EXPECT_EQ(g->count(CellLabel::kExterior), 0);
  EXPECT_EQ(g->count(CellLabel::kPlate0), 10);
  EXPECT_EQ(g->count(CellLabel::kPlate1), 10);
  EXPECT_EQ(g->count(CellLabel::kInterior), 80);
  // Normalized measure: Lebesgue area 1 divided by the area pi of the unit disc.
  EXPECT_NEAR(g->total_measure(), 1.0 / M_PI, 1e-12);
  EXPECT_NEAR(g->cell_volume(), 0.01 / M_PI, 1e-15);
}

TEST(Grid, WeightEntersMeasure) {
  const Condenser c(GroupSpec::abelian(2), MetricSpec::euclidean(2), Region::box({0, 0}, {1, 1}),
                    Region::box({0, 0}, {0.1, 1}), Region::box({0.9, 0}, {1, 1}),
                    [](const Point& p) { return 1.0 + p.x1[0]; });
  // Midpoint rule integrates the linear weight exactly: area 1.5.
  EXPECT_NEAR(build_grid(c, 0.05)->total_measure() * M_PI, 1.5, 1e-12);
}

TEST(Grid, GaugeBallMeasureConverges) {
  const Condenser c(GroupSpec::heisenberg(1), MetricSpec::euclidean(2), Region::ball(1.0),
                    Region::ball(0.2), Region::shell(0.9, 1.0));
  double prev = INFINITY;
  for (double h : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    const double err = std::abs(build_grid(c, h)->total_measure() - 1.0);
    EXPECT_LT(err, 4.0 * h);
    EXPECT_LT(err, prev * 1.01);
    prev = err;
  }
}

TEST(Grid, RavelRoundTripAndLattice) {
  const auto g = build_grid(h1_ring(), 0.5);
  EXPECT_TRUE(g->exact_moves());
  EXPECT_DOUBLE_EQ(g->spacing(0), 0.5);
  EXPECT_DOUBLE_EQ(g->spacing(2), 0.125);
  std::vector<int> multi(3);
  for (std::int64_t i = 0; i < g->size(); i += 97) {
    g->unravel(i, multi);
    EXPECT_EQ(g->ravel(multi), i);
    EXPECT_EQ(g->nearest(g->lattice_coords(g->center(i))), i);
  }
  Stencil st;
  FlatVector s = g->lattice_coords(std::int64_t{500});
  s[0] += 0.25;
  s[2] += 0.5;
  ASSERT_TRUE(g->stencil(s, &st));
  EXPECT_EQ(st.count, 4);
  double sum = 0.0;
  for (int k = 0; k < st.count; ++k) sum += st.weight[static_cast<std::size_t>(k)];
  EXPECT_NEAR(sum, 1.0, 1e-15);
}

TEST(Grid, Errors) {
  const GroupSpec a = GroupSpec::abelian(2);
  const MetricSpec m = MetricSpec::euclidean(2);
  EXPECT_THROW(build_grid(Condenser(a, m, Region::box({0, 0}, {1, 1}), Region::box({0, 0}, {0.6, 1}),
                                    Region::box({0.4, 0}, {1, 1})),
                          0.1),
               ConfigError);
  EXPECT_THROW(build_grid(Condenser(a, m, Region::box({0, 0}, {1, 1}), Region::ball(0.01, {0.5, 0.5}),
                                    Region::box({0.9, 0}, {1, 1})),
                          0.1),
               ConfigError);
  EXPECT_THROW(build_grid(Condenser(a, m, Region::everything(), Region::ball(0.5), Region::shell(2, 3)), 0.1),
               ConfigError);
  EXPECT_THROW(build_grid(unit_square(), 0.0), ConfigError);
}

TEST(Grid, LabelsStableUnderRefinement) {
  const Condenser c = unit_square();
  const auto coarse = build_grid(c, 0.1);
  const auto fine = build_grid(c, 0.05);
  // Every point at distance > 2h from the plate boundaries keeps its label.
  for (std::int64_t i = 0; i < fine->size(); ++i) {
    const Point x = fine->center(i);
    const double d = std::min(std::abs(x.x1[0] - 0.1), std::abs(x.x1[0] - 0.9));
    if (d <= 0.2) continue;
    const std::int64_t j = coarse->nearest(coarse->lattice_coords(x));
    ASSERT_GE(j, 0);
    EXPECT_EQ(fine->label(i), coarse->label(j));
  }
}

TEST(Graph, AbelianEightNeighbourLattice) {
  const auto g = build_grid(unit_square(), 0.1);
  const auto graph = build_horizontal_graph(g, 1);
  EXPECT_EQ(graph->move_count(), 8);
  const ConnectivityReport& r = graph->connectivity();
  EXPECT_TRUE(r.plates_connected);
  EXPECT_TRUE(r.symmetric);
  EXPECT_EQ(r.components, 1);
  // 10 x 10 lattice, directed: 4 * 10 * 9 axis edges and 4 * 9 * 9 diagonals.
  EXPECT_EQ(r.edges, 684);
  for (int m = 0; m < graph->move_count(); ++m) {
    const auto& v = graph->move(m).v;
    EXPECT_NEAR(graph->base_length(55, m), 0.1 * std::hypot(v[0], v[1]), 1e-15);
  }
}

TEST(Graph, RadiusTwoMoves) {
  const auto graph = build_horizontal_graph(build_grid(unit_square(), 0.1), 2);
  // Primitive vectors with max |v_i| <= 2: 8 neighbours plus 8 knight moves.
  EXPECT_EQ(graph->move_count(), 16);
  for (int m = 0; m < graph->move_count(); ++m) {
    const GraphMove& mv = graph->move(m);
    EXPECT_EQ(graph->move(mv.reverse).v[0], -mv.v[0]);
    EXPECT_EQ(graph->move(mv.reverse).v[1], -mv.v[1]);
  }
}

TEST(Graph, HeisenbergReachesVerticalNeighbours) {
  const auto g = build_grid(h1_ring(), 0.5);
  const auto graph = build_horizontal_graph(g, 1);
  const ConnectivityReport& r = graph->connectivity();
  EXPECT_TRUE(r.plates_connected);
  EXPECT_TRUE(r.symmetric);
  // Breadth-first witness: the origin reaches (0, 0; k h^2/2) for small k.
  const std::int64_t start = g->nearest(g->lattice_coords(g->group().identity()));
  std::vector<int> seen(static_cast<std::size_t>(g->size()), 0);
  std::queue<std::int64_t> q;
  q.push(start);
  seen[static_cast<std::size_t>(start)] = 1;
  while (!q.empty()) {
    const std::int64_t v = q.front();
    q.pop();
    for (int m = 0; m < graph->move_count(); ++m) {
      const std::int64_t w = graph->target(v, m);
      if (w < 0 || seen[static_cast<std::size_t>(w)]) continue;
      seen[static_cast<std::size_t>(w)] = 1;
      q.push(w);
    }
  }
  for (int k = 1; k <= 4; ++k) {
    const Point z = g->group().make_point({0, 0}, {k * 0.125});
    const std::int64_t n = g->nearest(g->lattice_coords(z));
    ASSERT_GE(n, 0);
    EXPECT_TRUE(seen[static_cast<std::size_t>(n)]) << "k = " << k;
  }
  // Edges are horizontal: z changes by exactly (x dy - y dx) / 2.
  for (std::int64_t i = 0; i < g->size(); i += 7) {
    for (int m = 0; m < graph->move_count(); ++m) {
      const std::int64_t j = graph->target(i, m);
      if (j < 0) continue;
      const Point a = g->center(i), b = g->center(j);
      const double dx = b.x1[0] - a.x1[0], dy = b.x1[1] - a.x1[1];
      EXPECT_NEAR(b.x2[0] - a.x2[0], 0.5 * (a.x1[0] * dy - a.x1[1] * dx), 1e-12);
    }
  }
}

TEST(Graph, DisconnectedPlatesAreReported) {
  // A wall of exterior cells separates the plates.
  const Region d = Region::minus(Region::box({0, 0}, {1, 1}), Region::box({0.45, -1}, {0.55, 2}));
  const Condenser c(GroupSpec::abelian(2), MetricSpec::euclidean(2), d, Region::box({0, 0}, {0.1, 1}),
                    Region::box({0.9, 0}, {1, 1}));
  const auto graph = build_horizontal_graph(build_grid(c, 0.05), 1);
  EXPECT_FALSE(graph->connectivity().plates_connected);
  EXPECT_EQ(graph->connectivity().plate1_reachable, 0);
}

TEST(Graph, ShortestPathsAreMetricDistances) {
  const auto graph = build_horizontal_graph(build_grid(unit_square(), 0.1), 2);
  const SearchResult r = shortest_paths(*graph, {}, false);
  const Grid& g = graph->grid();
  for (std::int64_t i = 0; i < g.size(); ++i) {
    if (g.label(i) == CellLabel::kPlate0) EXPECT_EQ(r.dist[static_cast<std::size_t>(i)], 0.0);
  }
  // Straight rows: distance from the plate column at x = 0.05 to x = 0.95.
  const std::int64_t far = g.nearest(g.lattice_coords(g.group().make_point({0.95, 0.55})));
  EXPECT_NEAR(r.dist[static_cast<std::size_t>(far)], 0.9, 1e-12);
  const GraphPath p = trace_path(r, far);
  EXPECT_EQ(p.nodes.back(), far);
  EXPECT_EQ(g.label(p.nodes.front()), CellLabel::kPlate0);
}

}  // namespace
}  // namespace capmod
