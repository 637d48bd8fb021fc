#include "capmod/graph.hpp"

#include <cmath>
#include <numeric>
#include <queue>

#include "capmod/error.hpp"

namespace capmod {

LatticeShift right_translation_shift(const Grid& g, const LayerVector& w) {
  const GroupSpec& spec = g.group();
  const int n1 = spec.n1();
  const int n2 = spec.n2();
  LatticeShift s{FlatVector::Zero(g.dim()), Eigen::MatrixXd::Zero(n2, n1)};
  for (int i = 0; i < n1; ++i) s.offset[i] = w[i] / g.spacing(i);
  for (int k = 0; k < n2; ++k) {
    const double d2 = g.spacing(n1 + k);
    double off = 0.0;
    for (int i = 0; i < n1; ++i) {
      double cw = 0.0;
      for (int j = 0; j < n1; ++j) cw += spec.bracket(k, i, j) * w[j];
      off += g.origin(i) * cw;
      s.coupling(k, i) = 0.5 * g.spacing(i) * cw / d2;
    }
    s.offset[n1 + k] = 0.5 * off / d2;
  }
  return s;
}

namespace {

std::vector<std::vector<int>> primitive_moves(int n1, int radius) {
  std::vector<std::vector<int>> out;
  std::vector<int> v(static_cast<std::size_t>(n1), -radius);
  while (true) {
    int g = 0;
    for (int c : v) g = std::gcd(g, std::abs(c));
    if (g == 1) out.push_back(v);
    int a = 0;
    while (a < n1 && ++v[static_cast<std::size_t>(a)] > radius) {
      v[static_cast<std::size_t>(a)] = -radius;
      ++a;
    }
    if (a == n1) break;
  }
  return out;
}

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), std::int64_t{0});
  }
  std::int64_t find(std::int64_t x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }
  void unite(std::int64_t a, std::int64_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(a)] = b;
  }
  std::vector<std::int64_t> parent;
};

}  // namespace

FlatVector LatticeShift::apply(const FlatVector& s, int n1) const {
  FlatVector out = s + offset;
  const int n2 = static_cast<int>(coupling.rows());
  for (int k = 0; k < n2; ++k) {
    double c = 0.0;
    for (int i = 0; i < n1; ++i) c += coupling(k, i) * s[i];
    out[n1 + k] += c;
  }
  return out;
}

double HorizontalGraph::substep_length(std::int64_t node, int m, int k) const {
  const int idx = length_offset_[static_cast<std::size_t>(m)] + k;
  if (!move_lengths_.empty()) return move_lengths_[static_cast<std::size_t>(idx)];
  return node_lengths_[static_cast<std::size_t>(node * total_substeps_ + idx)];
}

double HorizontalGraph::base_length(std::int64_t node, int m) const {
  double s = 0.0;
  for (int k = 0; k < move(m).substeps; ++k) s += substep_length(node, m, k);
  return s;
}

double HorizontalGraph::rho_cost(std::int64_t node, int m,
                                 std::span<const double> rho) const {
  double cost = 0.0;
  for_each_coefficient(node, m, [&](std::int64_t cell, double c) {
    cost += c * rho[static_cast<std::size_t>(cell)];
  });
  return cost;
}

CurvePath HorizontalGraph::to_curve(const GraphPath& path) const {
  const Grid& g = *grid_;
  const GroupSpec& spec = g.group();
  CurvePath c;
  if (path.nodes.empty()) return c;
  c.nodes.push_back(g.center(path.nodes.front()));
  for (std::size_t e = 0; e < path.moves.size(); ++e) {
    const Point start = g.center(path.nodes[e]);
    if ((c.nodes.back().flat() - start.flat()).norm() > 1e-9 * (1.0 + start.flat().norm())) {
      // Snapped edge: record the jump as a zero-time segment.
      c.controls.push_back(HorizontalVector{LayerVector::Zero(spec.n1())});
      c.dt.push_back(0.0);
      c.nodes.push_back(start);
    } else {
      c.nodes.back() = start;
    }
    const GraphMove& mv = move(path.moves[e]);
    const double dt = g.h() / mv.substeps;
    for (int k = 0; k < mv.substeps; ++k) {
      c.controls.push_back(mv.control);
      c.dt.push_back(dt);
      c.nodes.push_back(flow(spec, c.nodes.back(), mv.control, dt));
    }
  }
  return c;
}

std::shared_ptr<const HorizontalGraph> build_horizontal_graph(
    std::shared_ptr<const Grid> grid, int radius) {
  if (radius < 1) throw ConfigError("graph radius must be at least 1");
  auto gp = std::make_shared<HorizontalGraph>();
  HorizontalGraph& G = *gp;
  const Grid& g = *grid;
  const GroupSpec& spec = g.group();
  const MetricSpec& metric = g.metric();
  const int n1 = spec.n1();
  G.grid_ = grid;
  G.radius_ = radius;
  G.n1_ = n1;

  for (const auto& v : primitive_moves(n1, radius)) {
    GraphMove mv;
    mv.v = v;
    mv.control.xi = LayerVector(n1);
    int steps = 1;
    for (int i = 0; i < n1; ++i) {
      mv.control.xi[i] = v[static_cast<std::size_t>(i)];
      steps = std::max(steps, std::abs(v[static_cast<std::size_t>(i)]));
    }
    mv.substeps = steps;
    const LayerVector w = g.h() * mv.control.xi;
    mv.target = right_translation_shift(g, w);
    for (int k = 0; k < steps; ++k) {
      mv.midpoints.push_back(right_translation_shift(g, w * ((k + 0.5) / steps)));
      if (k > 0) mv.joints.push_back(right_translation_shift(g, w * (double(k) / steps)));
    }
    G.moves_.push_back(std::move(mv));
  }
  const int nm = G.move_count();
  for (int m = 0; m < nm; ++m) {
    for (int r = 0; r < nm; ++r) {
      bool opposite = true;
      for (int i = 0; i < n1; ++i) {
        opposite = opposite && G.moves_[static_cast<std::size_t>(r)].v[static_cast<std::size_t>(i)] ==
                                   -G.moves_[static_cast<std::size_t>(m)].v[static_cast<std::size_t>(i)];
      }
      if (opposite) G.moves_[static_cast<std::size_t>(m)].reverse = r;
    }
  }
  G.length_offset_.resize(static_cast<std::size_t>(nm));
  for (int m = 0; m < nm; ++m) {
    G.length_offset_[static_cast<std::size_t>(m)] = G.total_substeps_;
    G.total_substeps_ += G.moves_[static_cast<std::size_t>(m)].substeps;
  }

  const bool invariant = metric.is_left_invariant();
  if (invariant) {
    const LocalNorm f = metric.at(spec.identity());
    for (const auto& mv : G.moves_) {
      const double len = f.f(mv.control.xi) * g.h() / mv.substeps;
      for (int k = 0; k < mv.substeps; ++k) G.move_lengths_.push_back(len);
    }
  } else {
    G.node_lengths_.assign(
        static_cast<std::size_t>(g.size()) * static_cast<std::size_t>(G.total_substeps_), 0.0);
  }

  G.targets_.assign(static_cast<std::size_t>(g.size() * nm), -1);
  auto inside = [&](const FlatVector& s) {
    const std::int64_t j = g.nearest(s);
    return j >= 0 && g.label(j) != CellLabel::kExterior;
  };
  for (std::int64_t i = 0; i < g.size(); ++i) {
    if (g.label(i) == CellLabel::kExterior) continue;
    const FlatVector s = g.lattice_coords(i);
    for (int m = 0; m < nm; ++m) {
      const GraphMove& mv = G.moves_[static_cast<std::size_t>(m)];
      const FlatVector t = mv.target.apply(s, n1);
      const std::int64_t j = g.nearest(t);
      if (j < 0 || g.label(j) == CellLabel::kExterior) continue;
      bool ok = true;
      for (const auto& sh : mv.midpoints) ok = ok && inside(sh.apply(s, n1));
      for (const auto& sh : mv.joints) ok = ok && inside(sh.apply(s, n1));
      if (!ok) continue;
      G.targets_[static_cast<std::size_t>(i * nm + m)] = static_cast<std::int32_t>(j);
      if (!invariant) {
        for (int k = 0; k < mv.substeps; ++k) {
          const FlatVector sm = mv.midpoints[static_cast<std::size_t>(k)].apply(s, n1);
          FlatVector x(g.dim());
          for (int a = 0; a < g.dim(); ++a) x[a] = g.origin(a) + g.spacing(a) * sm[a];
          const double len =
              metric.at(spec.from_flat(x)).f(mv.control.xi) * g.h() / mv.substeps;
          G.node_lengths_[static_cast<std::size_t>(
              i * G.total_substeps_ + G.length_offset_[static_cast<std::size_t>(m)] + k)] = len;
        }
      }
    }
  }

  // Connectivity diagnostics.
  ConnectivityReport& rep = G.report_;
  UnionFind uf(static_cast<std::size_t>(g.size()));
  for (std::int64_t i = 0; i < g.size(); ++i) {
    if (g.label(i) == CellLabel::kExterior) continue;
    int out = 0;
    for (int m = 0; m < nm; ++m) {
      const std::int64_t j = G.target(i, m);
      if (j < 0) continue;
      ++out;
      ++rep.edges;
      uf.unite(i, j);
      const int r = G.moves_[static_cast<std::size_t>(m)].reverse;
      if (r < 0 || G.target(j, r) != i) rep.symmetric = false;
    }
    if (out == 0) ++rep.dead_ends;
  }
  for (std::int64_t i = 0; i < g.size(); ++i) {
    if (g.label(i) != CellLabel::kExterior && uf.find(i) == i) ++rep.components;
  }
  std::vector<char> seen(static_cast<std::size_t>(g.size()), 0);
  std::vector<std::int64_t> queue;
  for (std::int64_t i = 0; i < g.size(); ++i) {
    if (g.label(i) == CellLabel::kPlate0) {
      seen[static_cast<std::size_t>(i)] = 1;
      queue.push_back(i);
    }
  }
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const std::int64_t i = queue[q];
    if (g.label(i) == CellLabel::kPlate1) {
      ++rep.plate1_reachable;
      continue;
    }
    for (int m = 0; m < nm; ++m) {
      const std::int64_t j = G.target(i, m);
      if (j < 0 || seen[static_cast<std::size_t>(j)]) continue;
      seen[static_cast<std::size_t>(j)] = 1;
      queue.push_back(j);
    }
  }
  rep.plates_connected = rep.plate1_reachable > 0;
  return gp;
}

namespace {

struct QueueEntry {
  double dist;
  double length;
  std::int32_t node;
  bool operator>(const QueueEntry& o) const {
    return dist != o.dist ? dist > o.dist : length > o.length;
  }
};

}  // namespace

SearchResult shortest_paths_from(const HorizontalGraph& g,
                                 std::span<const std::int64_t> sources,
                                 std::span<const double> rho,
                                 bool expand_plate1) {
  const Grid& grid = g.grid();
  const auto n = static_cast<std::size_t>(grid.size());
  if (!rho.empty() && rho.size() != n) {
    throw DimensionError("density does not match the graph");
  }
  SearchResult r;
  const double inf = std::numeric_limits<double>::infinity();
  r.dist.assign(n, inf);
  r.length.assign(n, inf);
  r.parent.assign(n, -1);
  r.parent_move.assign(n, -1);
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> pq;
  for (std::int64_t s : sources) {
    r.dist[static_cast<std::size_t>(s)] = 0.0;
    r.length[static_cast<std::size_t>(s)] = 0.0;
    pq.push({0.0, 0.0, static_cast<std::int32_t>(s)});
  }
  const int nm = g.move_count();
  while (!pq.empty()) {
    const QueueEntry e = pq.top();
    pq.pop();
    const auto u = static_cast<std::size_t>(e.node);
    if (e.dist != r.dist[u] || e.length != r.length[u]) continue;
    if (!expand_plate1 && grid.label(e.node) == CellLabel::kPlate1) continue;
    for (int m = 0; m < nm; ++m) {
      const std::int64_t t = g.target(e.node, m);
      if (t < 0) continue;
      const double len = g.base_length(e.node, m);
      const double w = rho.empty() ? len : g.rho_cost(e.node, m, rho);
      const double nd = e.dist + w;
      const double nl = e.length + len;
      const auto v = static_cast<std::size_t>(t);
      if (nd < r.dist[v] || (nd == r.dist[v] && nl < r.length[v])) {
        r.dist[v] = nd;
        r.length[v] = nl;
        r.parent[v] = e.node;
        r.parent_move[v] = static_cast<std::int16_t>(m);
        pq.push({nd, nl, static_cast<std::int32_t>(t)});
      }
    }
  }
  return r;
}

SearchResult shortest_paths(const HorizontalGraph& g,
                            std::span<const double> rho, bool expand_plate1) {
  std::vector<std::int64_t> sources;
  const Grid& grid = g.grid();
  for (std::int64_t i = 0; i < grid.size(); ++i) {
    if (grid.label(i) == CellLabel::kPlate0) sources.push_back(i);
  }
  return shortest_paths_from(g, sources, rho, expand_plate1);
}

GraphPath trace_path(const SearchResult& r, std::int64_t target) {
  GraphPath p;
  if (!std::isfinite(r.dist[static_cast<std::size_t>(target)])) return p;
  for (std::int64_t v = target; v >= 0; v = r.parent[static_cast<std::size_t>(v)]) {
    p.nodes.push_back(v);
    if (r.parent[static_cast<std::size_t>(v)] >= 0) {
      p.moves.push_back(r.parent_move[static_cast<std::size_t>(v)]);
    }
  }
  std::reverse(p.nodes.begin(), p.nodes.end());
  std::reverse(p.moves.begin(), p.moves.end());
  return p;
}

}  // namespace capmod
