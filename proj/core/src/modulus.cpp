#include "capmod/modulus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "capmod/error.hpp"

namespace capmod {
namespace {

struct Constraint {
  std::vector<std::int32_t> vars;
  std::vector<double> coef;
  double lambda = 0.0;
  double curvature = 0.0;  // sum a^2 / (2 sigma), used when p = 2
  GraphPath path;
};

std::uint64_t path_hash(const GraphPath& p) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::int64_t v : p.nodes) {
    h ^= static_cast<std::uint64_t>(v);
    h *= 1099511628211ull;
  }
  return h;
}

class DualSolver {
 public:
  DualSolver(const HorizontalGraph& g, double p) : graph_(g), p_(p) {
    const Grid& grid = g.grid();
    var_of_cell_.assign(static_cast<std::size_t>(grid.size()), -1);
    for (std::int64_t i = 0; i < grid.size(); ++i) {
      if (grid.label(i) != CellLabel::kInterior) continue;
      var_of_cell_[static_cast<std::size_t>(i)] =
          static_cast<std::int32_t>(cell_of_var_.size());
      cell_of_var_.push_back(i);
      sigma_.push_back(grid.measure(i));
    }
    w_.assign(cell_of_var_.size(), 0.0);
    rho_.assign(cell_of_var_.size(), 0.0);
  }

  std::size_t size() const { return family_.size(); }
  const std::vector<Constraint>& family() const { return family_; }

  bool add(GraphPath path) {
    if (!seen_.insert(path_hash(path)).second) return false;
    Constraint c;
    std::vector<std::pair<std::int32_t, double>> terms;
    for (std::size_t e = 0; e < path.moves.size(); ++e) {
      graph_.for_each_coefficient(path.nodes[e], path.moves[e],
                                  [&](std::int64_t cell, double a) {
                                    const std::int32_t v =
                                        var_of_cell_[static_cast<std::size_t>(cell)];
                                    if (v >= 0 && a > 0.0) terms.emplace_back(v, a);
                                  });
    }
    std::sort(terms.begin(), terms.end());
    for (const auto& [v, a] : terms) {
      if (!c.vars.empty() && c.vars.back() == v) {
        c.coef.back() += a;
      } else {
        c.vars.push_back(v);
        c.coef.push_back(a);
      }
    }
    for (std::size_t k = 0; k < c.vars.size(); ++k) {
      c.curvature += c.coef[k] * c.coef[k] /
                     (2.0 * sigma_[static_cast<std::size_t>(c.vars[k])]);
    }
    c.path = std::move(path);
    family_.push_back(std::move(c));
    return true;
  }

  /// Cyclic exact coordinate maximization of the dual. Most sweeps visit
  /// only positive multipliers; every kFullEvery-th sweep visits all of them
  /// and decides convergence. Returns sweeps used.
  int sweep(int max_sweeps, double tol) {
    constexpr int kFullEvery = 8;
    int s = 0;
    for (; s < max_sweeps; ++s) {
      const bool full = s % kFullEvery == 0 || s + 1 == max_sweeps;
      double change = 0.0;
      double total = 0.0;
      for (auto& c : family_) {
        if (!full && c.lambda == 0.0) continue;
        const double old = c.lambda;
        const double nl = best_lambda(c);
        if (nl != old) {
          const double d = nl - old;
          for (std::size_t k = 0; k < c.vars.size(); ++k) {
            const auto v = static_cast<std::size_t>(c.vars[k]);
            w_[v] = std::max(0.0, w_[v] + d * c.coef[k]);
            rho_[v] = density(v, w_[v]);
          }
          c.lambda = nl;
          change += std::abs(d);
        }
        total += c.lambda;
      }
      if (full && change <= tol * std::max(total, 1e-300)) {
        ++s;
        break;
      }
    }
    return s;
  }

  double dual_objective() const {
    double lam = 0.0;
    for (const auto& c : family_) lam += c.lambda;
    return lam - (p_ - 1.0) * energy();
  }

  double energy() const {
    double e = 0.0;
    for (std::size_t v = 0; v < rho_.size(); ++v) {
      if (rho_[v] > 0.0) e += sigma_[v] * std::pow(rho_[v], p_);
    }
    return e;
  }

  std::vector<double> full_density(double fill = -1.0) const {
    std::vector<double> r(var_of_cell_.size(), 0.0);
    for (std::size_t v = 0; v < cell_of_var_.size(); ++v) {
      r[static_cast<std::size_t>(cell_of_var_[v])] = fill >= 0.0 ? fill : rho_[v];
    }
    return r;
  }

 private:
  double density(std::size_t v, double w) const {
    if (w <= 0.0) return 0.0;
    const double base = w / (p_ * sigma_[v]);
    if (p_ == 2.0) return base;
    return std::pow(base, 1.0 / (p_ - 1.0));
  }

  double length(const Constraint& c) const {
    double s = 0.0;
    for (std::size_t k = 0; k < c.vars.size(); ++k) {
      s += c.coef[k] * rho_[static_cast<std::size_t>(c.vars[k])];
    }
    return s;
  }

  // phi(lambda) = rho-length of c when its own multiplier is lambda.
  double phi(const Constraint& c, double lambda, double* deriv) const {
    const double q = 1.0 / (p_ - 1.0);
    double s = 0.0;
    double ds = 0.0;
    for (std::size_t k = 0; k < c.vars.size(); ++k) {
      const auto v = static_cast<std::size_t>(c.vars[k]);
      const double a = c.coef[k];
      const double w = std::max(0.0, w_[v] + (lambda - c.lambda) * a);
      if (w <= 0.0) continue;
      const double base = w / (p_ * sigma_[v]);
      const double r = std::pow(base, q);
      s += a * r;
      if (deriv) ds += a * a / (p_ * sigma_[v]) * q * r / base;
    }
    if (deriv) *deriv = ds;
    return s;
  }

  double best_lambda(const Constraint& c) const {
    if (c.vars.empty()) return 0.0;
    if (p_ == 2.0) {
      const double l0 = length(c) - c.lambda * c.curvature;
      if (l0 >= 1.0) return 0.0;
      return (1.0 - l0) / c.curvature;
    }
    if (phi(c, 0.0, nullptr) >= 1.0) return 0.0;
    double lo = 0.0;
    double hi = c.lambda > 0.0 ? c.lambda : 1e-12;
    while (phi(c, hi, nullptr) < 1.0) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) throw SolverError("dual multiplier diverged");
    }
    double x = std::clamp(c.lambda, lo, hi);
    if (x <= lo || x >= hi) x = 0.5 * (lo + hi);
    for (int it = 0; it < 100; ++it) {
      double d = 0.0;
      const double f = phi(c, x, &d) - 1.0;
      if (std::abs(f) < 1e-14) break;
      if (f > 0.0) hi = x; else lo = x;
      double nx = d > 0.0 ? x - f / d : 0.5 * (lo + hi);
      if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
      if (hi - lo <= 1e-15 * hi) break;
      x = nx;
    }
    return x;
  }

  const HorizontalGraph& graph_;
  double p_;
  std::vector<std::int32_t> var_of_cell_;
  std::vector<std::int64_t> cell_of_var_;
  std::vector<double> sigma_;
  std::vector<double> w_;
  std::vector<double> rho_;
  std::vector<Constraint> family_;
  std::unordered_set<std::uint64_t> seen_;
};

struct Separation {
  double min_length = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, std::int64_t>> violated;
  SearchResult search;
};

Separation separate(const HorizontalGraph& g, const std::vector<double>& rho,
                    double threshold) {
  Separation s;
  s.search = shortest_paths(g, rho, false);
  const Grid& grid = g.grid();
  for (std::int64_t i = 0; i < grid.size(); ++i) {
    if (grid.label(i) != CellLabel::kPlate1) continue;
    const double d = s.search.dist[static_cast<std::size_t>(i)];
    if (!std::isfinite(d)) continue;
    s.min_length = std::min(s.min_length, d);
    if (d < threshold) s.violated.emplace_back(d, i);
  }
  std::sort(s.violated.begin(), s.violated.end());
  return s;
}

}  // namespace

ViolatedCurve shortest_violated_curve(const HorizontalGraph& graph,
                                      const MetricSpec& m,
                                      const DensityField& rho) {
  if (m.n1() != graph.grid().metric().n1()) {
    throw DimensionError("metric does not match the graph");
  }
  if (rho.grid.get() != &graph.grid()) {
    throw DimensionError("density lives on a different grid");
  }
  const Separation s = separate(graph, rho.values, 0.0);
  ViolatedCurve out;
  if (!std::isfinite(s.min_length)) return out;
  const Grid& grid = graph.grid();
  std::int64_t best = -1;
  for (std::int64_t i = 0; i < grid.size(); ++i) {
    if (grid.label(i) != CellLabel::kPlate1) continue;
    const auto si = static_cast<std::size_t>(i);
    if (s.search.dist[si] == s.min_length &&
        (best < 0 || s.search.length[si] < s.search.length[static_cast<std::size_t>(best)])) {
      best = i;
    }
  }
  out.found = true;
  out.rho_length = s.min_length;
  out.graph_path = trace_path(s.search, best);
  out.path = graph.to_curve(out.graph_path);
  return out;
}

ModulusReport solve_modulus(const HorizontalGraph& graph,
                            const ModulusOptions& opt) {
  if (!(opt.p > 1.0) || !std::isfinite(opt.p)) {
    throw ConfigError("modulus exponent p must satisfy 1 < p < inf");
  }
  if (!(opt.tol > 0.0 && opt.tol < 1.0)) {
    throw ConfigError("modulus tolerance must lie in (0, 1)");
  }
  const Grid& grid = graph.grid();
  ModulusReport rep;
  rep.ill_conditioned = opt.p < 1.1;
  rep.density = DensityField{graph.grid_ptr(),
                             std::vector<double>(static_cast<std::size_t>(grid.size()), 0.0)};
  if (!graph.connectivity().plates_connected) {
    rep.empty_family = true;
    return rep;
  }

  DualSolver dual(graph, opt.p);
  const double threshold = 1.0 - opt.tol;
  double best_ub = std::numeric_limits<double>::infinity();
  std::vector<double> rho = dual.full_density(grid.h());
  double energy = DensityField{graph.grid_ptr(), rho}.energy(opt.p);
  double lower = 0.0;

  for (int it = 0;; ++it) {
    Separation sep = separate(graph, rho, threshold);
    const double m = sep.min_length;
    if (!std::isfinite(m)) {
      rep.empty_family = true;
      return rep;
    }
    if (m > 0.0) {
      const double ub = energy / std::pow(m, opt.p);
      if (ub < best_ub) {
        best_ub = ub;
        rep.density.values = rho;
        for (double& r : rep.density.values) r /= m;
      }
    }
    rep.trace.push_back(ModulusTraceRow{it, energy, lower, best_ub, m, dual.size()});
    rep.iterations = it;
    rep.min_rho_length = m;
    rep.residual = 1.0 - m;
    if (m >= threshold) break;
    if (it >= opt.max_iter) {
      rep.max_iter_reached = true;
      break;
    }
    int added = 0;
    for (const auto& [d, node] : sep.violated) {
      if (added >= opt.max_new_constraints) break;
      if (dual.add(trace_path(sep.search, node))) ++added;
    }
    const int sweeps = added > 0 ? opt.max_sweeps : 4 * opt.max_sweeps;
    dual.sweep(sweeps, opt.sweep_tol);
    lower = std::max(lower, dual.dual_objective());
    rho = dual.full_density();
    energy = dual.energy();
  }
  rep.value = best_ub;
  rep.upper_bound = best_ub;
  rep.lower_bound = lower;
  if (opt.keep_family) {
    for (const auto& c : dual.family()) {
      rep.active_family.push_back(graph.to_curve(c.path));
    }
  }
  return rep;
}

ModulusReport solve_modulus(const Condenser& c, double h,
                            const ModulusOptions& opt, int graph_radius) {
  auto graph = build_horizontal_graph(build_grid(c, h), graph_radius);
  return solve_modulus(*graph, opt);
}

double standard_bump(double r) {
  if (!(r < 1.0)) return 0.0;
  return std::exp(-1.0 / (1.0 - r * r));
}

double bump_normalization(int homogeneous_dim, const BumpProfile& phi) {
  const int q = homogeneous_dim;
  auto f = [&](double r) { return q * std::pow(r, q - 1) * phi(r); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, 0.0, 1.0, 15, 1e-14);
}

namespace {

template <typename F>
void for_each_node_in_box(const Grid& g, const CoordinateBox& box, F&& f) {
  const int n = g.dim();
  std::array<int, kMaxDim> lo{}, hi{}, idx{};
  for (int a = 0; a < n; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    lo[sa] = std::max(0, static_cast<int>(std::ceil((box.lo[a] - g.origin(a)) / g.spacing(a) - 1e-9)));
    hi[sa] = std::min(g.shape(a) - 1,
                      static_cast<int>(std::floor((box.hi[a] - g.origin(a)) / g.spacing(a) + 1e-9)));
    if (lo[sa] > hi[sa]) return;
    idx[sa] = lo[sa];
  }
  while (true) {
    f(g.ravel(std::span<const int>(idx.data(), static_cast<std::size_t>(n))));
    int a = n - 1;
    while (a >= 0) {
      const auto sa = static_cast<std::size_t>(a);
      if (++idx[sa] <= hi[sa]) break;
      idx[sa] = lo[sa];
      --a;
    }
    if (a < 0) return;
  }
}

}  // namespace

double kernel_mass(const Grid& grid, const Point& x, double t,
                   const BumpProfile& phi) {
  const GroupSpec& spec = grid.group();
  const int q = spec.homogeneous_dim();
  const double z = bump_normalization(q, phi);
  const double scale = std::pow(t, -q) / z * grid.cell_volume();
  const CoordinateBox box = right_translate_box(spec, x, gauge_ball_box(spec, t));
  double mass = 0.0;
  for_each_node_in_box(grid, box, [&](std::int64_t j) {
    const Point y = grid.center(j);
    const double r = homogeneous_norm(spec, multiply(spec, x, inverse(spec, y))) / t;
    mass += phi(r) * scale;
  });
  return mass;
}

DensityField mollify_density(const DensityField& rho, double t,
                             const BumpProfile& phi) {
  const Grid& grid = *rho.grid;
  if (!(t >= 2.0 * grid.h())) {
    throw ConfigError("mollifier scale t must be at least 2h");
  }
  const GroupSpec& spec = grid.group();
  const CoordinateBox ball = gauge_ball_box(spec, t);
  DensityField out{rho.grid, std::vector<double>(rho.values.size(), 0.0)};
  if (spec.is_abelian()) {
    // The kernel depends only on the lattice offset.
    const int n = grid.dim();
    std::vector<std::array<int, kMaxDim>> offs;
    std::vector<double> w;
    std::array<int, kMaxDim> reach{}, o{};
    for (int a = 0; a < n; ++a) {
      reach[static_cast<std::size_t>(a)] = static_cast<int>(std::floor(t / grid.spacing(a) + 1e-9));
      o[static_cast<std::size_t>(a)] = -reach[static_cast<std::size_t>(a)];
    }
    Point d = spec.identity();
    while (true) {
      for (int a = 0; a < n; ++a) d.x1[a] = o[static_cast<std::size_t>(a)] * grid.spacing(a);
      const double s = homogeneous_norm(spec, d) / t;
      if (s < 1.0) {
        offs.push_back(o);
        w.push_back(phi(s));
      }
      int a = n - 1;
      for (; a >= 0; --a) {
        const auto sa = static_cast<std::size_t>(a);
        if (++o[sa] <= reach[sa]) break;
        o[sa] = -reach[sa];
      }
      if (a < 0) break;
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= total;
    std::array<int, kMaxDim> idx{}, nb{};
    for (std::int64_t i = 0; i < grid.size(); ++i) {
      if (grid.label(i) != CellLabel::kInterior) continue;
      grid.unravel(i, std::span<int>(idx.data(), static_cast<std::size_t>(n)));
      double acc = 0.0;
      for (std::size_t k = 0; k < offs.size(); ++k) {
        bool inside = true;
        for (int a = 0; a < n && inside; ++a) {
          const auto sa = static_cast<std::size_t>(a);
          nb[sa] = idx[sa] - offs[k][sa];
          inside = nb[sa] >= 0 && nb[sa] < grid.shape(a);
        }
        if (!inside) continue;
        acc += w[k] * rho.values[static_cast<std::size_t>(
                          grid.ravel(std::span<const int>(nb.data(), static_cast<std::size_t>(n))))];
      }
      out.values[static_cast<std::size_t>(i)] = acc;
    }
    return out;
  }
  const int n = grid.dim();
  std::array<int, kMaxDim> lo{}, hi{}, idx{};
  for (std::int64_t i = 0; i < grid.size(); ++i) {
    if (grid.label(i) != CellLabel::kInterior) continue;
    const Point x = grid.center(i);
    const CoordinateBox box = right_translate_box(spec, x, ball);
    for (int a = 0; a < n; ++a) {
      const auto sa = static_cast<std::size_t>(a);
      lo[sa] = static_cast<int>(std::ceil((box.lo[a] - grid.origin(a)) / grid.spacing(a) - 1e-9));
      hi[sa] = static_cast<int>(std::floor((box.hi[a] - grid.origin(a)) / grid.spacing(a) + 1e-9));
      idx[sa] = lo[sa];
    }
    // Weights are summed over the whole lattice, in the grid or not.
    double acc = 0.0, total = 0.0;
    FlatVector f(n);
    while (true) {
      bool inside = true;
      for (int a = 0; a < n; ++a) {
        const int m = idx[static_cast<std::size_t>(a)];
        f[a] = grid.origin(a) + grid.spacing(a) * m;
        inside = inside && m >= 0 && m < grid.shape(a);
      }
      const double sn = homogeneous_norm(spec, multiply(spec, x, inverse(spec, spec.from_flat(f)))) / t;
      if (sn < 1.0) {
        const double wt = phi(sn);
        total += wt;
        if (inside) {
          acc += wt * rho.values[static_cast<std::size_t>(
                          grid.ravel(std::span<const int>(idx.data(), static_cast<std::size_t>(n))))];
        }
      }
      int a = n - 1;
      for (; a >= 0; --a) {
        const auto sa = static_cast<std::size_t>(a);
        if (++idx[sa] <= hi[sa]) break;
        idx[sa] = lo[sa];
      }
      if (a < 0) break;
    }
    out.values[static_cast<std::size_t>(i)] = total > 0.0 ? acc / total : 0.0;
  }
  return out;
}

double lp_distance(const DensityField& a, const DensityField& b, double p) {
  if (a.grid != b.grid) throw DimensionError("densities live on different grids");
  const Grid& g = *a.grid;
  double s = 0.0;
  for (std::int64_t i = 0; i < g.size(); ++i) {
    const auto si = static_cast<std::size_t>(i);
    const double d = std::abs(a.values[si] - b.values[si]);
    if (d > 0.0) s += g.measure(i) * std::pow(d, p);
  }
  return std::pow(s, 1.0 / p);
}

std::vector<ContinuityLevel> modulus_continuity_experiment(
    const Condenser& base, double h,
    const std::vector<std::pair<Region, Region>>& plates,
    const ModulusOptions& opt, int graph_radius) {
  auto limit = build_grid(base, h);
  std::vector<ContinuityLevel> out;
  std::shared_ptr<const Grid> prev = limit;
  for (std::size_t j = 0; j < plates.size(); ++j) {
    auto grid = build_grid(base.with_plates(plates[j].first, plates[j].second), h);
    // Each level must sit between the previous level and the limit.
    for (std::int64_t i = 0; i < grid->size(); ++i) {
      const CellLabel now = grid->label(i);
      const CellLabel lim = limit->label(i);
      if ((lim == CellLabel::kPlate0 || lim == CellLabel::kPlate1) && now != lim) {
        throw ConfigError("level " + std::to_string(j + 1) +
                          " does not contain the limiting plates");
      }
      if (j > 0 && (now == CellLabel::kPlate0 || now == CellLabel::kPlate1) &&
          prev->label(i) != now) {
        throw ConfigError("plate levels are not nested at level " +
                          std::to_string(j + 1));
      }
    }
    const ModulusReport r = solve_modulus(*build_horizontal_graph(grid, graph_radius), opt);
    out.push_back(ContinuityLevel{static_cast<int>(j + 1), r.value, r.lower_bound});
    prev = grid;
  }
  return out;
}

}  // namespace capmod
