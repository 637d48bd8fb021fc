#include "capmod/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>

#include "capmod/error.hpp"

namespace capmod {
namespace {

std::vector<LatticeShift> axis_shifts(const Grid& g) {
  const int n1 = g.group().n1();
  std::vector<LatticeShift> out;
  for (int j = 0; j < n1; ++j) {
    for (int side = 0; side < 2; ++side) {
      LayerVector w = LayerVector::Zero(n1);
      w[j] = side == 0 ? g.h() : -g.h();
      out.push_back(right_translation_shift(g, w));
    }
  }
  return out;
}

double plate_value(CellLabel l) { return l == CellLabel::kPlate1 ? 1.0 : 0.0; }

bool is_plate(CellLabel l) {
  return l == CellLabel::kPlate0 || l == CellLabel::kPlate1;
}

struct Sample {
  double value;
  double dist;
};

// Value of u at the lattice point t and its distance from the interior
// node `self`, or nullopt when t leaves D.
std::optional<Sample> value_at(const Grid& g, const std::vector<double>& u,
                               const FlatVector& t, std::int64_t self) {
  const std::int64_t j = g.nearest(t);
  if (j < 0 || g.label(j) == CellLabel::kExterior) return std::nullopt;
  if (g.label(self) == CellLabel::kInterior && is_plate(g.label(j))) {
    return Sample{plate_value(g.label(j)), 0.5 * g.h()};
  }
  Stencil st;
  if (!g.stencil(t, &st)) return std::nullopt;
  double v = 0.0;
  for (int c = 0; c < st.count; ++c) {
    const auto sc = static_cast<std::size_t>(c);
    std::int64_t cell = st.index[sc];
    if (g.label(cell) == CellLabel::kExterior) cell = self;
    v += st.weight[sc] * u[static_cast<std::size_t>(cell)];
  }
  return Sample{v, g.h()};
}

LocalNorm norm_at(const Grid& g, std::int64_t i) {
  return g.metric().at(g.center(i));
}

}  // namespace

Covector horizontal_gradient(const Grid& g, const GroupSpec& spec,
                             const PotentialField& u, std::int64_t node,
                             bool* one_sided) {
  if (g.label(node) == CellLabel::kExterior) {
    throw std::invalid_argument("gradient requested outside D");
  }
  const int n1 = spec.n1();
  const auto shifts = axis_shifts(g);
  const FlatVector s = g.lattice_coords(node);
  const double u0 = u.values[static_cast<std::size_t>(node)];
  Covector out{LayerVector::Zero(n1)};
  bool fallback = false;
  for (int j = 0; j < n1; ++j) {
    const auto fwd = value_at(g, u.values, shifts[static_cast<std::size_t>(2 * j)].apply(s, n1), node);
    const auto bwd = value_at(g, u.values, shifts[static_cast<std::size_t>(2 * j + 1)].apply(s, n1), node);
    if (fwd && bwd) {
      out.omega[j] = (fwd->value - bwd->value) / (fwd->dist + bwd->dist);
    } else if (fwd) {
      out.omega[j] = (fwd->value - u0) / fwd->dist;
      fallback = true;
    } else if (bwd) {
      out.omega[j] = (u0 - bwd->value) / bwd->dist;
      fallback = true;
    } else {
      fallback = true;
    }
  }
  if (one_sided) *one_sided = fallback;
  return out;
}

CapacityProblem::CapacityProblem(std::shared_ptr<const Grid> grid, double p)
    : grid_(std::move(grid)), p_(p), n1_(grid_->group().n1()) {
  if (!(p_ > 1.0)) throw ConfigError("capacity requires p > 1");
  if (n1_ > 12) throw DimensionError("capacity supports at most 12 horizontal directions");
  const Grid& g = *grid_;
  const auto shifts = axis_shifts(g);
  var_of_cell_.assign(static_cast<std::size_t>(g.size()), -1);
  for (std::int64_t i = 0; i < g.size(); ++i) {
    if (g.label(i) != CellLabel::kInterior) continue;
    var_of_cell_[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(var_cell_.size());
    var_cell_.push_back(i);
  }
  Stencil st;
  for (std::int64_t i : var_cell_) {
    const FlatVector s = g.lattice_coords(i);
    for (const auto& sh : shifts) {
      Target t;
      t.begin = static_cast<std::int64_t>(entry_cell_.size());
      const FlatVector ts = sh.apply(s, n1_);
      const std::int64_t j = g.nearest(ts);
      if (j >= 0 && is_plate(g.label(j))) {
        t.face = plate_value(g.label(j));
      } else if (j >= 0 && g.label(j) == CellLabel::kInterior && g.stencil(ts, &st)) {
        for (int c = 0; c < st.count; ++c) {
          const auto sc = static_cast<std::size_t>(c);
          std::int64_t cell = st.index[sc];
          if (g.label(cell) == CellLabel::kExterior) cell = i;
          entry_cell_.push_back(cell);
          entry_weight_.push_back(st.weight[sc]);
        }
        t.count = st.count;
      }
      targets_.push_back(t);
    }
  }
  nodes_ = var_cell_;
  if (g.metric().is_left_invariant()) {
    norms_.push_back(g.metric().at(g.group().identity()));
  } else {
    norms_.reserve(nodes_.size());
    for (std::int64_t i : nodes_) norms_.push_back(norm_at(g, i));
  }
}

std::vector<double> CapacityProblem::pack(const PotentialField& u) const {
  if (u.values.size() != static_cast<std::size_t>(grid_->size())) {
    throw DimensionError("potential does not match the grid");
  }
  std::vector<double> x(var_cell_.size());
  for (std::size_t v = 0; v < x.size(); ++v) {
    x[v] = u.values[static_cast<std::size_t>(var_cell_[v])];
  }
  return x;
}

PotentialField CapacityProblem::unpack(const std::vector<double>& x) const {
  const Grid& g = *grid_;
  PotentialField u{grid_, std::vector<double>(static_cast<std::size_t>(g.size()), 0.0)};
  for (std::int64_t i = 0; i < g.size(); ++i) {
    if (g.label(i) == CellLabel::kPlate1) u.values[static_cast<std::size_t>(i)] = 1.0;
  }
  for (std::size_t v = 0; v < x.size(); ++v) {
    u.values[static_cast<std::size_t>(var_cell_[v])] = x[v];
  }
  return u;
}

double CapacityProblem::energy(const PotentialField& u) const {
  return energy(pack(u), nullptr);
}

double CapacityProblem::energy(const std::vector<double>& x,
                               std::vector<double>* grad) const {
  if (x.size() != var_cell_.size()) throw DimensionError("wrong number of unknowns");
  const Grid& g = *grid_;
  const std::vector<double> u = unpack(x).values;
  const double inv_h = 1.0 / g.h();
  const int patterns = 1 << n1_;
  const double share = 1.0 / patterns;
  if (grad) grad->assign(x.size(), 0.0);

  LayerVector d(2 * n1_);      // d[2j] forward, d[2j+1] backward
  LayerVector dbar(2 * n1_);   // dE/d d
  LayerVector omega(n1_), gh(n1_);
  double total = 0.0;
  for (std::size_t a = 0; a < nodes_.size(); ++a) {
    const std::int64_t i = nodes_[a];
    const double ui = u[static_cast<std::size_t>(i)];
    const Target* tg = &targets_[a * static_cast<std::size_t>(2 * n1_)];
    for (int k = 0; k < 2 * n1_; ++k) {
      const Target& t = tg[k];
      if (t.face >= 0.0) {
        d[k] = (k % 2 == 0 ? t.face - ui : ui - t.face) * 2.0 * inv_h;
        continue;
      }
      if (t.count == 0) {
        d[k] = 0.0;
        continue;
      }
      double v = 0.0;
      for (std::int64_t e = t.begin; e < t.begin + t.count; ++e) {
        v += entry_weight_[static_cast<std::size_t>(e)] *
             u[static_cast<std::size_t>(entry_cell_[static_cast<std::size_t>(e)])];
      }
      d[k] = (k % 2 == 0 ? v - ui : ui - v) * inv_h;
    }
    const LocalNorm& nrm = norms_.size() == 1 ? norms_[0] : norms_[a];
    const double w = g.measure(i) * share;
    dbar.setZero();
    for (int s = 0; s < patterns; ++s) {
      for (int j = 0; j < n1_; ++j) omega[j] = d[2 * j + ((s >> j) & 1)];
      double hv;
      if (grad) {
        hv = nrm.h_with_gradient(omega, &gh);
      } else {
        hv = nrm.h(omega);
      }
      if (hv <= 0.0) continue;
      const double hp1 = std::pow(hv, p_ - 1.0);
      total += w * hp1 * hv;
      if (grad) {
        for (int j = 0; j < n1_; ++j) dbar[2 * j + ((s >> j) & 1)] += w * p_ * hp1 * gh[j];
      }
    }
    if (!grad) continue;
    for (int k = 0; k < 2 * n1_; ++k) {
      const Target& t = tg[k];
      if ((t.count == 0 && t.face < 0.0) || dbar[k] == 0.0) continue;
      const double c = (k % 2 == 0 ? 1.0 : -1.0) * dbar[k] * inv_h;
      (*grad)[a] -= t.face >= 0.0 ? 2.0 * c : c;
      for (std::int64_t e = t.begin; e < t.begin + t.count; ++e) {
        const std::int32_t ve =
            var_of_cell_[static_cast<std::size_t>(entry_cell_[static_cast<std::size_t>(e)])];
        if (ve >= 0) (*grad)[static_cast<std::size_t>(ve)] += c * entry_weight_[static_cast<std::size_t>(e)];
      }
    }
  }
  return total;
}

PotentialField potential_from_density(const HorizontalGraph& graph,
                                      const DensityField& rho,
                                      std::int64_t* unreachable) {
  const Grid& g = graph.grid();
  const SearchResult r = shortest_paths(graph, rho.values, true);
  PotentialField u{graph.grid_ptr(), std::vector<double>(static_cast<std::size_t>(g.size()), 0.0)};
  std::int64_t lost = 0;
  for (std::int64_t i = 0; i < g.size(); ++i) {
    const auto si = static_cast<std::size_t>(i);
    switch (g.label(i)) {
      case CellLabel::kExterior:
      case CellLabel::kPlate0:
        break;
      case CellLabel::kPlate1:
      case CellLabel::kInterior:
        if (std::isfinite(r.dist[si])) {
          u.values[si] = std::min(1.0, r.dist[si]);
        } else {
          u.values[si] = 1.0;
          ++lost;
        }
        break;
    }
  }
  if (unreachable) *unreachable = lost;
  return u;
}

DensityField density_from_potential(const PotentialField& u) {
  const Grid& g = *u.grid;
  DensityField rho{u.grid, std::vector<double>(static_cast<std::size_t>(g.size()), 0.0)};
  const bool invariant = g.metric().is_left_invariant();
  const LocalNorm fixed = g.metric().at(g.group().identity());
  for (std::int64_t i = 0; i < g.size(); ++i) {
    if (g.label(i) == CellLabel::kExterior) continue;
    const Covector w = horizontal_gradient(g, g.group(), u, i);
    rho.values[static_cast<std::size_t>(i)] =
        invariant ? fixed.h(w.omega) : norm_at(g, i).h(w.omega);
  }
  return rho;
}

namespace {

struct Pair {
  std::vector<double> s, y;
  double rho;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

CapacityResult solve_capacity(const HorizontalGraph& graph,
                              const CapacityOptions& opt,
                              const PotentialField* initial) {
  const auto& grid = graph.grid_ptr();
  const Grid& g = *grid;
  CapacityProblem prob(grid, opt.p);
  const std::size_t n = prob.unknowns();

  PotentialField u0;
  if (initial) {
    if (initial->values.size() != static_cast<std::size_t>(g.size())) {
      throw DimensionError("initial potential does not match the grid");
    }
    u0 = *initial;
  } else {
    const SearchResult r = shortest_paths(graph, {}, true);
    double m = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < g.size(); ++i) {
      if (g.label(i) == CellLabel::kPlate1) m = std::min(m, r.dist[static_cast<std::size_t>(i)]);
    }
    const double c = std::isfinite(m) && m > 0.0 ? 1.0 / m : 1.0;
    u0 = potential_from_density(graph, DensityField::constant(grid, c));
  }
  std::vector<double> x = prob.pack(u0);
  for (double& v : x) v = std::clamp(v, 0.0, 1.0);

  CapacityResult res;
  CapacityReport& rep = res.report;
  std::vector<double> inv_sigma(n);
  for (std::size_t v = 0; v < n; ++v) inv_sigma[v] = 1.0 / prob.sigma(v);

  std::vector<double> grad;
  double f = prob.energy(x, &grad);
  ++rep.evaluations;
  if (opt.keep_trace) rep.energy_trace.push_back(f);

  std::deque<Pair> mem;
  double gamma = g.h() * g.h() / (4.0 * g.group().n1());
  std::vector<char> free(n);
  std::vector<double> dir(n), q(n), xn(n), gn(n);
  std::vector<double> alpha;

  auto projected_norm = [&]() {
    double s = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      const bool fixed = (x[v] <= 0.0 && grad[v] > 0.0) || (x[v] >= 1.0 && grad[v] < 0.0);
      free[v] = !fixed;
      if (!fixed) s += grad[v] * grad[v] * inv_sigma[v];
    }
    return std::sqrt(s);
  };

  rep.gradient_norm = projected_norm();
  int it = 0;
  while (rep.gradient_norm > opt.tol) {
    if (it >= opt.max_iter) {
      rep.max_iter_reached = true;
      break;
    }
    ++it;
    // Two-loop recursion restricted to the free variables.
    for (std::size_t v = 0; v < n; ++v) q[v] = free[v] ? grad[v] : 0.0;
    alpha.assign(mem.size(), 0.0);
    for (std::size_t k = mem.size(); k-- > 0;) {
      alpha[k] = mem[k].rho * dot(mem[k].s, q);
      for (std::size_t v = 0; v < n; ++v) {
        if (free[v]) q[v] -= alpha[k] * mem[k].y[v];
      }
    }
    for (std::size_t v = 0; v < n; ++v) q[v] *= gamma * inv_sigma[v];
    for (std::size_t k = 0; k < mem.size(); ++k) {
      const double beta = mem[k].rho * dot(mem[k].y, q);
      for (std::size_t v = 0; v < n; ++v) {
        if (free[v]) q[v] += (alpha[k] - beta) * mem[k].s[v];
      }
    }
    double slope = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      dir[v] = free[v] ? -q[v] : 0.0;
      slope += dir[v] * grad[v];
    }
    if (!(slope < 0.0)) {
      mem.clear();
      for (std::size_t v = 0; v < n; ++v) dir[v] = free[v] ? -gamma * inv_sigma[v] * grad[v] : 0.0;
    }

    double t = 1.0;
    bool accepted = false;
    double fn = 0.0;
    for (int b = 0; b <= opt.max_backtracks; ++b) {
      double decrease = 0.0;
      for (std::size_t v = 0; v < n; ++v) {
        xn[v] = std::clamp(x[v] + t * dir[v], 0.0, 1.0);
        decrease += grad[v] * (xn[v] - x[v]);
      }
      fn = prob.energy(xn, &gn);
      ++rep.evaluations;
      if (fn <= f + opt.armijo * decrease) {
        accepted = true;
        break;
      }
      ++rep.backtracks;
      t *= 0.5;
    }
    if (!accepted) {
      if (mem.empty()) {
        rep.stalled = true;
        break;
      }
      mem.clear();
      continue;
    }
    ++rep.accepted_steps;
    Pair pr{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t v = 0; v < n; ++v) {
      pr.s[v] = xn[v] - x[v];
      pr.y[v] = gn[v] - grad[v];
    }
    const double sy = dot(pr.s, pr.y);
    double ydy = 0.0;
    for (std::size_t v = 0; v < n; ++v) ydy += pr.y[v] * pr.y[v] * inv_sigma[v];
    if (sy > 1e-14 * std::sqrt(dot(pr.s, pr.s) * dot(pr.y, pr.y)) && ydy > 0.0) {
      gamma = sy / ydy;
      pr.rho = 1.0 / sy;
      mem.push_back(std::move(pr));
      if (static_cast<int>(mem.size()) > opt.memory) mem.pop_front();
    }
    const double prev = f;
    x.swap(xn);
    grad.swap(gn);
    f = fn;
    if (opt.keep_trace) rep.energy_trace.push_back(f);
    rep.gradient_norm = projected_norm();
    if (prev - f <= 1e-16 * std::abs(prev) && rep.gradient_norm > opt.tol) {
      // No measurable progress left at double precision.
      rep.stalled = true;
      break;
    }
  }
  rep.iterations = it;
  rep.converged = rep.gradient_norm <= opt.tol;
  rep.value = f;
  res.potential = prob.unpack(x);
  return res;
}

CapacityResult solve_capacity(const Condenser& c, double h,
                              const CapacityOptions& opt, int graph_radius) {
  const auto graph = build_horizontal_graph(build_grid(c, h), graph_radius);
  return solve_capacity(*graph, opt);
}

}  // namespace capmod
