#include "capmod/condenser.hpp"

#include <cmath>
#include <numeric>

#include "capmod/error.hpp"

namespace capmod {

Condenser::Condenser(GroupSpec g, MetricSpec m, Region d, Region e0, Region e1,
                     ScalarField w)
    : group(std::move(g)),
      metric(std::move(m)),
      domain(std::move(d)),
      plate0(std::move(e0)),
      plate1(std::move(e1)),
      weight(std::move(w)) {
  if (metric.n1() != group.n1()) {
    throw DimensionError("metric is defined on a different first layer");
  }
  domain.validate(group);
  plate0.validate(group);
  plate1.validate(group);
}

Condenser Condenser::dilated(double lambda) const {
  ScalarField w;
  if (weight) {
    w = [g = group, f = weight, lambda](const Point& x) {
      return f(dilate(g, 1.0 / lambda, x));
    };
  }
  return Condenser(group, metric, domain.dilated(lambda),
                   plate0.dilated(lambda), plate1.dilated(lambda), w);
}

Condenser Condenser::with_plates(Region e0, Region e1) const {
  return Condenser(group, metric, domain, std::move(e0), std::move(e1),
                   weight);
}

double Grid::total_measure() const {
  return std::accumulate(measure_.begin(), measure_.end(), 0.0);
}

void Grid::unravel(std::int64_t i, std::span<int> multi) const {
  for (int a = 0; a < dim_; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    multi[sa] = static_cast<int>(i / strides_[sa]);
    i -= static_cast<std::int64_t>(multi[sa]) * strides_[sa];
  }
}

std::int64_t Grid::ravel(std::span<const int> multi) const {
  std::int64_t i = 0;
  for (int a = 0; a < dim_; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    i += static_cast<std::int64_t>(multi[sa]) * strides_[sa];
  }
  return i;
}

Point Grid::center(std::int64_t i) const {
  std::array<int, kMaxDim> m{};
  unravel(i, m);
  FlatVector f(dim_);
  for (int a = 0; a < dim_; ++a) {
    f[a] = origin_[a] + spacing_[a] * m[static_cast<std::size_t>(a)];
  }
  return group().from_flat(f);
}

FlatVector Grid::lattice_coords(const Point& x) const {
  return (x.flat() - origin_).cwiseQuotient(spacing_);
}

FlatVector Grid::lattice_coords(std::int64_t i) const {
  std::array<int, kMaxDim> m{};
  unravel(i, m);
  FlatVector s(dim_);
  for (int a = 0; a < dim_; ++a) s[a] = m[static_cast<std::size_t>(a)];
  return s;
}

std::int64_t Grid::nearest(const FlatVector& s) const {
  std::int64_t i = 0;
  for (int a = 0; a < dim_; ++a) {
    const double r = std::round(s[a]);
    const auto sa = static_cast<std::size_t>(a);
    if (!(r >= 0.0) || r > shape_[sa] - 1) return -1;
    i += static_cast<std::int64_t>(r) * strides_[sa];
  }
  return i;
}

bool Grid::stencil(const FlatVector& s, Stencil* out) const {
  if (dim_ > 6) throw DimensionError("interpolation supports at most 6 axes");
  std::array<std::int64_t, kMaxDim> base{};
  std::array<double, kMaxDim> frac{};
  for (int a = 0; a < dim_; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    const int n = shape_[sa];
    double v = s[a];
    if (std::abs(v - std::round(v)) < 1e-9) v = std::round(v);
    if (!(v >= -0.5) || v > n - 0.5) return false;
    v = std::clamp(v, 0.0, static_cast<double>(n - 1));
    int i0 = static_cast<int>(std::floor(v));
    if (i0 > n - 2) i0 = std::max(0, n - 2);
    base[sa] = i0;
    frac[sa] = n == 1 ? 0.0 : v - i0;
  }
  // Corners with a zero factor along some axis are skipped.
  int count = 1;
  out->index[0] = 0;
  out->weight[0] = 1.0;
  for (int a = 0; a < dim_; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    const double f = frac[sa];
    const std::int64_t off = base[sa] * strides_[sa];
    if (f == 0.0) {
      for (int c = 0; c < count; ++c) out->index[static_cast<std::size_t>(c)] += off;
      continue;
    }
    if (f == 1.0) {
      for (int c = 0; c < count; ++c) {
        out->index[static_cast<std::size_t>(c)] += off + strides_[sa];
      }
      continue;
    }
    for (int c = 0; c < count; ++c) {
      const auto sc = static_cast<std::size_t>(c);
      const auto sd = static_cast<std::size_t>(c + count);
      out->index[sd] = out->index[sc] + off + strides_[sa];
      out->weight[sd] = out->weight[sc] * f;
      out->index[sc] += off;
      out->weight[sc] *= 1.0 - f;
    }
    count *= 2;
  }
  out->count = count;
  return true;
}

std::shared_ptr<const Grid> build_grid(const Condenser& c, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw ConfigError("grid spacing must be positive");
  }
  const GroupSpec& g = c.group;
  const auto bounds = c.domain.bounds(g);
  if (!bounds || !bounds->is_bounded()) {
    throw ConfigError("domain " + c.domain.describe() + " is unbounded");
  }
  auto grid = std::shared_ptr<Grid>(new Grid(c));
  Grid& G = *grid;
  G.h_ = h;
  G.dim_ = g.dim();
  G.shape_.assign(static_cast<std::size_t>(G.dim_), 1);
  G.origin_ = FlatVector(G.dim_);
  G.spacing_ = FlatVector(G.dim_);

  double total = 1.0;
  for (int a = 0; a < G.dim_; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    const double lo = bounds->lo[a];
    const double hi = bounds->hi[a];
    if (g.is_abelian()) {
      G.spacing_[a] = h;
      const double cells = (hi - lo) / h;
      const double rounded = std::round(cells);
      int n = std::abs(cells - rounded) < 1e-9 ? static_cast<int>(rounded)
                                               : static_cast<int>(std::ceil(cells));
      n = std::max(n, 1);
      G.shape_[sa] = n;
      G.origin_[a] = 0.5 * (lo + hi) - 0.5 * (n - 1) * h;
    } else {
      const double d = a < g.n1() ? h : 0.5 * h * h;
      G.spacing_[a] = d;
      const double i_lo = std::ceil(lo / d - 1e-9);
      const double i_hi = std::floor(hi / d + 1e-9);
      G.shape_[sa] = std::max(1, static_cast<int>(i_hi - i_lo) + 1);
      G.origin_[a] = i_lo * d;
    }
    total *= G.shape_[sa];
  }
  if (total > 2.0e8) {
    throw ConfigError("grid with " + std::to_string(static_cast<long long>(total)) +
                      " cells is too large; increase h");
  }
  G.size_ = static_cast<std::int64_t>(total);
  G.strides_.assign(static_cast<std::size_t>(G.dim_), 1);
  for (int a = G.dim_ - 2; a >= 0; --a) {
    const auto sa = static_cast<std::size_t>(a);
    G.strides_[sa] = G.strides_[sa + 1] * G.shape_[sa + 1];
  }
  G.exact_moves_ = g.is_abelian() || g.has_integer_brackets();

  double cell = 1.0;
  for (int a = 0; a < G.dim_; ++a) cell *= G.spacing_[a];
  G.cell_volume_ = cell / g.ball_volume();

  G.labels_.assign(static_cast<std::size_t>(G.size_), CellLabel::kExterior);
  G.measure_.assign(static_cast<std::size_t>(G.size_), 0.0);
  for (std::int64_t i = 0; i < G.size_; ++i) {
    const Point x = G.center(i);
    if (!c.domain.contains(g, x)) continue;
    const bool in0 = c.plate0.contains(g, x);
    const bool in1 = c.plate1.contains(g, x);
    if (in0 && in1) {
      throw ConfigError("plates intersect on the grid near " +
                        std::to_string(x.x1[0]));
    }
    const auto si = static_cast<std::size_t>(i);
    G.labels_[si] = in0   ? CellLabel::kPlate0
                    : in1 ? CellLabel::kPlate1
                          : CellLabel::kInterior;
    const double w = c.weight_at(x);
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw ConfigError("weight g must be positive on the domain");
    }
    G.measure_[si] = w * G.cell_volume_;
  }
  for (CellLabel l : G.labels_) ++G.counts_[static_cast<std::size_t>(l)];
  if (G.count(CellLabel::kPlate0) == 0 || G.count(CellLabel::kPlate1) == 0) {
    throw ConfigError("a plate has no cells at h=" + std::to_string(h) +
                      "; refine the grid");
  }
  return grid;
}

}  // namespace capmod
