#include "capmod/curve.hpp"

#include <cmath>
#include <stdexcept>

#include "capmod/error.hpp"
#include "capmod/fields.hpp"
#include "capmod/graph.hpp"

namespace capmod {
namespace {

FlatVector velocity(const GroupSpec& spec, const FlatVector& x,
                    const LayerVector& u) {
  return horizontal_frame(spec, spec.from_flat(x)) * u;
}

Point midpoint(const Point& a, const Point& b) {
  return Point{0.5 * (a.x1 + b.x1), 0.5 * (a.x2 + b.x2)};
}

void check_path(const CurvePath& path) {
  if (path.controls.size() != path.dt.size() ||
      path.nodes.size() != path.controls.size() + 1) {
    throw std::invalid_argument("curve path arrays have inconsistent sizes");
  }
}

}  // namespace

CurvePath integrate_horizontal(const GroupSpec& spec, const Point& x0,
                               const std::vector<ControlSegment>& controls) {
  spec.check_point(x0);
  CurvePath path;
  path.nodes.push_back(x0);
  FlatVector x = x0.flat();
  for (const auto& seg : controls) {
    if (!(seg.dt > 0.0)) throw std::invalid_argument("segment dt must be > 0");
    if (seg.control.xi.size() != spec.n1()) {
      throw DimensionError("control does not match n1");
    }
    const double dt = seg.dt;
    const LayerVector& u = seg.control.xi;
    const FlatVector k1 = velocity(spec, x, u);
    const FlatVector k2 = velocity(spec, x + 0.5 * dt * k1, u);
    const FlatVector k3 = velocity(spec, x + 0.5 * dt * k2, u);
    const FlatVector k4 = velocity(spec, x + dt * k3, u);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    path.nodes.push_back(spec.from_flat(x));
    path.controls.push_back(seg.control);
    path.dt.push_back(dt);
  }
  return path;
}

Point flow(const GroupSpec& spec, const Point& x, const HorizontalVector& u,
           double t) {
  return multiply(spec, x, exp_horizontal(spec, HorizontalVector{t * u.xi}));
}

double finsler_length(const MetricSpec& m, const CurvePath& path) {
  check_path(path);
  double len = 0.0;
  for (std::size_t k = 0; k < path.controls.size(); ++k) {
    if (path.dt[k] == 0.0) continue;
    const Point mid = midpoint(path.nodes[k], path.nodes[k + 1]);
    len += m.at(mid).f(path.controls[k].xi) * path.dt[k];
  }
  return len;
}

double rho_length(const MetricSpec& m, const DensityField& rho,
                  const CurvePath& path) {
  check_path(path);
  double len = 0.0;
  for (std::size_t k = 0; k < path.controls.size(); ++k) {
    if (path.dt[k] == 0.0) continue;
    const Point mid = midpoint(path.nodes[k], path.nodes[k + 1]);
    const double r = rho.interpolate(mid);
    if (r == 0.0) continue;
    len += r * m.at(mid).f(path.controls[k].xi) * path.dt[k];
  }
  return len;
}

double cc_distance(const GroupSpec& spec, const MetricSpec& m,
                   const HorizontalGraph& graph, const Point& x,
                   const Point& y) {
  const Grid& g = graph.grid();
  if (spec.dim() != g.dim() || m.n1() != g.metric().n1()) {
    throw DimensionError("graph does not belong to this group and metric");
  }
  const std::int64_t a = g.nearest(g.lattice_coords(x));
  const std::int64_t b = g.nearest(g.lattice_coords(y));
  if (a < 0 || b < 0 || g.label(a) == CellLabel::kExterior ||
      g.label(b) == CellLabel::kExterior) {
    throw std::out_of_range("cc_distance endpoint lies outside the domain");
  }
  const std::int64_t src[] = {a};
  const SearchResult r = shortest_paths_from(graph, src, {}, true);
  return r.dist[static_cast<std::size_t>(b)];
}

}  // namespace capmod
