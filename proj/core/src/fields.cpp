#include "capmod/fields.hpp"

#include <cmath>
#include <stdexcept>

#include "capmod/error.hpp"

namespace capmod {
namespace {

double interpolate_values(const Grid& g, const std::vector<double>& v,
                          const Point& x) {
  Stencil st;
  if (!g.stencil(g.lattice_coords(x), &st)) {
    throw std::out_of_range("point lies outside the grid");
  }
  double s = 0.0;
  for (int c = 0; c < st.count; ++c) {
    const auto sc = static_cast<std::size_t>(c);
    s += st.weight[sc] * v[static_cast<std::size_t>(st.index[sc])];
  }
  return s;
}

}  // namespace

DensityField DensityField::constant(std::shared_ptr<const Grid> g, double c) {
  DensityField d{g, std::vector<double>(static_cast<std::size_t>(g->size()), c)};
  for (std::int64_t i = 0; i < g->size(); ++i) {
    if (g->label(i) == CellLabel::kExterior) d.values[static_cast<std::size_t>(i)] = 0.0;
  }
  return d;
}

double DensityField::interpolate(const Point& x) const {
  return interpolate_values(*grid, values, x);
}

double DensityField::energy(double p) const {
  double e = 0.0;
  for (std::int64_t i = 0; i < grid->size(); ++i) {
    const double r = values[static_cast<std::size_t>(i)];
    if (r > 0.0) e += grid->measure(i) * std::pow(r, p);
  }
  return e;
}

void DensityField::check() const {
  if (!grid || values.size() != static_cast<std::size_t>(grid->size())) {
    throw DimensionError("density does not match its grid");
  }
  for (std::int64_t i = 0; i < grid->size(); ++i) {
    const double r = values[static_cast<std::size_t>(i)];
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw std::invalid_argument("density must be finite and nonnegative");
    }
    if (grid->label(i) == CellLabel::kExterior && r != 0.0) {
      throw std::invalid_argument("density is nonzero outside the domain");
    }
  }
}

double PotentialField::interpolate(const Point& x) const {
  return interpolate_values(*grid, values, x);
}

bool PotentialField::is_admissible(double tol) const {
  for (std::int64_t i = 0; i < grid->size(); ++i) {
    const double u = values[static_cast<std::size_t>(i)];
    switch (grid->label(i)) {
      case CellLabel::kPlate0:
        if (std::abs(u) > tol) return false;
        break;
      case CellLabel::kPlate1:
        if (std::abs(u - 1.0) > tol) return false;
        break;
      case CellLabel::kInterior:
        if (u < -tol || u > 1.0 + tol) return false;
        break;
      case CellLabel::kExterior:
        break;
    }
  }
  return true;
}

}  // namespace capmod
