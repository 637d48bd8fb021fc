#pragma once

#include <memory>
#include <vector>

#include "capmod/condenser.hpp"

namespace capmod {

/// Cellwise density rho >= 0. Exterior cells always hold 0.
struct DensityField {
  std::shared_ptr<const Grid> grid;
  std::vector<double> values;

  static DensityField constant(std::shared_ptr<const Grid> g, double c);
  /// Multilinear interpolation; throws std::out_of_range outside the
  /// lattice.
  double interpolate(const Point& x) const;
  /// sum over D of sigma * rho^p.
  double energy(double p) const;
  /// Throws when an entry is negative, non-finite, or set outside D.
  void check() const;
};

/// Nodewise potential u.
struct PotentialField {
  std::shared_ptr<const Grid> grid;
  std::vector<double> values;

  double interpolate(const Point& x) const;
  /// True when 0 <= u <= 1, u = 0 on E0 and u = 1 on E1.
  bool is_admissible(double tol = 0.0) const;
};

}  // namespace capmod
