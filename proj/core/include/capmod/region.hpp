#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "capmod/group.hpp"

namespace capmod {

/// Closed subset of the group built from gauge balls, shells, coordinate
/// boxes and half-spaces with boolean combinations. Immutable; copies share
/// the expression tree.
class Region {
 public:
  Region();  // empty set

  /// {x : |c^{-1} x| <= r}. An empty center means the identity.
  static Region ball(double r, std::vector<double> center = {});
  /// {x : r_in <= |c^{-1} x| <= r_out}.
  static Region shell(double r_in, double r_out,
                      std::vector<double> center = {});
  /// Flat coordinates with lo <= x <= hi componentwise.
  static Region box(std::vector<double> lo, std::vector<double> hi);
  /// {x : a . flat(x) <= b}.
  static Region halfspace(std::vector<double> a, double b);
  static Region everything();

  static Region unite(const Region& a, const Region& b);
  static Region intersect(const Region& a, const Region& b);
  static Region complement(const Region& a);
  static Region minus(const Region& a, const Region& b);

  /// The image delta_lambda(S).
  Region dilated(double lambda) const;

  bool contains(const GroupSpec& spec, const Point& x) const;
  /// Throws DimensionError when a primitive does not match the group.
  void validate(const GroupSpec& spec) const;
  /// Coordinate bounding box, or nullopt when the region is unbounded.
  std::optional<CoordinateBox> bounds(const GroupSpec& spec) const;
  std::string describe() const;

  struct Node;

 private:
  explicit Region(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

}  // namespace capmod
