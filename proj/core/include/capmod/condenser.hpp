#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "capmod/group.hpp"
#include "capmod/metric.hpp"
#include "capmod/region.hpp"

namespace capmod {

/// Condenser (E0, E1, D) with volume weight g and the metric it is measured in.
struct Condenser {
  Condenser(GroupSpec g, MetricSpec m, Region d, Region e0, Region e1,
            ScalarField w = nullptr);

  GroupSpec group;
  MetricSpec metric;
  Region domain;
  Region plate0;
  Region plate1;
  ScalarField weight;  // null means g = 1

  double weight_at(const Point& x) const { return weight ? weight(x) : 1.0; }
  /// The image of the condenser under delta_lambda. The weight is pulled
  /// back; the metric is kept as is, which is the right thing only for
  /// constant-coefficient metrics.
  Condenser dilated(double lambda) const;
  Condenser with_plates(Region e0, Region e1) const;
};

enum class CellLabel : std::uint8_t { kExterior, kInterior, kPlate0, kPlate1 };

/// Multilinear interpolation weights at one point.
struct Stencil {
  static constexpr int kMaxCorners = 64;
  int count = 0;
  std::array<std::int64_t, kMaxCorners> index{};
  std::array<double, kMaxCorners> weight{};
};

/// Axis-aligned lattice over the bounding box of D.
///
/// Abelian groups use a cell-centered lattice with spacing h. Otherwise the
/// lattice is anchored at the origin with spacing h on the first layer and
/// h^2/2 on the second, so that right translation by h e_j maps nodes onto
/// nodes whenever the bracket table is integral.
class Grid {
 public:
  const Condenser& condenser() const { return condenser_; }
  const GroupSpec& group() const { return condenser_.group; }
  const MetricSpec& metric() const { return condenser_.metric; }
  double h() const { return h_; }
  int dim() const { return dim_; }
  std::int64_t size() const { return size_; }
  int shape(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  double spacing(int axis) const { return spacing_[axis]; }
  double origin(int axis) const { return origin_[axis]; }
  /// True when every horizontal lattice step lands exactly on a node.
  bool exact_moves() const { return exact_moves_; }

  CellLabel label(std::int64_t i) const {
    return labels_[static_cast<std::size_t>(i)];
  }
  double measure(std::int64_t i) const {
    return measure_[static_cast<std::size_t>(i)];
  }
  /// Normalized Haar volume of one cell, without the weight g.
  double cell_volume() const { return cell_volume_; }
  std::int64_t count(CellLabel l) const {
    return counts_[static_cast<std::size_t>(l)];
  }
  /// Sum of cell measures over D.
  double total_measure() const;

  Point center(std::int64_t i) const;
  void unravel(std::int64_t i, std::span<int> multi) const;
  std::int64_t ravel(std::span<const int> multi) const;
  FlatVector lattice_coords(const Point& x) const;
  FlatVector lattice_coords(std::int64_t i) const;
  /// Nearest node to continuous lattice coordinates, or -1 outside.
  std::int64_t nearest(const FlatVector& s) const;
  /// Fills multilinear weights; false when s is more than half a cell
  /// outside the lattice. Corners with zero weight are omitted.
  bool stencil(const FlatVector& s, Stencil* out) const;

 private:
  friend std::shared_ptr<const Grid> build_grid(const Condenser& c, double h);
  explicit Grid(const Condenser& c) : condenser_(c) {}

  Condenser condenser_;
  double h_ = 0.0;
  int dim_ = 0;
  std::int64_t size_ = 0;
  std::vector<int> shape_;
  std::vector<std::int64_t> strides_;
  FlatVector origin_;
  FlatVector spacing_;
  bool exact_moves_ = false;
  double cell_volume_ = 0.0;
  std::vector<CellLabel> labels_;
  std::vector<double> measure_;
  std::array<std::int64_t, 4> counts_{};
};

/// Classifies every lattice cell by its center. Throws ConfigError when a
/// plate is empty on the grid or the plates share a cell.
std::shared_ptr<const Grid> build_grid(const Condenser& c, double h);

}  // namespace capmod
