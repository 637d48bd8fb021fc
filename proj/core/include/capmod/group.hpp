#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace capmod {

inline constexpr int kMaxLayerDim = 8;
inline constexpr int kMaxDim = 2 * kMaxLayerDim;

/// Coordinates of one stratum. Capacity is fixed so points never allocate.
using LayerVector =
    Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxLayerDim, 1>;
/// All N = n1 + n2 coordinates, first layer first.
using FlatVector =
    Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
/// N x n1 matrix whose column j is the coordinate expression of X_{1j}.
using FrameMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                  Eigen::ColMajor, kMaxDim, kMaxLayerDim>;

/// Group element in exponential coordinates of the first kind.
struct Point {
  LayerVector x1;
  LayerVector x2;

  FlatVector flat() const;
  bool is_finite() const;
};

/// Vector of the horizontal fiber, expressed in the frame X_{11..1n1}.
struct HorizontalVector {
  LayerVector xi;
};

/// Element of the horizontal cotangent fiber in the basis dual to the frame.
struct Covector {
  LayerVector omega;
};

/// Axis-aligned box in flat coordinates.
struct CoordinateBox {
  FlatVector lo;
  FlatVector hi;

  bool is_bounded() const;
  bool contains(const FlatVector& x) const;
};

/// Stratified step-2 Lie algebra data. Immutable after construction.
///
/// The bracket table stores c^k_{ij} with [X_{1i}, X_{1j}] = sum_k c^k_{ij}
/// X_{2k}. The constructor rejects tables that are not skew-symmetric or
/// whose brackets do not span the second layer.
class GroupSpec {
 public:
  /// `bracket` is indexed [k][i][j] (row-major, n2*n1*n1 entries).
  GroupSpec(int n1, int n2, std::vector<double> bracket,
            double gauge_kappa = 16.0);

  static GroupSpec abelian(int n);
  /// H^n: n1 = 2n, n2 = 1, [X_i, X_{i+n}] = X_{21}.
  static GroupSpec heisenberg(int n, double gauge_kappa = 16.0);
  /// Parses "abelian:n" and "heisenberg:n".
  static GroupSpec from_preset(std::string_view preset,
                               double gauge_kappa = 16.0);

  int n1() const { return n1_; }
  int n2() const { return n2_; }
  int dim() const { return n1_ + n2_; }
  int homogeneous_dim() const { return n1_ + 2 * n2_; }
  bool is_abelian() const { return n2_ == 0; }
  double bracket(int k, int i, int j) const {
    return bracket_[static_cast<std::size_t>((k * n1_ + i) * n1_ + j)];
  }
  /// True when every c^k_{ij} is an integer, so right translation by
  /// lattice steps maps the standard lattice onto itself.
  bool has_integer_brackets() const;
  double gauge_kappa() const { return kappa_; }
  /// Lebesgue volume of the unit gauge ball {|x| < 1}.
  double ball_volume() const { return ball_volume_; }
  std::string describe() const;

  Point identity() const;
  Point make_point(std::initializer_list<double> x1,
                   std::initializer_list<double> x2 = {}) const;
  Point from_flat(const FlatVector& flat) const;
  Point from_flat(std::span<const double> flat) const;
  HorizontalVector make_horizontal(std::initializer_list<double> xi) const;
  Covector make_covector(std::initializer_list<double> omega) const;

  void check_point(const Point& x) const;

 private:
  int n1_;
  int n2_;
  std::vector<double> bracket_;
  double kappa_;
  double ball_volume_;
};

/// Bilinear bracket form B(a, b)_k = sum_{i<j} c^k_{ij}(a_i b_j - a_j b_i).
LayerVector bracket_form(const GroupSpec& spec, const LayerVector& a,
                         const LayerVector& b);

/// Group law of a step-2 group: BCH terminates after the first bracket.
Point multiply(const GroupSpec& spec, const Point& x, const Point& y);
Point inverse(const GroupSpec& spec, const Point& x);
Point dilate(const GroupSpec& spec, double lambda, const Point& x);
/// Gauge (|x1|^4 + kappa |x2|^2)^(1/4).
double homogeneous_norm(const GroupSpec& spec, const Point& x);
/// Left-invariant gauge distance |x^{-1} y|.
double gauge_distance(const GroupSpec& spec, const Point& x, const Point& y);
/// exp of a horizontal algebra element, i.e. the point (xi; 0).
Point exp_horizontal(const GroupSpec& spec, const HorizontalVector& v);

/// Empirical sup of ||xy| - |x|| / |y| over random pairs with |y| <= |x|/2.
double estimate_ner_constant(const GroupSpec& spec, int samples,
                             std::uint64_t seed = 1);

/// Haar measure of a bounded region, normalized so that |B(0,1)| = 1.
/// Midpoint rule with `resolution` samples per axis over `bounds`.
double haar_volume(const GroupSpec& spec,
                   const std::function<bool(const Point&)>& region,
                   const CoordinateBox& bounds, int resolution = 64);

/// Coordinate expression of the left-invariant horizontal frame at x.
FrameMatrix horizontal_frame(const GroupSpec& spec, const Point& x);

/// Bounding box of the image of `box` under the affine map y -> a * y.
CoordinateBox left_translate_box(const GroupSpec& spec, const Point& a,
                                 const CoordinateBox& box);
/// Bounding box of the image of `box` under y -> y * a.
CoordinateBox right_translate_box(const GroupSpec& spec, const Point& a,
                                  const CoordinateBox& box);
/// Bounding box of the closed gauge ball B(0, r).
CoordinateBox gauge_ball_box(const GroupSpec& spec, double r);

}  // namespace capmod
