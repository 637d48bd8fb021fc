#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include <Eigen/Core>

#include "capmod/group.hpp"

namespace capmod {

enum class MetricVariant { kEuclidean, kRiemannian, kLq, kCustom };

using ScalarField = std::function<double(const Point&)>;
/// Symmetric positive-definite n1 x n1 matrix A(x).
using MatrixField = std::function<Eigen::MatrixXd(const Point&)>;
/// User-supplied fiber norm F(x, xi).
using NormFunction =
    std::function<double(const Point&, const HorizontalVector&)>;

struct SphereMaximum {
  double value = 0.0;
  LayerVector argmax;  // unit Euclidean vector
};

/// Maximizes a degree-0 homogeneous function over the Euclidean unit sphere
/// of R^n. n = 2 uses an angular sweep with golden-section refinement; larger
/// n runs projected gradient ascent from n+1 simplex directions.
SphereMaximum maximize_on_sphere(
    int n, const std::function<double(const LayerVector&)>& f);

/// The norm F(x, .) and its dual H(x, .) frozen at one point.
class LocalNorm {
 public:
  double f(const LayerVector& xi) const;
  double h(const LayerVector& omega) const;
  /// H(x, omega) together with its gradient in omega. The gradient at
  /// omega = 0 is reported as 0.
  double h_with_gradient(const LayerVector& omega, LayerVector* grad) const;

 private:
  friend class MetricSpec;
  MetricVariant kind_ = MetricVariant::kEuclidean;
  int n_ = 0;
  Eigen::MatrixXd a_;
  Eigen::MatrixXd a_inv_;
  double q_ = 2.0;
  double q_dual_ = 2.0;
  double scale_ = 1.0;
  std::shared_ptr<const NormFunction> custom_;
  Point at_;
};

/// Sub-Finsler norm on the horizontal bundle. Immutable, cheap to copy.
class MetricSpec {
 public:
  static MetricSpec euclidean(int n1);
  static MetricSpec riemannian(int n1, MatrixField a, bool left_invariant);
  static MetricSpec riemannian(const Eigen::MatrixXd& constant_a);
  /// F(x, xi) = s(x) * ||xi||_q. A null scale means s = 1.
  static MetricSpec lq(int n1, double q, ScalarField scale = nullptr,
                       bool left_invariant = true);
  static MetricSpec custom(int n1, NormFunction f, bool left_invariant);

  MetricVariant variant() const { return variant_; }
  int n1() const { return n1_; }
  /// True when F does not depend on the base point.
  bool is_left_invariant() const { return left_invariant_; }
  /// F(x, -xi) = F(x, xi) for every variant except possibly custom.
  bool is_reversible() const { return variant_ != MetricVariant::kCustom; }
  double q() const { return q_; }
  std::string describe() const;

  LocalNorm at(const Point& x) const;

 private:
  MetricVariant variant_ = MetricVariant::kEuclidean;
  int n1_ = 0;
  bool left_invariant_ = true;
  double q_ = 2.0;
  MatrixField a_;
  ScalarField scale_;
  std::shared_ptr<const NormFunction> custom_;
};

double f_eval(const MetricSpec& m, const Point& x, const HorizontalVector& xi);
double h_eval(const MetricSpec& m, const Point& x, const Covector& omega);
/// omega(xi) <= H(x, omega) F(x, xi) + tol.
bool fenchel_check(const MetricSpec& m, const Point& x, const Covector& omega,
                   const HorizontalVector& xi, double tol = 1e-9);
/// sup { omega(xi) : H(x, omega) <= 1 }, computed numerically.
double bidual_norm(const MetricSpec& m, const Point& x,
                   const HorizontalVector& xi);

struct AxiomReport {
  int samples = 0;
  int homogeneity_failures = 0;
  int positivity_failures = 0;
  int convexity_failures = 0;
  double min_hessian_eigenvalue = 0.0;
  bool ok() const {
    return homogeneity_failures == 0 && positivity_failures == 0 &&
           convexity_failures == 0;
  }
};

/// Samples base points in [-range, range]^N and directions on the sphere and
/// checks homogeneity, positivity, and positive definiteness of the
/// finite-difference Hessian of F^2 in xi. Directions within `axis_margin`
/// of a coordinate axis are skipped (the l^q variant is not smooth there).
AxiomReport check_axioms(const GroupSpec& spec, const MetricSpec& m,
                         int samples, std::uint64_t seed, double range = 1.0,
                         double axis_margin = 0.0);

}  // namespace capmod
