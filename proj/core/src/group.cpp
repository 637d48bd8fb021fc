#include "capmod/group.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "capmod/error.hpp"

namespace capmod {
namespace {

double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

// Integrating the second-layer ball over the first-layer radius reduces the
// gauge-ball volume to a Beta integral:
//   V_{n2} kappa^{-n2/2} n1 V_{n1} int_0^1 r^{n1-1} (1-r^4)^{n2/2} dr.
double gauge_ball_volume(int n1, int n2, double kappa) {
  const double radial =
      0.25 * std::beta(0.25 * n1, 0.5 * n2 + 1.0);  // the r-integral
  return unit_ball_volume(n2) * std::pow(kappa, -0.5 * n2) * n1 *
         unit_ball_volume(n1) * radial;
}

bool all_finite(const LayerVector& v) { return v.allFinite(); }

}  // namespace

FlatVector Point::flat() const {
  FlatVector out(x1.size() + x2.size());
  out.head(x1.size()) = x1;
  out.tail(x2.size()) = x2;
  return out;
}

bool Point::is_finite() const { return all_finite(x1) && all_finite(x2); }

bool CoordinateBox::is_bounded() const {
  return lo.size() == hi.size() && lo.allFinite() && hi.allFinite() &&
         (hi.array() >= lo.array()).all();
}

bool CoordinateBox::contains(const FlatVector& x) const {
  return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

GroupSpec::GroupSpec(int n1, int n2, std::vector<double> bracket,
                     double gauge_kappa)
    : n1_(n1), n2_(n2), bracket_(std::move(bracket)), kappa_(gauge_kappa) {
  if (n1 < 1 || n1 > kMaxLayerDim || n2 < 0 || n2 > kMaxLayerDim) {
    throw ConfigError("layer dimensions out of range: n1=" +
                      std::to_string(n1) + " n2=" + std::to_string(n2));
  }
  if (bracket_.size() != static_cast<std::size_t>(n2 * n1 * n1)) {
    throw ConfigError("bracket table must hold n2*n1*n1 coefficients");
  }
  if (!(kappa_ > 0.0) || !std::isfinite(kappa_)) {
    throw ConfigError("gauge constant must be positive");
  }
  for (int k = 0; k < n2_; ++k) {
    for (int i = 0; i < n1_; ++i) {
      for (int j = 0; j < n1_; ++j) {
        const double cij = this->bracket(k, i, j);
        const double cji = this->bracket(k, j, i);
        if (!std::isfinite(cij)) throw ConfigError("non-finite bracket entry");
        if (std::abs(cij + cji) > 1e-12) {
          std::ostringstream os;
          os << "bracket table is not skew-symmetric at c^" << k + 1 << "_{"
             << i + 1 << j + 1 << "}=" << cij << " vs c^" << k + 1 << "_{"
             << j + 1 << i + 1 << "}=" << cji;
          throw ConfigError(os.str());
        }
      }
    }
  }
  // Stratification: [V1, V1] must be all of V2.
  if (n2_ > 0) {
    const int pairs = n1_ * (n1_ - 1) / 2;
    Eigen::MatrixXd span(n2_, std::max(pairs, 1));
    span.setZero();
    int col = 0;
    for (int i = 0; i < n1_; ++i) {
      for (int j = i + 1; j < n1_; ++j, ++col) {
        for (int k = 0; k < n2_; ++k) span(k, col) = this->bracket(k, i, j);
      }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(span);
    if (pairs == 0 || lu.rank() < n2_) {
      throw ConfigError(
          "brackets of the first layer do not span the second layer");
    }
  }
  ball_volume_ = gauge_ball_volume(n1_, n2_, kappa_);
}

GroupSpec GroupSpec::abelian(int n) { return GroupSpec(n, 0, {}, 16.0); }

GroupSpec GroupSpec::heisenberg(int n, double gauge_kappa) {
  const int n1 = 2 * n;
  std::vector<double> c(static_cast<std::size_t>(n1 * n1), 0.0);
  for (int i = 0; i < n; ++i) {
    c[static_cast<std::size_t>(i * n1 + i + n)] = 1.0;
    c[static_cast<std::size_t>((i + n) * n1 + i)] = -1.0;
  }
  return GroupSpec(n1, 1, std::move(c), gauge_kappa);
}

GroupSpec GroupSpec::from_preset(std::string_view preset, double gauge_kappa) {
  const auto colon = preset.find(':');
  if (colon == std::string_view::npos) {
    throw ConfigError("group preset must look like name:n, got '" +
                      std::string(preset) + "'");
  }
  const std::string name(preset.substr(0, colon));
  const std::string arg(preset.substr(colon + 1));
  int n = 0;
  try {
    std::size_t used = 0;
    n = std::stoi(arg, &used);
    if (used != arg.size()) throw std::invalid_argument(arg);
  } catch (const std::exception&) {
    throw ConfigError("bad preset dimension '" + arg + "'");
  }
  if (name == "abelian") {
    GroupSpec g(n, 0, {}, gauge_kappa);
    return g;
  }
  if (name == "heisenberg") return heisenberg(n, gauge_kappa);
  throw ConfigError("unknown group preset '" + name + "'");
}

bool GroupSpec::has_integer_brackets() const {
  for (double c : bracket_) {
    if (c != std::round(c)) return false;
  }
  return true;
}

std::string GroupSpec::describe() const {
  std::ostringstream os;
  os << "step-" << (n2_ > 0 ? 2 : 1) << " group, n1=" << n1_ << ", n2=" << n2_
     << ", N=" << dim() << ", Q=" << homogeneous_dim();
  return os.str();
}

Point GroupSpec::identity() const {
  return Point{LayerVector::Zero(n1_), LayerVector::Zero(n2_)};
}

Point GroupSpec::make_point(std::initializer_list<double> x1,
                            std::initializer_list<double> x2) const {
  if (static_cast<int>(x1.size()) != n1_ ||
      static_cast<int>(x2.size()) != n2_) {
    throw DimensionError("point does not match group dimensions");
  }
  Point p = identity();
  int i = 0;
  for (double v : x1) p.x1[i++] = v;
  i = 0;
  for (double v : x2) p.x2[i++] = v;
  return p;
}

Point GroupSpec::from_flat(const FlatVector& flat) const {
  if (flat.size() != dim()) {
    throw DimensionError("flat coordinate vector has wrong length");
  }
  return Point{flat.head(n1_), flat.tail(n2_)};
}

Point GroupSpec::from_flat(std::span<const double> flat) const {
  if (static_cast<int>(flat.size()) != dim()) {
    throw DimensionError("flat coordinate vector has wrong length");
  }
  Point p = identity();
  for (int i = 0; i < n1_; ++i) p.x1[i] = flat[static_cast<std::size_t>(i)];
  for (int k = 0; k < n2_; ++k) {
    p.x2[k] = flat[static_cast<std::size_t>(n1_ + k)];
  }
  return p;
}

HorizontalVector GroupSpec::make_horizontal(
    std::initializer_list<double> xi) const {
  if (static_cast<int>(xi.size()) != n1_) {
    throw DimensionError("horizontal vector does not match n1");
  }
  HorizontalVector v{LayerVector(n1_)};
  int i = 0;
  for (double c : xi) v.xi[i++] = c;
  return v;
}

Covector GroupSpec::make_covector(std::initializer_list<double> omega) const {
  if (static_cast<int>(omega.size()) != n1_) {
    throw DimensionError("covector does not match n1");
  }
  Covector w{LayerVector(n1_)};
  int i = 0;
  for (double c : omega) w.omega[i++] = c;
  return w;
}

void GroupSpec::check_point(const Point& x) const {
  if (x.x1.size() != n1_ || x.x2.size() != n2_) {
    throw DimensionError("point has " + std::to_string(x.x1.size()) + "+" +
                         std::to_string(x.x2.size()) +
                         " coordinates, group expects " + std::to_string(n1_) +
                         "+" + std::to_string(n2_));
  }
}

LayerVector bracket_form(const GroupSpec& spec, const LayerVector& a,
                         const LayerVector& b) {
  LayerVector out = LayerVector::Zero(spec.n2());
  const int n1 = spec.n1();
  for (int k = 0; k < spec.n2(); ++k) {
    double s = 0.0;
    for (int i = 0; i < n1; ++i) {
      for (int j = i + 1; j < n1; ++j) {
        const double c = spec.bracket(k, i, j);
        if (c != 0.0) s += c * (a[i] * b[j] - a[j] * b[i]);
      }
    }
    out[k] = s;
  }
  return out;
}

Point multiply(const GroupSpec& spec, const Point& x, const Point& y) {
  spec.check_point(x);
  spec.check_point(y);
  Point z{x.x1 + y.x1, x.x2 + y.x2};
  if (spec.n2() > 0) z.x2 += 0.5 * bracket_form(spec, x.x1, y.x1);
  return z;
}

Point inverse(const GroupSpec& spec, const Point& x) {
  spec.check_point(x);
  return Point{-x.x1, -x.x2};
}

Point dilate(const GroupSpec& spec, double lambda, const Point& x) {
  spec.check_point(x);
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::domain_error("dilation factor must be positive");
  }
  return Point{lambda * x.x1, (lambda * lambda) * x.x2};
}

double homogeneous_norm(const GroupSpec& spec, const Point& x) {
  spec.check_point(x);
  const double r2 = x.x1.squaredNorm();
  if (spec.n2() == 0) return std::sqrt(r2);
  return std::pow(r2 * r2 + spec.gauge_kappa() * x.x2.squaredNorm(), 0.25);
}

double gauge_distance(const GroupSpec& spec, const Point& x, const Point& y) {
  return homogeneous_norm(spec, multiply(spec, inverse(spec, x), y));
}

Point exp_horizontal(const GroupSpec& spec, const HorizontalVector& v) {
  if (v.xi.size() != spec.n1()) {
    throw DimensionError("horizontal vector does not match n1");
  }
  return Point{v.xi, LayerVector::Zero(spec.n2())};
}

double estimate_ner_constant(const GroupSpec& spec, int samples,
                             std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  const int n = spec.dim();
  auto random_point = [&]() {
    FlatVector f(n);
    for (int i = 0; i < n; ++i) f[i] = coord(rng);
    return spec.from_flat(f);
  };
  double sup = 0.0;
  for (int s = 0; s < samples; ++s) {
    Point x = random_point();
    const double nx = homogeneous_norm(spec, x);
    if (nx == 0.0) continue;
    x = dilate(spec, 1.0 / nx, x);
    Point y = random_point();
    const double ny = homogeneous_norm(spec, y);
    if (ny == 0.0) continue;
    const double target = 0.5 * frac(rng);
    if (target == 0.0) continue;
    y = dilate(spec, target / ny, y);
    const double ratio =
        std::abs(homogeneous_norm(spec, multiply(spec, x, y)) - 1.0) / target;
    if (std::isfinite(ratio)) sup = std::max(sup, ratio);
  }
  return sup;
}

double haar_volume(const GroupSpec& spec,
                   const std::function<bool(const Point&)>& region,
                   const CoordinateBox& bounds, int resolution) {
  const int n = spec.dim();
  if (bounds.lo.size() != n || bounds.hi.size() != n) {
    throw DimensionError("bounding box does not match group dimension");
  }
  if (!bounds.is_bounded()) {
    throw std::domain_error("haar_volume needs a bounded region");
  }
  if (resolution < 1) throw std::invalid_argument("resolution must be >= 1");
  const FlatVector step = (bounds.hi - bounds.lo) / resolution;
  double cell = 1.0;
  for (int i = 0; i < n; ++i) cell *= step[i];
  if (cell == 0.0) return 0.0;

  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  std::size_t hits = 0;
  FlatVector f(n);
  while (true) {
    for (int i = 0; i < n; ++i) {
      f[i] = bounds.lo[i] + (idx[static_cast<std::size_t>(i)] + 0.5) * step[i];
    }
    if (region(spec.from_flat(f))) ++hits;
    int axis = 0;
    while (axis < n && ++idx[static_cast<std::size_t>(axis)] == resolution) {
      idx[static_cast<std::size_t>(axis)] = 0;
      ++axis;
    }
    if (axis == n) break;
  }
  return static_cast<double>(hits) * cell / spec.ball_volume();
}

FrameMatrix horizontal_frame(const GroupSpec& spec, const Point& x) {
  spec.check_point(x);
  const int n1 = spec.n1();
  FrameMatrix frame = FrameMatrix::Zero(spec.dim(), n1);
  for (int j = 0; j < n1; ++j) {
    frame(j, j) = 1.0;
    for (int k = 0; k < spec.n2(); ++k) {
      double s = 0.0;
      for (int i = 0; i < n1; ++i) s += spec.bracket(k, i, j) * x.x1[i];
      frame(n1 + k, j) = 0.5 * s;
    }
  }
  return frame;
}

namespace {

template <typename Map>
CoordinateBox affine_box_image(const GroupSpec& spec, const CoordinateBox& box,
                               Map&& map) {
  const int n = spec.dim();
  if (!box.is_bounded()) {
    FlatVector inf = FlatVector::Constant(n, std::numeric_limits<double>::infinity());
    return CoordinateBox{-inf, inf};
  }
  CoordinateBox out{
      FlatVector::Constant(n, std::numeric_limits<double>::infinity()),
      FlatVector::Constant(n, -std::numeric_limits<double>::infinity())};
  // Translations are affine in step-2 coordinates, so the corners suffice.
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    FlatVector c(n);
    for (int i = 0; i < n; ++i) c[i] = (mask >> i) & 1u ? box.hi[i] : box.lo[i];
    const FlatVector img = map(spec.from_flat(c)).flat();
    out.lo = out.lo.cwiseMin(img);
    out.hi = out.hi.cwiseMax(img);
  }
  return out;
}

}  // namespace

CoordinateBox left_translate_box(const GroupSpec& spec, const Point& a,
                                 const CoordinateBox& box) {
  return affine_box_image(spec, box,
                          [&](const Point& y) { return multiply(spec, a, y); });
}

CoordinateBox right_translate_box(const GroupSpec& spec, const Point& a,
                                  const CoordinateBox& box) {
  return affine_box_image(spec, box,
                          [&](const Point& y) { return multiply(spec, y, a); });
}

CoordinateBox gauge_ball_box(const GroupSpec& spec, double r) {
  const int n = spec.dim();
  CoordinateBox box{FlatVector(n), FlatVector(n)};
  for (int i = 0; i < spec.n1(); ++i) {
    box.lo[i] = -r;
    box.hi[i] = r;
  }
  const double z = r * r / std::sqrt(spec.gauge_kappa());
  for (int k = 0; k < spec.n2(); ++k) {
    box.lo[spec.n1() + k] = -z;
    box.hi[spec.n1() + k] = z;
  }
  return box;
}

}  // namespace capmod
