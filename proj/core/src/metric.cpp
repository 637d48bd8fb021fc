#include "capmod/metric.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "capmod/error.hpp"

namespace capmod {
namespace {

double lq_norm(const LayerVector& v, double q) {
  const double m = v.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) s += std::pow(std::abs(v[i]) / m, q);
  return m * std::pow(s, 1.0 / q);
}

LayerVector normalized(const LayerVector& v) { return v / v.norm(); }

SphereMaximum golden_refine(const std::function<double(const LayerVector&)>& f,
                            double lo, double hi) {
  auto at = [](double t) {
    LayerVector v(2);
    v << std::cos(t), std::sin(t);
    return v;
  };
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(at(c)), fd = f(at(d));
  for (int it = 0; it < 200 && (b - a) > 1e-14; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(at(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(at(d));
    }
  }
  const double t = 0.5 * (a + b);
  return SphereMaximum{f(at(t)), at(t)};
}

SphereMaximum ascend(const std::function<double(const LayerVector&)>& f,
                     LayerVector x) {
  const int n = static_cast<int>(x.size());
  x = normalized(x);
  double fx = f(x);
  double step = 0.5;
  const double eps = 1e-7;
  for (int it = 0; it < 5000 && step > 1e-13; ++it) {
    LayerVector g(n);
    for (int i = 0; i < n; ++i) {
      LayerVector p = x, m = x;
      p[i] += eps;
      m[i] -= eps;
      g[i] = (f(normalized(p)) - f(normalized(m))) / (2.0 * eps);
    }
    g -= g.dot(x) * x;
    const double gn = g.norm();
    if (!(gn > 1e-15)) break;
    const LayerVector y = normalized(x + step * g / gn);
    const double fy = f(y);
    if (fy > fx) {
      x = y;
      fx = fy;
      step = std::min(1.0, 1.5 * step);
    } else {
      step *= 0.5;
    }
  }
  return SphereMaximum{fx, x};
}

}  // namespace

SphereMaximum maximize_on_sphere(
    int n, const std::function<double(const LayerVector&)>& f) {
  if (n < 1 || n > kMaxLayerDim) throw DimensionError("bad sphere dimension");
  if (n == 1) {
    LayerVector p(1), m(1);
    p << 1.0;
    m << -1.0;
    const double fp = f(p), fm = f(m);
    return fp >= fm ? SphereMaximum{fp, p} : SphereMaximum{fm, m};
  }
  if (n == 2) {
    constexpr int kSweep = 720;
    const double dt = 2.0 * std::numbers::pi / kSweep;
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < kSweep; ++i) {
      LayerVector v(2);
      v << std::cos(i * dt), std::sin(i * dt);
      const double val = f(v);
      if (val > best_val) {
        best_val = val;
        best = i;
      }
    }
    return golden_refine(f, (best - 1) * dt, (best + 1) * dt);
  }
  std::vector<LayerVector> starts;
  for (int i = 0; i < n; ++i) starts.push_back(LayerVector::Unit(n, i));
  starts.push_back(LayerVector::Constant(n, -1.0 / std::sqrt(double(n))));
  // One extra start from a coarse deterministic scan.
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> normal;
  LayerVector scan_best = starts.front();
  double scan_val = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < 256; ++s) {
    LayerVector v(n);
    for (int i = 0; i < n; ++i) v[i] = normal(rng);
    v = normalized(v);
    const double val = f(v);
    if (val > scan_val) {
      scan_val = val;
      scan_best = v;
    }
  }
  starts.push_back(scan_best);
  SphereMaximum best{-std::numeric_limits<double>::infinity(), starts.front()};
  for (const auto& s : starts) {
    SphereMaximum r = ascend(f, s);
    if (r.value > best.value) best = r;
  }
  return best;
}

double LocalNorm::f(const LayerVector& xi) const {
  switch (kind_) {
    case MetricVariant::kEuclidean:
      return xi.norm();
    case MetricVariant::kRiemannian:
      return std::sqrt(std::max(0.0, xi.dot(a_ * xi)));
    case MetricVariant::kLq:
      return scale_ * lq_norm(xi, q_);
    case MetricVariant::kCustom:
      return (*custom_)(at_, HorizontalVector{xi});
  }
  return 0.0;
}

double LocalNorm::h(const LayerVector& omega) const {
  switch (kind_) {
    case MetricVariant::kEuclidean:
      return omega.norm();
    case MetricVariant::kRiemannian:
      return std::sqrt(std::max(0.0, omega.dot(a_inv_ * omega)));
    case MetricVariant::kLq:
      return lq_norm(omega, q_dual_) / scale_;
    case MetricVariant::kCustom:
      return h_with_gradient(omega, nullptr);
  }
  return 0.0;
}

double LocalNorm::h_with_gradient(const LayerVector& omega,
                                  LayerVector* grad) const {
  const bool zero = omega.cwiseAbs().maxCoeff() == 0.0;
  if (zero) {
    if (grad) *grad = LayerVector::Zero(n_);
    return 0.0;
  }
  switch (kind_) {
    case MetricVariant::kEuclidean: {
      const double n = omega.norm();
      if (grad) *grad = omega / n;
      return n;
    }
    case MetricVariant::kRiemannian: {
      const LayerVector y = a_inv_ * omega;
      const double n = std::sqrt(std::max(0.0, omega.dot(y)));
      if (grad) *grad = y / n;
      return n;
    }
    case MetricVariant::kLq: {
      const double n = lq_norm(omega, q_dual_);
      if (grad) {
        grad->resize(n_);
        for (int i = 0; i < n_; ++i) {
          const double t = std::abs(omega[i]) / n;
          (*grad)[i] = std::copysign(std::pow(t, q_dual_ - 1.0), omega[i]) /
                       scale_;
        }
      }
      return n / scale_;
    }
    case MetricVariant::kCustom: {
      // H(omega) = sup omega.xi / F(xi); by Danskin the gradient is the
      // maximizer rescaled onto the F-unit sphere.
      const auto best = maximize_on_sphere(n_, [&](const LayerVector& xi) {
        return omega.dot(xi) / (*custom_)(at_, HorizontalVector{xi});
      });
      if (grad) {
        *grad = best.argmax / (*custom_)(at_, HorizontalVector{best.argmax});
      }
      return best.value;
    }
  }
  return 0.0;
}

MetricSpec MetricSpec::euclidean(int n1) {
  MetricSpec m;
  m.variant_ = MetricVariant::kEuclidean;
  m.n1_ = n1;
  return m;
}

MetricSpec MetricSpec::riemannian(int n1, MatrixField a, bool left_invariant) {
  if (!a) throw ConfigError("riemannian metric needs a matrix field");
  MetricSpec m;
  m.variant_ = MetricVariant::kRiemannian;
  m.n1_ = n1;
  m.a_ = std::move(a);
  m.left_invariant_ = left_invariant;
  return m;
}

MetricSpec MetricSpec::riemannian(const Eigen::MatrixXd& constant_a) {
  if (constant_a.rows() != constant_a.cols()) {
    throw ConfigError("riemannian matrix must be square");
  }
  return riemannian(
      static_cast<int>(constant_a.rows()),
      [constant_a](const Point&) { return constant_a; }, true);
}

MetricSpec MetricSpec::lq(int n1, double q, ScalarField scale,
                          bool left_invariant) {
  if (!(q > 1.0) || !std::isfinite(q)) {
    throw ConfigError("l^q metric needs 1 < q < infinity");
  }
  MetricSpec m;
  m.variant_ = MetricVariant::kLq;
  m.n1_ = n1;
  m.q_ = q;
  m.scale_ = std::move(scale);
  m.left_invariant_ = left_invariant || !m.scale_;
  return m;
}

MetricSpec MetricSpec::custom(int n1, NormFunction f, bool left_invariant) {
  if (!f) throw ConfigError("custom metric needs a norm function");
  MetricSpec m;
  m.variant_ = MetricVariant::kCustom;
  m.n1_ = n1;
  m.custom_ = std::make_shared<const NormFunction>(std::move(f));
  m.left_invariant_ = left_invariant;
  return m;
}

std::string MetricSpec::describe() const {
  std::ostringstream os;
  switch (variant_) {
    case MetricVariant::kEuclidean: os << "euclidean"; break;
    case MetricVariant::kRiemannian: os << "riemannian"; break;
    case MetricVariant::kLq: os << "l^" << q_; break;
    case MetricVariant::kCustom: os << "custom"; break;
  }
  os << (left_invariant_ ? " (left-invariant)" : " (variable)");
  return os.str();
}

LocalNorm MetricSpec::at(const Point& x) const {
  if (x.x1.size() != n1_) {
    throw DimensionError("metric evaluated at a point of the wrong group");
  }
  LocalNorm l;
  l.kind_ = variant_;
  l.n_ = n1_;
  switch (variant_) {
    case MetricVariant::kEuclidean:
      break;
    case MetricVariant::kRiemannian: {
      l.a_ = a_(x);
      if (l.a_.rows() != n1_ || l.a_.cols() != n1_) {
        throw DimensionError("riemannian matrix has wrong size");
      }
      Eigen::LLT<Eigen::MatrixXd> llt(l.a_);
      if (llt.info() != Eigen::Success || !l.a_.allFinite()) {
        throw ConfigError("riemannian matrix is not positive definite");
      }
      l.a_inv_ = llt.solve(Eigen::MatrixXd::Identity(n1_, n1_));
      break;
    }
    case MetricVariant::kLq:
      l.q_ = q_;
      l.q_dual_ = q_ / (q_ - 1.0);
      l.scale_ = scale_ ? scale_(x) : 1.0;
      if (!(l.scale_ > 0.0)) throw ConfigError("l^q scale must be positive");
      break;
    case MetricVariant::kCustom:
      l.custom_ = custom_;
      l.at_ = x;
      break;
  }
  return l;
}

double f_eval(const MetricSpec& m, const Point& x, const HorizontalVector& xi) {
  if (xi.xi.size() != m.n1()) throw DimensionError("vector does not match n1");
  return m.at(x).f(xi.xi);
}

double h_eval(const MetricSpec& m, const Point& x, const Covector& omega) {
  if (omega.omega.size() != m.n1()) {
    throw DimensionError("covector does not match n1");
  }
  return m.at(x).h(omega.omega);
}

bool fenchel_check(const MetricSpec& m, const Point& x, const Covector& omega,
                   const HorizontalVector& xi, double tol) {
  const LocalNorm l = m.at(x);
  return omega.omega.dot(xi.xi) <= l.h(omega.omega) * l.f(xi.xi) + tol;
}

double bidual_norm(const MetricSpec& m, const Point& x,
                   const HorizontalVector& xi) {
  const LocalNorm l = m.at(x);
  if (xi.xi.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  return maximize_on_sphere(m.n1(), [&](const LayerVector& w) {
           return w.dot(xi.xi) / l.h(w);
         }).value;
}

AxiomReport check_axioms(const GroupSpec& spec, const MetricSpec& m,
                         int samples, std::uint64_t seed, double range,
                         double axis_margin) {
  AxiomReport rep;
  rep.min_hessian_eigenvalue = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-range, range);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  std::normal_distribution<double> normal;
  const int n1 = m.n1();
  const double delta = 1e-4;
  for (int s = 0; s < samples; ++s) {
    FlatVector f(spec.dim());
    for (int i = 0; i < spec.dim(); ++i) f[i] = coord(rng);
    const Point x = spec.from_flat(f);
    LayerVector xi(n1);
    for (int i = 0; i < n1; ++i) xi[i] = normal(rng);
    xi.normalize();
    if (axis_margin > 0.0 && xi.cwiseAbs().minCoeff() < axis_margin) {
      continue;
    }
    ++rep.samples;
    const LocalNorm l = m.at(x);
    const double a = scale(rng);
    const double fx = l.f(xi);
    if (std::abs(l.f(a * xi) - a * fx) > 1e-10 * (1.0 + a * fx)) {
      ++rep.homogeneity_failures;
    }
    if (!(fx > 0.0)) ++rep.positivity_failures;

    auto f2 = [&](const LayerVector& v) {
      const double t = l.f(v);
      return t * t;
    };
    Eigen::MatrixXd hess(n1, n1);
    for (int i = 0; i < n1; ++i) {
      for (int j = i; j < n1; ++j) {
        LayerVector pp = xi, pm = xi, mp = xi, mm = xi;
        pp[i] += delta; pp[j] += delta;
        pm[i] += delta; pm[j] -= delta;
        mp[i] -= delta; mp[j] += delta;
        mm[i] -= delta; mm[j] -= delta;
        const double v = (f2(pp) - f2(pm) - f2(mp) + f2(mm)) / (4 * delta * delta);
        hess(i, j) = v;
        hess(j, i) = v;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
    const double lo = eig.eigenvalues().minCoeff();
    rep.min_hessian_eigenvalue = std::min(rep.min_hessian_eigenvalue, lo);
    if (!(lo > 1e-6)) ++rep.convexity_failures;
  }
  return rep;
}

}  // namespace capmod
