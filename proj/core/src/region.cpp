#include "capmod/region.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "capmod/error.hpp"

namespace capmod {

struct Region::Node {
  enum class Kind {
    kEmpty,
    kAll,
    kBall,
    kShell,
    kBox,
    kHalfspace,
    kUnion,
    kIntersect,
    kComplement,
    kDilate
  };
  Kind kind = Kind::kEmpty;
  double r_in = 0.0;
  double r_out = 0.0;
  double lambda = 1.0;
  double b = 0.0;
  std::vector<double> a;  // center, box lo, or half-space normal
  std::vector<double> hi;
  std::shared_ptr<const Node> left;
  std::shared_ptr<const Node> right;
};

namespace {

using Node = Region::Node;
using Kind = Node::Kind;

Point center_of(const GroupSpec& spec, const Node& n) {
  if (n.a.empty()) return spec.identity();
  return spec.from_flat(std::span<const double>(n.a));
}

bool eval(const Node& n, const GroupSpec& spec, const Point& x) {
  switch (n.kind) {
    case Kind::kEmpty:
      return false;
    case Kind::kAll:
      return true;
    case Kind::kBall:
    case Kind::kShell: {
      const Point z = n.a.empty()
                          ? x
                          : multiply(spec, inverse(spec, center_of(spec, n)), x);
      const double r = homogeneous_norm(spec, z);
      return r <= n.r_out && (n.kind == Kind::kBall || r >= n.r_in);
    }
    case Kind::kBox: {
      const FlatVector f = x.flat();
      for (int i = 0; i < f.size(); ++i) {
        if (f[i] < n.a[static_cast<std::size_t>(i)] ||
            f[i] > n.hi[static_cast<std::size_t>(i)]) {
          return false;
        }
      }
      return true;
    }
    case Kind::kHalfspace: {
      const FlatVector f = x.flat();
      double s = 0.0;
      for (int i = 0; i < f.size(); ++i) s += n.a[static_cast<std::size_t>(i)] * f[i];
      return s <= n.b;
    }
    case Kind::kUnion:
      return eval(*n.left, spec, x) || eval(*n.right, spec, x);
    case Kind::kIntersect:
      return eval(*n.left, spec, x) && eval(*n.right, spec, x);
    case Kind::kComplement:
      return !eval(*n.left, spec, x);
    case Kind::kDilate:
      return eval(*n.left, spec, dilate(spec, 1.0 / n.lambda, x));
  }
  return false;
}

void check(const Node& n, const GroupSpec& spec) {
  const auto dim = static_cast<std::size_t>(spec.dim());
  switch (n.kind) {
    case Kind::kBall:
    case Kind::kShell:
      if (!n.a.empty() && n.a.size() != dim) {
        throw DimensionError("ball center has " + std::to_string(n.a.size()) +
                             " coordinates, group has " + std::to_string(dim));
      }
      break;
    case Kind::kBox:
      if (n.a.size() != dim) {
        throw DimensionError("box has " + std::to_string(n.a.size()) +
                             " axes, group has " + std::to_string(dim));
      }
      break;
    case Kind::kHalfspace:
      if (n.a.size() != dim) {
        throw DimensionError("half-space normal does not match the group");
      }
      break;
    default:
      break;
  }
  if (n.left) check(*n.left, spec);
  if (n.right) check(*n.right, spec);
}

std::optional<CoordinateBox> box_of(const Node& n, const GroupSpec& spec) {
  const int dim = spec.dim();
  switch (n.kind) {
    case Kind::kEmpty: {
      // Degenerate box at the origin keeps hulls well defined.
      return CoordinateBox{FlatVector::Zero(dim), FlatVector::Zero(dim)};
    }
    case Kind::kBall:
    case Kind::kShell: {
      const CoordinateBox b = gauge_ball_box(spec, n.r_out);
      if (n.a.empty()) return b;
      return left_translate_box(spec, center_of(spec, n), b);
    }
    case Kind::kBox: {
      CoordinateBox b{FlatVector(dim), FlatVector(dim)};
      for (int i = 0; i < dim; ++i) {
        b.lo[i] = n.a[static_cast<std::size_t>(i)];
        b.hi[i] = n.hi[static_cast<std::size_t>(i)];
      }
      return b;
    }
    case Kind::kUnion: {
      auto l = box_of(*n.left, spec);
      auto r = box_of(*n.right, spec);
      if (!l || !r) return std::nullopt;
      return CoordinateBox{l->lo.cwiseMin(r->lo), l->hi.cwiseMax(r->hi)};
    }
    case Kind::kIntersect: {
      auto l = box_of(*n.left, spec);
      auto r = box_of(*n.right, spec);
      if (!l) return r;
      if (!r) return l;
      CoordinateBox b{l->lo.cwiseMax(r->lo), l->hi.cwiseMin(r->hi)};
      b.hi = b.hi.cwiseMax(b.lo);
      return b;
    }
    case Kind::kDilate: {
      auto c = box_of(*n.left, spec);
      if (!c) return std::nullopt;
      const Point lo = dilate(spec, n.lambda, spec.from_flat(c->lo));
      const Point hi = dilate(spec, n.lambda, spec.from_flat(c->hi));
      return CoordinateBox{lo.flat(), hi.flat()};
    }
    default:
      return std::nullopt;
  }
}

void print_list(std::ostream& os, const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) os << ", " << v[i];
}

void describe(std::ostream& os, const Node& n) {
  switch (n.kind) {
    case Kind::kEmpty: os << "empty"; return;
    case Kind::kAll: os << "all"; return;
    case Kind::kBall:
      os << "ball(" << n.r_out;
      print_list(os, n.a);
      os << ")";
      return;
    case Kind::kShell:
      os << "shell(" << n.r_in << ", " << n.r_out;
      print_list(os, n.a);
      os << ")";
      return;
    case Kind::kBox:
      os << "box(";
      for (std::size_t i = 0; i < n.a.size(); ++i) {
        os << (i ? ", " : "") << n.a[i] << ", " << n.hi[i];
      }
      os << ")";
      return;
    case Kind::kHalfspace:
      os << "halfspace(";
      for (double c : n.a) os << c << ", ";
      os << n.b << ")";
      return;
    case Kind::kUnion:
    case Kind::kIntersect:
      os << (n.kind == Kind::kUnion ? "union(" : "intersect(");
      describe(os, *n.left);
      os << ", ";
      describe(os, *n.right);
      os << ")";
      return;
    case Kind::kComplement:
      os << "complement(";
      describe(os, *n.left);
      os << ")";
      return;
    case Kind::kDilate:
      os << "dilate(" << n.lambda << ", ";
      describe(os, *n.left);
      os << ")";
      return;
  }
}

}  // namespace

Region::Region() : node_(std::make_shared<Node>()) {}

Region Region::ball(double r, std::vector<double> center) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw ConfigError("ball radius must be finite and nonnegative");
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::kBall;
  n->r_out = r;
  n->a = std::move(center);
  return Region(n);
}

Region Region::shell(double r_in, double r_out, std::vector<double> center) {
  if (!(r_in >= 0.0) || !(r_out >= r_in) || !std::isfinite(r_out)) {
    throw ConfigError("shell needs 0 <= r_in <= r_out < inf");
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::kShell;
  n->r_in = r_in;
  n->r_out = r_out;
  n->a = std::move(center);
  return Region(n);
}

Region Region::box(std::vector<double> lo, std::vector<double> hi) {
  if (lo.size() != hi.size() || lo.empty()) {
    throw ConfigError("box needs matching nonempty lo/hi corners");
  }
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(lo[i] <= hi[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i])) {
      throw ConfigError("box corner lo must not exceed hi");
    }
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::kBox;
  n->a = std::move(lo);
  n->hi = std::move(hi);
  return Region(n);
}

Region Region::halfspace(std::vector<double> a, double b) {
  if (a.empty()) throw ConfigError("half-space needs a normal vector");
  auto n = std::make_shared<Node>();
  n->kind = Kind::kHalfspace;
  n->a = std::move(a);
  n->b = b;
  return Region(n);
}

Region Region::everything() {
  auto n = std::make_shared<Node>();
  n->kind = Kind::kAll;
  return Region(n);
}

Region Region::unite(const Region& a, const Region& b) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::kUnion;
  n->left = a.node_;
  n->right = b.node_;
  return Region(n);
}

Region Region::intersect(const Region& a, const Region& b) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::kIntersect;
  n->left = a.node_;
  n->right = b.node_;
  return Region(n);
}

Region Region::complement(const Region& a) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::kComplement;
  n->left = a.node_;
  return Region(n);
}

Region Region::minus(const Region& a, const Region& b) {
  return intersect(a, complement(b));
}

Region Region::dilated(double lambda) const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("dilation factor must be positive");
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::kDilate;
  n->lambda = lambda;
  n->left = node_;
  return Region(n);
}

bool Region::contains(const GroupSpec& spec, const Point& x) const {
  return eval(*node_, spec, x);
}

void Region::validate(const GroupSpec& spec) const { check(*node_, spec); }

std::optional<CoordinateBox> Region::bounds(const GroupSpec& spec) const {
  validate(spec);
  return box_of(*node_, spec);
}

std::string Region::describe() const {
  std::ostringstream os;
  capmod::describe(os, *node_);
  return os.str();
}

}  // namespace capmod
