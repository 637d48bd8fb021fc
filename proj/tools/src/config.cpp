#include "capmod_cli/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "capmod/error.hpp"
#include "capmod/expression.hpp"

namespace capmod::cli {
namespace {

namespace pt = boost::property_tree;

class RegionParser {
 public:
  RegionParser(std::string_view text, const std::map<std::string, double>& b)
      : text_(text), bindings_(b) {
    for (const auto& [k, v] : b) {
      names_.push_back(k);
      values_.push_back(v);
    }
  }

  Region parse() {
    Region r = parse_union();
    skip();
    if (pos_ != text_.size()) fail("unexpected character");
    return r;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("region '" + std::string(text_) + "': " + what +
                      " at position " + std::to_string(pos_));
  }
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Region parse_union() {
    Region a = parse_difference();
    while (accept('|')) a = Region::unite(a, parse_difference());
    return a;
  }
  Region parse_difference() {
    Region a = parse_intersection();
    while (accept('-')) a = Region::minus(a, parse_intersection());
    return a;
  }
  Region parse_intersection() {
    Region a = parse_unary();
    while (accept('&')) a = Region::intersect(a, parse_unary());
    return a;
  }
  Region parse_unary() {
    if (accept('!')) return Region::complement(parse_unary());
    if (accept('(')) {
      Region r = parse_union();
      expect(')');
      return r;
    }
    return parse_primitive();
  }

  std::string identifier() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    if (start == pos_) fail("expected a region");
    return std::string(text_.substr(start, pos_ - start));
  }

  double number() {
    skip();
    const std::size_t start = pos_;
    int depth = 0;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '(') ++depth;
      if (c == ')' || c == ']' || c == ',' || c == ';') {
        if (depth == 0) break;
        if (c == ')') --depth;
      }
      ++pos_;
    }
    const std::string expr = trim(text_.substr(start, pos_ - start));
    if (expr.empty()) fail("expected a number");
    return Expression::parse(expr, names_).evaluate(values_);
  }

  std::vector<double> vec() {
    expect('[');
    std::vector<double> v{number()};
    while (accept(',')) v.push_back(number());
    expect(']');
    return v;
  }

  std::vector<double> center() {
    std::vector<double> c;
    if (accept(';')) {
      c.push_back(number());
      while (accept(',')) c.push_back(number());
    }
    return c;
  }

  Region parse_primitive() {
    const std::string name = identifier();
    if (name == "all") return Region::everything();
    if (name == "empty") return Region();
    expect('(');
    Region r;
    if (name == "ball") {
      const double rad = number();
      r = Region::ball(rad, center());
    } else if (name == "shell") {
      const double a = number();
      expect(',');
      const double b = number();
      r = Region::shell(a, b, center());
    } else if (name == "box") {
      auto lo = vec();
      expect(',');
      auto hi = vec();
      r = Region::box(std::move(lo), std::move(hi));
    } else if (name == "halfspace") {
      auto a = vec();
      expect(',');
      r = Region::halfspace(std::move(a), number());
    } else if (name == "scale") {
      const double lambda = number();
      expect(',');
      r = parse_union().dilated(lambda);
    } else {
      fail("unknown primitive '" + name + "'");
    }
    expect(')');
    return r;
  }

  std::string_view text_;
  const std::map<std::string, double>& bindings_;
  std::vector<std::string> names_;
  std::vector<double> values_;
  std::size_t pos_ = 0;
};

std::string get(const pt::ptree& t, const std::string& key,
                const std::string& fallback = "") {
  return trim(t.get<std::string>(key, fallback));
}

double get_number(const pt::ptree& t, const std::string& key, double fallback) {
  const auto v = t.get_optional<std::string>(key);
  if (!v || trim(*v).empty()) return fallback;
  return Expression::parse(trim(*v)).evaluate();
}

int get_int(const pt::ptree& t, const std::string& key, int fallback) {
  const double v = get_number(t, key, fallback);
  if (v != std::floor(v)) throw ConfigError(key + " must be an integer");
  return static_cast<int>(v);
}

bool get_bool(const pt::ptree& t, const std::string& key, bool fallback) {
  const std::string v = get(t, key);
  if (v.empty()) return fallback;
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(key + " must be true or false");
}

GroupSpec parse_group(const pt::ptree& t) {
  const double kappa = get_number(t, "group.kappa", 16.0);
  const std::string preset = get(t, "group.preset");
  if (!preset.empty()) return GroupSpec::from_preset(preset, kappa);
  const int n1 = get_int(t, "group.n1", 0);
  const int n2 = get_int(t, "group.n2", 0);
  if (n1 <= 0) throw ConfigError("[group] needs a preset or n1");
  std::vector<double> c;
  const std::string table = get(t, "group.brackets");
  if (!table.empty()) c = parse_number_list(table);
  if (n2 == 0 && c.empty()) return GroupSpec::abelian(n1);
  if (c.size() != static_cast<std::size_t>(n2 * n1 * n1)) {
    throw ConfigError("[group] brackets needs n2*n1*n1 = " +
                      std::to_string(n2 * n1 * n1) + " entries");
  }
  return GroupSpec(n1, n2, std::move(c), kappa);
}

ScalarField point_field(const GroupSpec& g, const std::string& text) {
  const Expression e = Expression::parse(text, point_variables(g));
  if (e.is_constant()) {
    const double v = e.evaluate();
    return [v](const Point&) { return v; };
  }
  return [g, e](const Point& x) { return e.evaluate(point_values(g, x)); };
}

MetricSpec parse_metric(const pt::ptree& t, const GroupSpec& g) {
  const int n1 = g.n1();
  const std::string variant = get(t, "metric.variant", "euclidean");
  if (variant == "euclidean") return MetricSpec::euclidean(n1);
  const auto vars = point_variables(g);
  if (variant == "riemannian") {
    const auto entries = split_top_level(get(t, "metric.a"));
    if (entries.size() != static_cast<std::size_t>(n1 * n1)) {
      throw ConfigError("[metric] a needs n1*n1 = " + std::to_string(n1 * n1) +
                        " row-major entries");
    }
    std::vector<Expression> a;
    bool constant = true;
    for (const auto& s : entries) {
      a.push_back(Expression::parse(trim(s), vars));
      constant = constant && a.back().is_constant();
    }
    if (constant) {
      Eigen::MatrixXd m(n1, n1);
      for (int i = 0; i < n1 * n1; ++i) m(i / n1, i % n1) = a[static_cast<std::size_t>(i)].evaluate();
      return MetricSpec::riemannian(m);
    }
    return MetricSpec::riemannian(
        n1,
        [g, a, n1](const Point& x) {
          const auto v = point_values(g, x);
          Eigen::MatrixXd m(n1, n1);
          for (int i = 0; i < n1 * n1; ++i) m(i / n1, i % n1) = a[static_cast<std::size_t>(i)].evaluate(v);
          return m;
        },
        false);
  }
  if (variant == "lq") {
    const double q = get_number(t, "metric.q", 2.0);
    const std::string scale = get(t, "metric.scale", "1");
    const Expression s = Expression::parse(scale, vars);
    if (s.is_constant() && s.evaluate() == 1.0) return MetricSpec::lq(n1, q);
    return MetricSpec::lq(n1, q, point_field(g, scale), s.is_constant());
  }
  if (variant == "custom") {
    auto names = vars;
    for (int i = 1; i <= n1; ++i) names.push_back("xi" + std::to_string(i));
    const Expression f = Expression::parse(get(t, "metric.f"), names);
    const bool invariant = get_bool(t, "metric.left_invariant", false);
    return MetricSpec::custom(
        n1,
        [g, f, n1](const Point& x, const HorizontalVector& xi) {
          auto v = point_values(g, x);
          for (int i = 0; i < n1; ++i) v.push_back(xi.xi[i]);
          return f.evaluate(v);
        },
        invariant);
  }
  throw ConfigError("unknown metric variant '" + variant + "'");
}

}  // namespace

std::vector<std::string> point_variables(const GroupSpec& g) {
  std::vector<std::string> v;
  for (int i = 1; i <= g.n1(); ++i) v.push_back("x" + std::to_string(i));
  for (int k = 1; k <= g.n2(); ++k) v.push_back("z" + std::to_string(k));
  v.push_back("x");
  v.push_back("y");
  v.push_back("z");
  return v;
}

std::vector<double> point_values(const GroupSpec& g, const Point& p) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(g.dim() + 3));
  for (int i = 0; i < g.n1(); ++i) v.push_back(p.x1[i]);
  for (int k = 0; k < g.n2(); ++k) v.push_back(p.x2[k]);
  v.push_back(g.n1() > 0 ? p.x1[0] : 0.0);
  v.push_back(g.n1() > 1 ? p.x1[1] : 0.0);
  v.push_back(g.n2() > 0 ? p.x2[0] : g.n1() > 2 ? p.x1[2] : 0.0);
  return v;
}

Region parse_region(std::string_view text,
                    const std::map<std::string, double>& bindings) {
  return RegionParser(text, bindings).parse();
}

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& s : split_top_level(text)) {
    const std::string t = trim(s);
    if (t.empty()) throw ConfigError("empty entry in list '" + std::string(text) + "'");
    out.push_back(Expression::parse(t).evaluate());
  }
  return out;
}

Condenser ExperimentConfig::condenser() const {
  ScalarField w;
  if (!weight_text.empty()) {
    const Expression e = Expression::parse(weight_text, point_variables(group));
    if (!(e.is_constant() && e.evaluate() == 1.0)) w = point_field(group, weight_text);
  }
  return Condenser(group, metric, parse_region(domain_text),
                   parse_region(plate0_text), parse_region(plate1_text), w);
}

ExperimentConfig parse_config(std::string_view text, const std::string& origin) {
  pt::ptree t;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, t);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(origin + ": " + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }
  ExperimentConfig c;
  c.path = origin;
  c.group = parse_group(t);
  c.metric = parse_metric(t, c.group);
  c.domain_text = get(t, "condenser.domain");
  c.plate0_text = get(t, "condenser.plate0");
  c.plate1_text = get(t, "condenser.plate1");
  c.weight_text = get(t, "condenser.weight", "1");
  if (c.domain_text.empty() || c.plate0_text.empty() || c.plate1_text.empty()) {
    throw ConfigError(origin + ": [condenser] needs domain, plate0 and plate1");
  }

  SolverSettings& s = c.solver;
  s.p = get_number(t, "solver.p", 2.0);
  const std::string hl = get(t, "solver.h_list");
  if (!hl.empty()) {
    s.h_list = parse_number_list(hl);
  } else {
    s.h_list = {get_number(t, "solver.h", 1.0 / 32.0)};
  }
  s.graph_radius = get_int(t, "solver.graph_radius", 1);
  s.modulus.tol = get_number(t, "solver.tol", s.modulus.tol);
  s.modulus.max_iter = get_int(t, "solver.max_iter", s.modulus.max_iter);
  s.modulus.max_new_constraints =
      get_int(t, "solver.max_new_constraints", s.modulus.max_new_constraints);
  s.modulus.max_sweeps = get_int(t, "solver.max_sweeps", s.modulus.max_sweeps);
  s.capacity.tol = get_number(t, "solver.capacity_tol", s.capacity.tol);
  s.capacity.max_iter = get_int(t, "solver.capacity_max_iter", s.capacity.max_iter);
  s.capacity.memory = get_int(t, "solver.capacity_memory", s.capacity.memory);

  c.gap_tol = get_number(t, "compare.gap_tol", c.gap_tol);

  c.continuity.levels = get_int(t, "continuity.levels", c.continuity.levels);
  c.continuity.plate0 = get(t, "continuity.plate0");
  c.continuity.plate1 = get(t, "continuity.plate1");
  c.continuity.tol = get_number(t, "continuity.tol", c.continuity.tol);

  const std::string tl = get(t, "mollify.t_list");
  if (!tl.empty()) c.mollify.t_list = parse_number_list(tl);
  c.mollify.epsilon = get_number(t, "mollify.epsilon", c.mollify.epsilon);
  c.mollify.samples = get_int(t, "mollify.samples", c.mollify.samples);
  c.mollify.density = get(t, "mollify.density");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace capmod::cli
