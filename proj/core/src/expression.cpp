#include "capmod/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <variant>

#include "capmod/error.hpp"

namespace capmod {

struct Expression::Node {
  enum class Kind { kNumber, kVariable, kNegate, kBinary, kCall };
  Kind kind = Kind::kNumber;
  double value = 0.0;
  int variable = -1;
  char op = 0;
  std::string function;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

NodePtr number(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::kNumber;
  n->value = v;
  return n;
}

int arity(const std::string& f) {
  if (f == "pow" || f == "min" || f == "max" || f == "atan2") return 2;
  if (f == "sqrt" || f == "exp" || f == "log" || f == "sin" || f == "cos" ||
      f == "tan" || f == "sinh" || f == "cosh" || f == "tanh" || f == "abs") {
    return 1;
  }
  return -1;
}

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& vars)
      : text_(text), vars_(vars) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + std::string(text_) + "': " + what +
                      " at position " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr binary(char op, NodePtr a, NodePtr b) {
    if (a->kind == Node::Kind::kNumber && b->kind == Node::Kind::kNumber) {
      auto tmp = std::make_shared<Node>();
      tmp->kind = Node::Kind::kBinary;
      tmp->op = op;
      tmp->args = {a, b};
      return number(fold(*tmp));
    }
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::kBinary;
    n->op = op;
    n->args = {std::move(a), std::move(b)};
    return n;
  }

  static double fold(const Node& n) {
    const double a = n.args[0]->value;
    const double b = n.args[1]->value;
    switch (n.op) {
      case '+': return a + b;
      case '-': return a - b;
      case '*': return a * b;
      case '/': return a / b;
      default: return std::pow(a, b);
    }
  }

  NodePtr expr() {
    NodePtr lhs = term();
    while (true) {
      if (accept('+')) {
        lhs = binary('+', lhs, term());
      } else if (accept('-')) {
        lhs = binary('-', lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (true) {
      if (accept('*')) {
        lhs = binary('*', lhs, unary());
      } else if (accept('/')) {
        lhs = binary('/', lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) {
      NodePtr inner = unary();
      if (inner->kind == Node::Kind::kNumber) return number(-inner->value);
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::kNegate;
      n->args = {inner};
      return n;
    }
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return binary('^', base, unary());
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (accept('(')) {
      NodePtr inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::string rest(text_.substr(pos_));
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(rest, &used);
      } catch (const std::exception&) {
        fail("malformed number");
      }
      pos_ += used;
      return number(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_')) {
        ++pos_;
      }
      const std::string name(text_.substr(start, pos_ - start));
      if (accept('(')) return call(name);
      for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i] == name) {
          auto n = std::make_shared<Node>();
          n->kind = Node::Kind::kVariable;
          n->variable = static_cast<int>(i);
          return n;
        }
      }
      if (name == "pi") return number(std::numbers::pi);
      if (name == "e") return number(std::numbers::e);
      pos_ = start;
      fail("unknown identifier '" + name + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr call(const std::string& name) {
    const int expected = arity(name);
    if (expected < 0) fail("unknown function '" + name + "'");
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::kCall;
    n->function = name;
    if (!accept(')')) {
      do {
        n->args.push_back(expr());
      } while (accept(','));
      if (!accept(')')) fail("expected ')' after arguments");
    }
    if (static_cast<int>(n->args.size()) != expected) {
      fail("function '" + name + "' takes " + std::to_string(expected) +
           " argument(s)");
    }
    return n;
  }

  std::string_view text_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

double eval(const Node& n, std::span<const double> values) {
  switch (n.kind) {
    case Node::Kind::kNumber:
      return n.value;
    case Node::Kind::kVariable:
      return values[static_cast<std::size_t>(n.variable)];
    case Node::Kind::kNegate:
      return -eval(*n.args[0], values);
    case Node::Kind::kBinary: {
      const double a = eval(*n.args[0], values);
      const double b = eval(*n.args[1], values);
      switch (n.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        default:
          if (b == 2.0) return a * a;
          return std::pow(a, b);
      }
    }
    case Node::Kind::kCall: {
      const double a = eval(*n.args[0], values);
      const std::string& f = n.function;
      if (f == "sqrt") return std::sqrt(a);
      if (f == "exp") return std::exp(a);
      if (f == "log") return std::log(a);
      if (f == "sin") return std::sin(a);
      if (f == "cos") return std::cos(a);
      if (f == "tan") return std::tan(a);
      if (f == "sinh") return std::sinh(a);
      if (f == "cosh") return std::cosh(a);
      if (f == "tanh") return std::tanh(a);
      if (f == "abs") return std::abs(a);
      const double b = eval(*n.args[1], values);
      if (f == "pow") return std::pow(a, b);
      if (f == "min") return std::min(a, b);
      if (f == "max") return std::max(a, b);
      return std::atan2(a, b);
    }
  }
  return 0.0;
}

bool depends_on_variables(const Node& n) {
  if (n.kind == Node::Kind::kVariable) return true;
  for (const auto& a : n.args) {
    if (depends_on_variables(*a)) return true;
  }
  return false;
}

}  // namespace

Expression::Expression() : root_(number(0.0)), text_("0") {}

Expression Expression::parse(std::string_view text,
                             std::vector<std::string> variables) {
  Expression e;
  e.variables_ = std::move(variables);
  Parser parser(text, e.variables_);
  e.root_ = parser.parse();
  e.text_ = trim(text);
  return e;
}

Expression Expression::constant(double value) {
  Expression e;
  e.root_ = number(value);
  e.text_ = std::to_string(value);
  return e;
}

double Expression::evaluate(std::span<const double> values) const {
  if (values.size() < variables_.size() && !is_constant()) {
    throw std::invalid_argument("expression '" + text_ +
                                "' evaluated with too few variables");
  }
  return eval(*root_, values);
}

bool Expression::is_constant() const { return !depends_on_variables(*root_); }

std::vector<std::string> split_top_level(std::string_view text) {
  std::vector<std::string> parts;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if (c == ',' && depth == 0) {
      parts.push_back(trim(text.substr(start, i - start)));
      start = i + 1;
    }
  }
  const std::string last = trim(text.substr(start));
  if (!last.empty() || !parts.empty()) parts.push_back(last);
  return parts;
}

std::string trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

}  // namespace capmod
