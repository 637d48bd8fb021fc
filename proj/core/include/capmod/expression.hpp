#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace capmod {

/// Compiled arithmetic expression over a fixed list of named variables.
///
/// Supports + - * / ^, unary minus, parentheses, the constants `pi` and `e`,
/// and the functions sqrt exp log sin cos tan sinh cosh tanh abs pow min max
/// atan2. Parsing throws ConfigError with the offending position.
class Expression {
 public:
  Expression();  // the constant 0

  static Expression parse(std::string_view text,
                          std::vector<std::string> variables = {});
  static Expression constant(double value);

  /// `values` is positional, matching the variable list given to parse().
  /// Constant expressions accept an empty list.
  double evaluate(std::span<const double> values) const;
  double evaluate() const { return evaluate(std::span<const double>{}); }

  bool is_constant() const;
  const std::string& text() const { return text_; }
  const std::vector<std::string>& variables() const { return variables_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
  std::vector<std::string> variables_;
};

/// Splits `text` at commas that are not nested inside parentheses.
std::vector<std::string> split_top_level(std::string_view text);
std::string trim(std::string_view text);

}  // namespace capmod
