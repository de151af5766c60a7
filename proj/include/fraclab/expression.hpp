#pragma once

#include <memory>
#include <string>
#include <vector>

namespace fraclab {

/// Arithmetic over named variables: numbers, pi, e, + - * / ^ (right associative, binding
/// tighter than unary minus, so -x^2 = -(x^2)), parentheses, sin, cos, exp.
class Expression {
public:
  /// Throws ParseError ("parse_error") with the offending position, or for a name that is
  /// neither a constant, a function nor one of `variables`.
  static Expression parse(const std::string& text, const std::vector<std::string>& variables);

  /// `values` in the order of the variable list given to parse.
  double operator()(const std::vector<double>& values) const;
  double operator()(double a, double b = 0.0, double c = 0.0) const;

  const std::string& text() const noexcept { return text_; }
  /// True when no variable occurs.
  bool constant() const noexcept;

  struct Node;

private:
  std::string text_;
  std::shared_ptr<const Node> root_;
  std::size_t arity_ = 0;
};

}  // namespace fraclab
