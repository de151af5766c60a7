#include "fraclab/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include <fmt/format.h>

#include "fraclab/errors.hpp"

namespace fraclab {

struct Expression::Node {
  enum class Kind { number, variable, negate, add, sub, mul, div, pow, sin, cos, exp } kind;
  double value = 0.0;
  std::size_t slot = 0;
  std::shared_ptr<const Node> lhs, rhs;

  double eval(const double* vars) const {
    switch (kind) {
      case Kind::number: return value;
      case Kind::variable: return vars[slot];
      case Kind::negate: return -lhs->eval(vars);
      case Kind::add: return lhs->eval(vars) + rhs->eval(vars);
      case Kind::sub: return lhs->eval(vars) - rhs->eval(vars);
      case Kind::mul: return lhs->eval(vars) * rhs->eval(vars);
      case Kind::div: return lhs->eval(vars) / rhs->eval(vars);
      case Kind::pow: return std::pow(lhs->eval(vars), rhs->eval(vars));
      case Kind::sin: return std::sin(lhs->eval(vars));
      case Kind::cos: return std::cos(lhs->eval(vars));
      case Kind::exp: return std::exp(lhs->eval(vars));
    }
    return 0.0;
  }

  bool uses_variables() const {
    if (kind == Kind::variable) return true;
    return (lhs && lhs->uses_variables()) || (rhs && rhs->uses_variables());
  }
};

namespace {

using Node = Expression::Node;
using Ptr = std::shared_ptr<const Node>;
using Kind = Node::Kind;

Ptr make(Kind kind, Ptr lhs = nullptr, Ptr rhs = nullptr) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

Ptr number(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::number;
  n->value = v;
  return n;
}

class Parser {
public:
  Parser(const std::string& text, const std::vector<std::string>& vars) : text_(text), vars_(vars) {}

  Ptr parse() {
    Ptr e = expr();
    skip();
    if (pos_ != text_.size()) fail(fmt::format("unexpected '{}'", text_[pos_]));
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(fmt::format("expression \"{}\": {} at position {}", text_, what, pos_));
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

  Ptr expr() {
    Ptr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make(Kind::add, lhs, term());
      } else if (accept('-')) {
        lhs = make(Kind::sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  Ptr term() {
    Ptr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make(Kind::mul, lhs, unary());
      } else if (accept('/')) {
        lhs = make(Kind::div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  Ptr unary() {
    if (accept('-')) return make(Kind::negate, unary());
    if (accept('+')) return unary();
    return power();
  }

  Ptr power() {
    Ptr base = primary();
    if (accept('^')) return make(Kind::pow, base, unary());
    return base;
  }

  Ptr primary() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Ptr e = expr();
      if (!accept(')')) fail("missing ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("malformed number");
      pos_ += static_cast<std::size_t>(end - begin);
      return number(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
      const std::string name = text_.substr(start, pos_ - start);
      for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i] == name) {
          auto n = std::make_shared<Node>();
          n->kind = Kind::variable;
          n->slot = i;
          return n;
        }
      }
      if (name == "pi") return number(std::numbers::pi);
      if (name == "e") return number(std::numbers::e);
      Kind fn;
      if (name == "sin") {
        fn = Kind::sin;
      } else if (name == "cos") {
        fn = Kind::cos;
      } else if (name == "exp") {
        fn = Kind::exp;
      } else {
        pos_ = start;
        fail(fmt::format("unknown name '{}'", name));
      }
      if (!accept('(')) fail(fmt::format("'{}' needs an argument in parentheses", name));
      Ptr arg = expr();
      if (!accept(')')) fail("missing ')'");
      return make(fn, arg);
    }
    fail(fmt::format("unexpected '{}'", c));
  }

  const std::string& text_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, const std::vector<std::string>& variables) {
  Expression e;
  e.text_ = text;
  e.root_ = Parser(text, variables).parse();
  e.arity_ = variables.size();
  return e;
}

double Expression::operator()(const std::vector<double>& values) const {
  if (values.size() < arity_) {
    throw InvalidArgument(fmt::format("expression \"{}\" needs {} values, got {}", text_, arity_, values.size()));
  }
  return root_->eval(values.data());
}

double Expression::operator()(double a, double b, double c) const {
  const double vars[3] = {a, b, c};
  if (arity_ > 3) throw InvalidArgument("expression has more than three variables");
  return root_->eval(vars);
}

bool Expression::constant() const noexcept { return !root_->uses_variables(); }

}  // namespace fraclab
