#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace distpert {

// Small arithmetic grammar for coefficient fields in scenario files.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | name | name '(' expr ')' | '(' expr ')'
//
// Names: x y z r (first point), xp yp zp rp (second point, kernels only), pi.
// Functions: exp tanh sqrt abs, ball(R) = 1 if r < R else 0, ballp(R) on rp.
struct ExprNode;

class Expression {
 public:
  Expression();  // constant zero
  static Expression parse(std::string_view text);
  static Expression constant(double value);

  // First point in `x`, second point in `xp` (may be empty).
  double operator()(std::span<const double> x, std::span<const double> xp = {}) const;

  const std::string& text() const { return text_; }
  bool uses_second_point() const { return second_point_; }

 private:
  struct parse_tag {};
  explicit Expression(parse_tag) {}

  std::shared_ptr<const ExprNode> root_;
  std::string text_;
  bool second_point_ = false;
};

}  // namespace distpert
