#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace edg {

// Rational expressions over the two integer indices of a kernel.
//
// Grammar:
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' integer)?
//   atom   := number | variable | '(' expr ')'
//
// `k` names the first index; `j` and `l` both name the second. An expression
// in one variable may therefore use whichever name reads best.
class Expression {
 public:
  static Expression parse(std::string_view text);

  double operator()(double k, double j = 0.0) const;

  const std::string& text() const { return text_; }
  bool uses_first() const { return uses_first_; }
  bool uses_second() const { return uses_second_; }

 private:
  enum class Op : unsigned char { push_const, push_k, push_j, add, sub, mul, div, neg, pow };
  struct Instr {
    Op op;
    double value;  // constant for push_const, exponent for pow
  };

  friend class ExpressionParser;

  std::string text_;
  std::vector<Instr> program_;
  std::size_t max_depth_ = 0;
  bool uses_first_ = false;
  bool uses_second_ = false;
};

}  // namespace edg
