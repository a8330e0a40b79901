#include "edg/expression.h"
#include "edg/error.h"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

namespace edg {

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view text) : src_(text) {}

  Expression run() {
    Expression e;
    e.text_ = std::string(src_);
    out_ = &e;
    parse_expr();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    if (e.program_.empty()) fail("empty expression");
    // Stack depth needed by the postfix program.
    std::size_t depth = 0;
    for (const auto& ins : e.program_) {
      switch (ins.op) {
        case Expression::Op::push_const:
        case Expression::Op::push_k:
        case Expression::Op::push_j: ++depth; break;
        case Expression::Op::neg:
        case Expression::Op::pow: break;
        default: --depth; break;
      }
      e.max_depth_ = std::max(e.max_depth_, depth);
    }
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::config,
                "expression \"" + std::string(src_) + "\" at " + std::to_string(pos_) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void emit(Expression::Op op, double v = 0.0) { out_->program_.push_back({op, v}); }

  void parse_expr() {
    parse_term();
    for (;;) {
      if (accept('+')) {
        parse_term();
        emit(Expression::Op::add);
      } else if (accept('-')) {
        parse_term();
        emit(Expression::Op::sub);
      } else {
        return;
      }
    }
  }

  void parse_term() {
    parse_unary();
    for (;;) {
      if (accept('*')) {
        parse_unary();
        emit(Expression::Op::mul);
      } else if (accept('/')) {
        parse_unary();
        emit(Expression::Op::div);
      } else {
        return;
      }
    }
  }

  void parse_unary() {
    if (accept('-')) {
      parse_unary();
      emit(Expression::Op::neg);
      return;
    }
    if (accept('+')) {
      parse_unary();
      return;
    }
    parse_power();
  }

  void parse_power() {
    parse_atom();
    if (accept('^')) {
      skip_ws();
      bool negative = false;
      if (pos_ < src_.size() && src_[pos_] == '-') {
        negative = true;
        ++pos_;
      }
      const double n = parse_number();
      if (n != std::floor(n)) fail("exponent must be an integer (rational expressions only)");
      emit(Expression::Op::pow, negative ? -n : n);
    }
  }

  double parse_number() {
    skip_ws();
    const char* begin = src_.data() + pos_;
    const char* end = src_.data() + src_.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr == begin) fail("expected a number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return v;
  }

  void parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      parse_expr();
      if (!accept(')')) fail("expected ')'");
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      emit(Expression::Op::push_const, parse_number());
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      const std::string_view name = src_.substr(start, pos_ - start);
      if (name == "k") {
        emit(Expression::Op::push_k);
        out_->uses_first_ = true;
      } else if (name == "j" || name == "l") {
        emit(Expression::Op::push_j);
        out_->uses_second_ = true;
      } else {
        pos_ = start;
        fail("unknown identifier '" + std::string(name) + "'");
      }
      return;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Expression* out_ = nullptr;
};

Expression Expression::parse(std::string_view text) { return ExpressionParser(text).run(); }

double Expression::operator()(double k, double j) const {
  // Expressions are short; a fixed buffer keeps evaluation allocation free.
  constexpr std::size_t kInline = 32;
  double inline_stack[kInline]{};
  std::vector<double> heap;
  double* stack = inline_stack;
  if (max_depth_ > kInline) {
    heap.resize(max_depth_);
    stack = heap.data();
  }
  std::size_t sp = 0;
  for (const auto& ins : program_) {
    switch (ins.op) {
      case Op::push_const: stack[sp++] = ins.value; break;
      case Op::push_k: stack[sp++] = k; break;
      case Op::push_j: stack[sp++] = j; break;
      case Op::add: --sp; stack[sp - 1] += stack[sp]; break;
      case Op::sub: --sp; stack[sp - 1] -= stack[sp]; break;
      case Op::mul: --sp; stack[sp - 1] *= stack[sp]; break;
      case Op::div: --sp; stack[sp - 1] /= stack[sp]; break;
      case Op::neg: stack[sp - 1] = -stack[sp - 1]; break;
      case Op::pow: stack[sp - 1] = std::pow(stack[sp - 1], ins.value); break;
    }
  }
  return stack[0];
}

}  // namespace edg
