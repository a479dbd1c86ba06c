#include "distpert/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace distpert {

enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Exp, Tanh, Sqrt, Abs, Ball, BallP };

struct ExprNode {
  Op op = Op::Const;
  double value = 0.0;
  int var = 0;  // 0..2 coord, 3 radius; +4 for second point
  std::shared_ptr<const ExprNode> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  NodePtr run() {
    auto e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

  bool second_point = false;

 private:
  std::string_view s_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("expression '" + std::string(s_) + "': " + what + " at offset " +
                                std::to_string(pos_));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      if (eat('+')) lhs = make(Op::Add, lhs, term());
      else if (eat('-')) lhs = make(Op::Sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (eat('*')) lhs = make(Op::Mul, lhs, unary());
      else if (eat('/')) lhs = make(Op::Div, lhs, unary());
      else return lhs;
    }
  }

  NodePtr unary() {
    if (eat('-')) return make(Op::Neg, unary());
    if (eat('+')) return unary();
    return power();
  }

  NodePtr power() {
    auto base = primary();
    if (eat('^')) return make(Op::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return name();
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr number() {
    const char* begin = s_.data() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<size_t>(end - begin);
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Const;
    n->value = v;
    return n;
  }

  NodePtr name() {
    size_t start = pos_;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    std::string id(s_.substr(start, pos_ - start));

    static const std::vector<std::pair<std::string, Op>> functions = {
        {"exp", Op::Exp},   {"tanh", Op::Tanh}, {"sqrt", Op::Sqrt},
        {"abs", Op::Abs},   {"ball", Op::Ball}, {"ballp", Op::BallP}};
    for (const auto& [fname, op] : functions) {
      if (id == fname) {
        if (!eat('(')) fail("expected '(' after " + id);
        auto arg = expr();
        if (!eat(')')) fail("expected ')'");
        if (op == Op::BallP) second_point = true;
        return make(op, arg);
      }
    }

    static const std::vector<std::string> vars = {"x", "y", "z", "r", "xp", "yp", "zp", "rp"};
    for (size_t i = 0; i < vars.size(); ++i) {
      if (id == vars[i]) {
        auto n = std::make_shared<ExprNode>();
        n->op = Op::Var;
        n->var = static_cast<int>(i);
        if (i >= 4) second_point = true;
        return n;
      }
    }
    if (id == "pi") {
      auto n = std::make_shared<ExprNode>();
      n->op = Op::Const;
      n->value = std::numbers::pi;
      return n;
    }
    fail("unknown name '" + id + "'");
  }
};

double radius(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double eval(const ExprNode& n, std::span<const double> x, std::span<const double> xp) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: {
      auto pt = n.var < 4 ? x : xp;
      int k = n.var % 4;
      if (k == 3) return radius(pt);
      return static_cast<size_t>(k) < pt.size() ? pt[static_cast<size_t>(k)] : 0.0;
    }
    case Op::Neg: return -eval(*n.a, x, xp);
    case Op::Add: return eval(*n.a, x, xp) + eval(*n.b, x, xp);
    case Op::Sub: return eval(*n.a, x, xp) - eval(*n.b, x, xp);
    case Op::Mul: return eval(*n.a, x, xp) * eval(*n.b, x, xp);
    case Op::Div: return eval(*n.a, x, xp) / eval(*n.b, x, xp);
    case Op::Pow: return std::pow(eval(*n.a, x, xp), eval(*n.b, x, xp));
    case Op::Exp: return std::exp(eval(*n.a, x, xp));
    case Op::Tanh: return std::tanh(eval(*n.a, x, xp));
    case Op::Sqrt: return std::sqrt(eval(*n.a, x, xp));
    case Op::Abs: return std::abs(eval(*n.a, x, xp));
    case Op::Ball: return radius(x) < eval(*n.a, x, xp) ? 1.0 : 0.0;
    case Op::BallP: return radius(xp) < eval(*n.a, x, xp) ? 1.0 : 0.0;
  }
  return 0.0;
}

}  // namespace

Expression::Expression() : Expression(constant(0.0)) {}

Expression Expression::parse(std::string_view text) {
  Parser p(text);
  Expression e{parse_tag{}};
  e.root_ = p.run();
  e.text_ = std::string(text);
  e.second_point_ = p.second_point;
  return e;
}

Expression Expression::constant(double value) {
  Expression e{parse_tag{}};
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Const;
  n->value = value;
  e.root_ = n;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  e.text_ = buf;
  return e;
}

double Expression::operator()(std::span<const double> x, std::span<const double> xp) const {
  return eval(*root_, x, xp);
}

}  // namespace distpert
