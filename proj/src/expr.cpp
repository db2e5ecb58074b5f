#include "extremalkit/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <utility>

namespace extremalkit {

VarSet::VarSet(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    for (std::size_t j = i + 1; j < names_.size(); ++j) {
      if (names_[i] == names_[j]) {
        throw ValidationError("duplicate variable name: " + names_[i]);
      }
    }
  }
}

VarSet VarSet::for_problem(int state_dim, int control_dim) {
  std::vector<std::string> names;
  names.reserve(1 + state_dim + control_dim);
  names.push_back("t");
  for (int i = 1; i <= state_dim; ++i) names.push_back("x" + std::to_string(i));
  for (int i = 1; i <= control_dim; ++i) names.push_back("u" + std::to_string(i));
  return VarSet(std::move(names));
}

int VarSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

Expr::Expr() : Expr(nullptr, std::make_shared<const VarSet>()) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Constant;
  n->value = 0.0;
  node_ = n;
}

Expr::Expr(NodePtr node, std::shared_ptr<const VarSet> vars)
    : node_(std::move(node)), vars_(std::move(vars)) {}

Expr Expr::constant(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Constant;
  n->value = value;
  return Expr(n, std::make_shared<const VarSet>());
}

Expr Expr::variable(std::shared_ptr<const VarSet> vars, int slot) {
  if (slot < 0 || static_cast<std::size_t>(slot) >= vars->size()) {
    throw ValidationError("variable slot out of range");
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::Variable;
  n->slot = slot;
  return Expr(n, std::move(vars));
}

double Expr::eval_node(const Node& n, std::span<const double> values) {
  switch (n.kind) {
    case Kind::Constant: return n.value;
    case Kind::Variable: return values[static_cast<std::size_t>(n.slot)];
    case Kind::Add: return eval_node(*n.lhs, values) + eval_node(*n.rhs, values);
    case Kind::Sub: return eval_node(*n.lhs, values) - eval_node(*n.rhs, values);
    case Kind::Mul: return eval_node(*n.lhs, values) * eval_node(*n.rhs, values);
    case Kind::Div: return eval_node(*n.lhs, values) / eval_node(*n.rhs, values);
    case Kind::Pow: {
      // Exponentiation by squaring keeps integer powers exact and cheap.
      double base = eval_node(*n.lhs, values);
      double acc = 1.0;
      double sq = base;
      for (int e = n.exponent; e > 0; e >>= 1) {
        if (e & 1) acc *= sq;
        sq *= sq;
      }
      return acc;
    }
    case Kind::Neg: return -eval_node(*n.lhs, values);
    case Kind::Sin: return std::sin(eval_node(*n.lhs, values));
    case Kind::Cos: return std::cos(eval_node(*n.lhs, values));
    case Kind::Exp: return std::exp(eval_node(*n.lhs, values));
    case Kind::Sqrt: return std::sqrt(eval_node(*n.lhs, values));
    case Kind::Tanh: return std::tanh(eval_node(*n.lhs, values));
    case Kind::Abs: return std::fabs(eval_node(*n.lhs, values));
  }
  return 0.0;  // unreachable
}

double Expr::eval(std::span<const double> values) const {
  if (values.size() < vars_->size()) {
    throw ValidationError("evaluation span shorter than the variable set");
  }
  double r = eval_node(*node_, values);
  if (!std::isfinite(r)) {
    throw NumericalError("expression evaluated to a non-finite value: " + unparse());
  }
  return r;
}

double Expr::eval(const std::map<std::string, double>& env) const {
  std::vector<double> values(vars_->size());
  for (std::size_t i = 0; i < vars_->size(); ++i) {
    auto it = env.find(vars_->name(i));
    if (it == env.end()) {
      throw ValidationError("missing binding for variable " + vars_->name(i));
    }
    values[i] = it->second;
  }
  return eval(values);
}

bool Expr::node_depends_on(const Node& n, int slot) {
  switch (n.kind) {
    case Kind::Constant: return false;
    case Kind::Variable: return n.slot == slot;
    default:
      if (n.lhs && node_depends_on(*n.lhs, slot)) return true;
      if (n.rhs && node_depends_on(*n.rhs, slot)) return true;
      return false;
  }
}

bool Expr::depends_on(int slot) const { return node_depends_on(*node_, slot); }

namespace {
using Kind = Expr::Kind;
}  // namespace

// --- simplification -------------------------------------------------------

namespace {

struct NodeFns {
  using NodePtr = std::shared_ptr<const Expr::Node>;

  static NodePtr make_const(double v) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = Kind::Constant;
    n->value = v;
    return n;
  }

  static NodePtr make_unary(Kind k, NodePtr child) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = k;
    n->lhs = std::move(child);
    return n;
  }

  static NodePtr make_binary(Kind k, NodePtr lhs, NodePtr rhs) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = k;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
  }

  static NodePtr make_pow(NodePtr base, int exponent) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = Kind::Pow;
    n->lhs = std::move(base);
    n->exponent = exponent;
    return n;
  }

  static bool constant(const NodePtr& n, double v) {
    return n->kind == Kind::Constant && n->value == v;
  }
};

}  // namespace

Expr::NodePtr Expr::simplify_node(const NodePtr& n) {
  using F = NodeFns;
  if (n->kind == Kind::Constant || n->kind == Kind::Variable) return n;

  NodePtr a = n->lhs ? simplify_node(n->lhs) : nullptr;
  NodePtr b = n->rhs ? simplify_node(n->rhs) : nullptr;

  auto fold1 = [&](double (*f)(double)) -> NodePtr {
    if (a->kind == Kind::Constant) {
      double v = f(a->value);
      if (std::isfinite(v)) return F::make_const(v);
    }
    return nullptr;
  };

  switch (n->kind) {
    case Kind::Add:
      if (a->kind == Kind::Constant && b->kind == Kind::Constant) {
        double v = a->value + b->value;
        if (std::isfinite(v)) return F::make_const(v);
      }
      if (F::constant(a, 0.0)) return b;
      if (F::constant(b, 0.0)) return a;
      break;
    case Kind::Sub:
      if (a->kind == Kind::Constant && b->kind == Kind::Constant) {
        double v = a->value - b->value;
        if (std::isfinite(v)) return F::make_const(v);
      }
      if (F::constant(b, 0.0)) return a;
      if (F::constant(a, 0.0)) return simplify_node(F::make_unary(Kind::Neg, b));
      break;
    case Kind::Mul:
      if (a->kind == Kind::Constant && b->kind == Kind::Constant) {
        double v = a->value * b->value;
        if (std::isfinite(v)) return F::make_const(v);
      }
      if (F::constant(a, 0.0) || F::constant(b, 0.0)) return F::make_const(0.0);
      if (F::constant(a, 1.0)) return b;
      if (F::constant(b, 1.0)) return a;
      break;
    case Kind::Div:
      if (a->kind == Kind::Constant && b->kind == Kind::Constant) {
        double v = a->value / b->value;
        if (std::isfinite(v)) return F::make_const(v);
      }
      if (F::constant(b, 1.0)) return a;
      if (F::constant(a, 0.0)) return F::make_const(0.0);
      break;
    case Kind::Pow:
      if (n->exponent == 0) return F::make_const(1.0);
      if (n->exponent == 1) return a;
      if (a->kind == Kind::Constant) {
        double acc = 1.0, sq = a->value;
        for (int e = n->exponent; e > 0; e >>= 1) {
          if (e & 1) acc *= sq;
          sq *= sq;
        }
        if (std::isfinite(acc)) return F::make_const(acc);
      }
      return F::make_pow(a, n->exponent);
    case Kind::Neg:
      if (a->kind == Kind::Constant) return F::make_const(-a->value);
      if (a->kind == Kind::Neg) return a->lhs;
      break;
    case Kind::Sin:
      if (auto c = fold1(+[](double x) { return std::sin(x); })) return c;
      break;
    case Kind::Cos:
      if (auto c = fold1(+[](double x) { return std::cos(x); })) return c;
      break;
    case Kind::Exp:
      if (auto c = fold1(+[](double x) { return std::exp(x); })) return c;
      break;
    case Kind::Sqrt:
      if (auto c = fold1(+[](double x) { return std::sqrt(x); })) return c;
      break;
    case Kind::Tanh:
      if (auto c = fold1(+[](double x) { return std::tanh(x); })) return c;
      break;
    case Kind::Abs:
      if (auto c = fold1(+[](double x) { return std::fabs(x); })) return c;
      break;
    default:
      break;
  }

  if (a == n->lhs && b == n->rhs) return n;
  auto out = std::make_shared<Node>(*n);
  out->lhs = a;
  out->rhs = b;
  return out;
}

Expr Expr::simplified() const { return Expr(simplify_node(node_), vars_); }

// --- differentiation ------------------------------------------------------

Expr::NodePtr Expr::derivative_node(const NodePtr& n, int slot) {
  using F = NodeFns;
  switch (n->kind) {
    case Kind::Constant: return F::make_const(0.0);
    case Kind::Variable: return F::make_const(n->slot == slot ? 1.0 : 0.0);
    case Kind::Add:
      return F::make_binary(Kind::Add, derivative_node(n->lhs, slot),
                            derivative_node(n->rhs, slot));
    case Kind::Sub:
      return F::make_binary(Kind::Sub, derivative_node(n->lhs, slot),
                            derivative_node(n->rhs, slot));
    case Kind::Mul:
      return F::make_binary(
          Kind::Add,
          F::make_binary(Kind::Mul, derivative_node(n->lhs, slot), n->rhs),
          F::make_binary(Kind::Mul, n->lhs, derivative_node(n->rhs, slot)));
    case Kind::Div:
      // (u/v)' = (u'v - uv') / v^2
      return F::make_binary(
          Kind::Div,
          F::make_binary(
              Kind::Sub,
              F::make_binary(Kind::Mul, derivative_node(n->lhs, slot), n->rhs),
              F::make_binary(Kind::Mul, n->lhs, derivative_node(n->rhs, slot))),
          F::make_pow(n->rhs, 2));
    case Kind::Pow: {
      if (n->exponent == 0) return F::make_const(0.0);
      // (u^k)' = k u^(k-1) u'
      NodePtr inner = n->exponent == 1
                          ? F::make_const(1.0)
                          : NodePtr(F::make_pow(n->lhs, n->exponent - 1));
      return F::make_binary(
          Kind::Mul, F::make_const(static_cast<double>(n->exponent)),
          F::make_binary(Kind::Mul, inner, derivative_node(n->lhs, slot)));
    }
    case Kind::Neg:
      return F::make_unary(Kind::Neg, derivative_node(n->lhs, slot));
    case Kind::Sin:
      return F::make_binary(Kind::Mul, F::make_unary(Kind::Cos, n->lhs),
                            derivative_node(n->lhs, slot));
    case Kind::Cos:
      return F::make_unary(
          Kind::Neg, F::make_binary(Kind::Mul, F::make_unary(Kind::Sin, n->lhs),
                                    derivative_node(n->lhs, slot)));
    case Kind::Exp:
      return F::make_binary(Kind::Mul, F::make_unary(Kind::Exp, n->lhs),
                            derivative_node(n->lhs, slot));
    case Kind::Sqrt:
      // u' / (2 sqrt(u))
      return F::make_binary(
          Kind::Div, derivative_node(n->lhs, slot),
          F::make_binary(Kind::Mul, F::make_const(2.0),
                         F::make_unary(Kind::Sqrt, n->lhs)));
    case Kind::Tanh: {
      // (1 - tanh(u)^2) u'
      NodePtr th = F::make_unary(Kind::Tanh, n->lhs);
      return F::make_binary(
          Kind::Mul,
          F::make_binary(Kind::Sub, F::make_const(1.0), F::make_pow(th, 2)),
          derivative_node(n->lhs, slot));
    }
    case Kind::Abs:
      // u/|u| * u'; evaluating at u = 0 yields 0/0 and is rejected at
      // evaluation time as a non-finite result.
      return F::make_binary(
          Kind::Mul,
          F::make_binary(Kind::Div, n->lhs, F::make_unary(Kind::Abs, n->lhs)),
          derivative_node(n->lhs, slot));
  }
  return NodeFns::make_const(0.0);  // unreachable
}

Expr Expr::derivative(std::string_view var) const {
  int slot = vars_->index_of(var);
  if (slot < 0) {
    throw ValidationError("cannot differentiate with respect to unknown variable " +
                          std::string(var));
  }
  return Expr(simplify_node(derivative_node(node_, slot)), vars_);
}

// --- structural equality ---------------------------------------------------

bool Expr::equal_nodes(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Kind::Constant: return a.value == b.value;
    case Kind::Variable: return a.slot == b.slot;
    case Kind::Pow:
      return a.exponent == b.exponent && equal_nodes(*a.lhs, *b.lhs);
    default:
      if (static_cast<bool>(a.lhs) != static_cast<bool>(b.lhs)) return false;
      if (static_cast<bool>(a.rhs) != static_cast<bool>(b.rhs)) return false;
      if (a.lhs && !equal_nodes(*a.lhs, *b.lhs)) return false;
      if (a.rhs && !equal_nodes(*a.rhs, *b.rhs)) return false;
      return true;
  }
}

bool Expr::structurally_equal(const Expr& other) const {
  return equal_nodes(*node_, *other.node_);
}

// --- unparse ----------------------------------------------------------------

namespace {

// Precedence levels for printing: higher binds tighter.
int print_prec(const Expr::Node& n) {
  switch (n.kind) {
    case Kind::Add:
    case Kind::Sub: return 1;
    case Kind::Mul:
    case Kind::Div: return 2;
    case Kind::Neg: return 3;
    case Kind::Pow: return 4;
    case Kind::Constant: return n.value < 0 ? 3 : 5;  // "-3" prints like a negation
    default: return 5;  // variables and function calls are atomic
  }
}

void format_double(double v, std::string& out) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

void Expr::unparse_node(const Node& n, const VarSet& vars, std::string& out) {
  auto child = [&](const Node& c, int min_prec) {
    bool parens = print_prec(c) < min_prec;
    if (parens) out += '(';
    unparse_node(c, vars, out);
    if (parens) out += ')';
  };

  switch (n.kind) {
    case Kind::Constant: format_double(n.value, out); break;
    case Kind::Variable: out += vars.name(static_cast<std::size_t>(n.slot)); break;
    case Kind::Add:
      child(*n.lhs, 1);
      out += " + ";
      child(*n.rhs, 2);  // right operand of '-'/'+' needs higher precedence
      break;
    case Kind::Sub:
      child(*n.lhs, 1);
      out += " - ";
      child(*n.rhs, 2);
      break;
    case Kind::Mul:
      child(*n.lhs, 2);
      out += "*";
      child(*n.rhs, 3);
      break;
    case Kind::Div:
      child(*n.lhs, 2);
      out += "/";
      child(*n.rhs, 3);
      break;
    case Kind::Neg:
      out += "-";
      child(*n.lhs, 3);
      break;
    case Kind::Pow:
      child(*n.lhs, 5);
      out += "^";
      out += std::to_string(n.exponent);
      break;
    case Kind::Sin: out += "sin("; unparse_node(*n.lhs, vars, out); out += ')'; break;
    case Kind::Cos: out += "cos("; unparse_node(*n.lhs, vars, out); out += ')'; break;
    case Kind::Exp: out += "exp("; unparse_node(*n.lhs, vars, out); out += ')'; break;
    case Kind::Sqrt: out += "sqrt("; unparse_node(*n.lhs, vars, out); out += ')'; break;
    case Kind::Tanh: out += "tanh("; unparse_node(*n.lhs, vars, out); out += ')'; break;
    case Kind::Abs: out += "abs("; unparse_node(*n.lhs, vars, out); out += ')'; break;
  }
}

std::string Expr::unparse() const {
  std::string out;
  unparse_node(*node_, *vars_, out);
  return out;
}

// --- parser -----------------------------------------------------------------

namespace {

class Parser {
 public:
  Parser(std::string_view text, std::shared_ptr<const VarSet> vars)
      : text_(text), vars_(std::move(vars)) {}

  using NodePtr = std::shared_ptr<const Expr::Node>;

  NodePtr parse_all() {
    NodePtr e = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) {
      throw ParseError("unexpected trailing input", pos_);
    }
    return e;
  }

  std::shared_ptr<const VarSet> vars() { return vars_; }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  NodePtr parse_sum() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (eat('+')) {
        lhs = NodeFns::make_binary(Kind::Add, lhs, parse_term());
      } else if (eat('-')) {
        lhs = NodeFns::make_binary(Kind::Sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    for (;;) {
      if (eat('*')) {
        lhs = NodeFns::make_binary(Kind::Mul, lhs, parse_factor());
      } else if (eat('/')) {
        lhs = NodeFns::make_binary(Kind::Div, lhs, parse_factor());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_factor() {
    if (eat('-')) {
      return NodeFns::make_unary(Kind::Neg, parse_factor());
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (eat('^')) {
      skip_ws();
      std::size_t start = pos_;
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        throw ParseError("exponent must be a nonnegative integer literal", pos_);
      }
      int exponent = 0;
      auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), exponent);
      if (ec != std::errc()) {
        throw ParseError("exponent out of range", start);
      }
      pos_ = static_cast<std::size_t>(ptr - text_.data());
      // A fractional exponent like 2.5 is a syntax error, not a float parse.
      if (pos_ < text_.size() && text_[pos_] == '.') {
        throw ParseError("exponent must be a nonnegative integer literal", start);
      }
      return NodeFns::make_pow(base, exponent);
    }
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) {
      throw ParseError("unexpected end of input", pos_);
    }
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return parse_number();
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      return parse_ident();
    }
    if (c == '(') {
      std::size_t open = pos_;
      ++pos_;
      NodePtr e = parse_sum();
      if (!eat(')')) {
        throw ParseError("unbalanced parenthesis", open);
      }
      return e;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  NodePtr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        pos_ = mark;  // "2e" is the number 2 followed by identifier-ish junk
      } else {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc() || ptr != text_.data() + pos_) {
      throw ParseError("malformed number", start);
    }
    return NodeFns::make_const(value);
  }

  NodePtr parse_ident() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    std::string_view name = text_.substr(start, pos_ - start);
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      Kind k;
      if (name == "sin") k = Kind::Sin;
      else if (name == "cos") k = Kind::Cos;
      else if (name == "exp") k = Kind::Exp;
      else if (name == "sqrt") k = Kind::Sqrt;
      else if (name == "tanh") k = Kind::Tanh;
      else if (name == "abs") k = Kind::Abs;
      else throw ParseError("unknown function " + std::string(name), start);
      std::size_t open = pos_;
      ++pos_;
      NodePtr arg = parse_sum();
      if (!eat(')')) {
        throw ParseError("unbalanced parenthesis", open);
      }
      return NodeFns::make_unary(k, arg);
    }
    int slot = vars_->index_of(name);
    if (slot < 0) {
      throw ParseError("unknown variable " + std::string(name), start);
    }
    auto n = std::make_shared<Expr::Node>();
    n->kind = Kind::Variable;
    n->slot = slot;
    return n;
  }

  std::string_view text_;
  std::shared_ptr<const VarSet> vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text, std::shared_ptr<const VarSet> allowed) {
  Parser p(text, std::move(allowed));
  auto node = p.parse_all();
  return Expr(node, p.vars());
}

Expr parse(std::string_view text, const VarSet& allowed) {
  return parse(text, std::make_shared<const VarSet>(allowed));
}

}  // namespace extremalkit
