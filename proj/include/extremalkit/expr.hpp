#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "extremalkit/errors.hpp"

namespace extremalkit {

/// Ordered set of variable names. The position of a name is its slot in the
/// value span passed to Expr::eval, so evaluation in inner loops is just an
/// array lookup.
class VarSet {
 public:
  VarSet() = default;
  explicit VarSet(std::vector<std::string> names);

  /// Conventional ordering for control problems: t, x1..xd, u1..uk.
  static VarSet for_problem(int state_dim, int control_dim);

  int index_of(std::string_view name) const;  // -1 when absent
  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t slot) const { return names_[slot]; }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

/// Immutable scalar expression over a fixed variable set.
///
/// Supported grammar: + - * / on subexpressions, ^ with a literal
/// nonnegative integer exponent, unary minus, and the functions
/// sin, cos, exp, sqrt, tanh, abs. Precedence: ^ binds tighter than unary
/// minus, which binds tighter than * and /, which bind tighter than + and -.
class Expr {
 public:
  enum class Kind {
    Constant,
    Variable,
    Add,
    Sub,
    Mul,
    Div,
    Pow,  // integer exponent >= 0
    Neg,
    Sin,
    Cos,
    Exp,
    Sqrt,
    Tanh,
    Abs,
  };

  Expr();  // constant 0 over an empty variable set

  static Expr constant(double value);
  static Expr variable(std::shared_ptr<const VarSet> vars, int slot);

  Kind kind() const { return node_->kind; }
  const VarSet& variables() const { return *vars_; }
  std::shared_ptr<const VarSet> variables_ptr() const { return vars_; }

  /// Evaluate against values ordered like the variable set. Non-finite
  /// results raise NumericalError rather than propagating silently.
  double eval(std::span<const double> values) const;

  /// Evaluate against a name -> value map; every variable of the set must be
  /// bound.
  double eval(const std::map<std::string, double>& env) const;

  /// Symbolic partial derivative with respect to `var` (which must belong to
  /// the variable set). The result is returned in simplified form.
  Expr derivative(std::string_view var) const;

  /// Constant folding plus 0/1 identity elimination. Evaluation is preserved
  /// on every environment where the original expression is defined.
  Expr simplified() const;

  /// Render to text that parses back to a structurally equal tree.
  std::string unparse() const;

  bool structurally_equal(const Expr& other) const;

  /// True when the expression mentions the given variable slot.
  bool depends_on(int slot) const;

  // Nodes are exposed for the parser and printers; treat them as read-only.
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;

  struct Node {
    Kind kind = Kind::Constant;
    double value = 0.0;  // Constant
    int slot = -1;       // Variable
    int exponent = 0;    // Pow
    NodePtr lhs, rhs;    // children (rhs only for binary nodes)
  };

 private:
  Expr(NodePtr node, std::shared_ptr<const VarSet> vars);

  static NodePtr simplify_node(const NodePtr& n);
  static NodePtr derivative_node(const NodePtr& n, int slot);
  static double eval_node(const Node& n, std::span<const double> values);
  static bool equal_nodes(const Node& a, const Node& b);
  static void unparse_node(const Node& n, const VarSet& vars, std::string& out);
  static bool node_depends_on(const Node& n, int slot);

  NodePtr node_;
  std::shared_ptr<const VarSet> vars_;

  friend Expr parse(std::string_view text, std::shared_ptr<const VarSet> allowed);
};

/// Parse `text` against the allowed variable set. Unknown identifiers,
/// malformed numbers and unbalanced parentheses raise ParseError with the
/// byte offset of the problem.
Expr parse(std::string_view text, std::shared_ptr<const VarSet> allowed);
Expr parse(std::string_view text, const VarSet& allowed);

}  // namespace extremalkit
