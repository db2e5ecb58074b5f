#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "extremalkit/expr.hpp"

namespace extremalkit {

// --- control fiber ----------------------------------------------------------

struct UnconstrainedFiber {};

struct BoxFiber {
  Eigen::VectorXd lo, hi;  // componentwise lo < hi
};

struct GridFiber {
  std::vector<Eigen::VectorXd> points;  // finite admissible set, nonempty
};

using Fiber = std::variant<UnconstrainedFiber, BoxFiber, GridFiber>;

/// True when u lies in the fiber up to `tol` (grid fibers: within tol of a
/// listed point in the max norm).
bool fiber_contains(const Fiber& fiber, const Eigen::VectorXd& u, double tol = 1e-12);

// --- plain descriptions (no invariants; validate() reports problems) --------

struct FiberSpec {
  enum class Type { Unconstrained, Box, Grid } type = Type::Unconstrained;
  std::vector<double> lo, hi;               // Box
  std::vector<std::vector<double>> points;  // Grid
};

struct ProblemSpec {
  int state_dim = 0;
  int control_dim = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<std::string> dynamics;  // state_dim expressions over t, x*, u*
  std::string cost;                   // running cost over the same variables
  FiberSpec fiber;
  std::optional<std::vector<double>> x_start;  // prescribed initial state
  std::optional<std::vector<double>> x_end;    // prescribed final state
};

struct ControlSpec {
  std::vector<double> breakpoints;              // a = a0 < ... < al = b
  std::vector<std::vector<std::string>> pieces; // per piece: control_dim exprs in t
};

struct Diagnostic {
  std::string code;
  std::string message;
};

/// Collect every contract violation in the description (empty list = valid).
std::vector<Diagnostic> validate(const ProblemSpec& spec);
std::vector<Diagnostic> validate(const ProblemSpec& problem, const ControlSpec& control);

// --- control problem ---------------------------------------------------------

struct SystemJacobians {
  Eigen::MatrixXd dyn_x;   // d x d, entry (i,j) = d(dynamics_i)/d(x_j)
  Eigen::MatrixXd dyn_u;   // d x k
  Eigen::VectorXd cost_x;  // d
  Eigen::VectorXd cost_u;  // k
};

/// Fixed-horizon control system dx/dt = f(t,x,u) with running cost rate
/// L(t,x,u) and a control fiber constraint. All expressions are parsed and
/// symbolically differentiated at construction; construction throws
/// ValidationError on any malformed input.
class ControlProblem {
 public:
  explicit ControlProblem(const ProblemSpec& spec);

  int state_dim() const { return d_; }
  int control_dim() const { return k_; }
  double t_start() const { return t0_; }
  double t_end() const { return t1_; }
  double horizon() const { return t1_ - t0_; }
  const Fiber& fiber() const { return fiber_; }
  const std::optional<Eigen::VectorXd>& x_start() const { return x_start_; }
  const std::optional<Eigen::VectorXd>& x_end() const { return x_end_; }
  const VarSet& vars() const { return *vars_; }
  std::shared_ptr<const VarSet> vars_ptr() const { return vars_; }
  const ProblemSpec& spec() const { return spec_; }

  const Expr& dynamics_expr(int i) const { return dyn_[i]; }
  const Expr& cost_expr() const { return cost_; }
  const Expr& dynamics_x_expr(int i, int j) const { return dyn_x_[i * d_ + j]; }
  const Expr& dynamics_u_expr(int i, int a) const { return dyn_u_[i * k_ + a]; }
  const Expr& cost_x_expr(int j) const { return cost_x_[j]; }
  const Expr& cost_u_expr(int a) const { return cost_u_[a]; }
  const Expr& dynamics_uu_expr(int i, int a, int b) const {
    return dyn_uu_[(i * k_ + a) * k_ + b];
  }
  const Expr& cost_uu_expr(int a, int b) const { return cost_uu_[a * k_ + b]; }

  /// Write (t, x, u) into `values` laid out like vars(): t, x1..xd, u1..uk.
  void pack(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
            std::vector<double>& values) const;

 private:
  ProblemSpec spec_;
  int d_ = 0, k_ = 0;
  double t0_ = 0.0, t1_ = 0.0;
  std::shared_ptr<const VarSet> vars_;
  std::vector<Expr> dyn_;
  Expr cost_;
  Fiber fiber_;
  std::optional<Eigen::VectorXd> x_start_, x_end_;
  std::vector<Expr> dyn_x_, dyn_u_, cost_x_, cost_u_;  // first derivatives
  std::vector<Expr> dyn_uu_, cost_uu_;                 // control Hessians
};

/// Velocity and cost rate at (t, x, u); throws ValidationError when u leaves
/// the fiber (tolerance 1e-12) and NumericalError on non-finite values.
std::pair<Eigen::VectorXd, double> dynamics_at(const ControlProblem& problem, double t,
                                               const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& u);

/// Exact symbolic Jacobians of the dynamics and cost at (t, x, u).
SystemJacobians jacobians_at(const ControlProblem& problem, double t,
                             const Eigen::VectorXd& x, const Eigen::VectorXd& u);

// --- piecewise control --------------------------------------------------------

/// Control defined piecewise over a = a0 < a1 < ... < al = b; piece i covers
/// (a_{i-1}, a_i] and each piece is control_dim expressions in the single
/// variable t. The value at an interior breakpoint comes from the piece
/// ending there; the value at a comes from the first piece.
class PiecewiseControl {
 public:
  PiecewiseControl(std::vector<double> breakpoints,
                   std::vector<std::vector<Expr>> pieces);

  static PiecewiseControl from_spec(const ControlSpec& spec, int control_dim);
  static PiecewiseControl constants(double t_start, double t_end,
                                    const Eigen::VectorXd& u);
  /// Single piece over [t_start, t_end] given by expression strings in t.
  static PiecewiseControl from_expressions(double t_start, double t_end,
                                           const std::vector<std::string>& exprs);

  int control_dim() const { return static_cast<int>(pieces_[0].size()); }
  std::size_t piece_count() const { return pieces_.size(); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<Expr>& piece(std::size_t i) const { return pieces_[i]; }

  /// Value with the left-limit convention described above.
  Eigen::VectorXd value(double t) const;
  Eigen::VectorXd value_on_piece(std::size_t i, double t) const;

  /// Index of the piece whose half-open interval [a_{i-1}, a_i) contains t;
  /// used when t is the start of an integration step.
  std::size_t piece_for_step_start(double t) const;

 private:
  std::vector<double> breakpoints_;
  std::vector<std::vector<Expr>> pieces_;
};

// --- composite flow schedule ---------------------------------------------------

/// One leg of a composite flow: run the dynamics under this control for the
/// given duration. The control is either a constant vector or expressions in
/// absolute time t.
struct FlowLeg {
  std::variant<Eigen::VectorXd, std::vector<Expr>> control;
  double duration = 0.0;
};

struct CompositeFlowSchedule {
  std::vector<FlowLeg> legs;

  double total_duration() const;
};

/// Schedule validation against a problem: durations nonnegative, leg control
/// dimensions matching, total duration within the horizon.
std::vector<Diagnostic> validate(const ControlProblem& problem,
                                 const CompositeFlowSchedule& schedule);

// --- catalog --------------------------------------------------------------------

std::vector<std::string> catalog_names();
ControlProblem catalog(const std::string& name);
ProblemSpec catalog_spec(const std::string& name);

}  // namespace extremalkit
