#include "extremalkit/problem.hpp"

#include <algorithm>
#include <cmath>

namespace extremalkit {

bool fiber_contains(const Fiber& fiber, const Eigen::VectorXd& u, double tol) {
  if (std::holds_alternative<UnconstrainedFiber>(fiber)) return true;
  if (const auto* box = std::get_if<BoxFiber>(&fiber)) {
    if (u.size() != box->lo.size()) return false;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (u[i] < box->lo[i] - tol || u[i] > box->hi[i] + tol) return false;
    }
    return true;
  }
  const auto& grid = std::get<GridFiber>(fiber);
  for (const auto& p : grid.points) {
    if (p.size() == u.size() && (u - p).lpNorm<Eigen::Infinity>() <= tol) return true;
  }
  return false;
}

namespace {

Fiber build_fiber(const FiberSpec& spec, int control_dim) {
  switch (spec.type) {
    case FiberSpec::Type::Unconstrained:
      return UnconstrainedFiber{};
    case FiberSpec::Type::Box: {
      if (static_cast<int>(spec.lo.size()) != control_dim ||
          static_cast<int>(spec.hi.size()) != control_dim) {
        throw ValidationError("box fiber bounds must have control dimension entries");
      }
      BoxFiber box;
      box.lo = Eigen::Map<const Eigen::VectorXd>(spec.lo.data(), control_dim);
      box.hi = Eigen::Map<const Eigen::VectorXd>(spec.hi.data(), control_dim);
      for (int i = 0; i < control_dim; ++i) {
        if (!(box.lo[i] < box.hi[i])) {
          throw ValidationError("box fiber requires lo < hi in every component");
        }
      }
      return box;
    }
    case FiberSpec::Type::Grid: {
      if (spec.points.empty()) {
        throw ValidationError("grid fiber requires at least one point");
      }
      GridFiber grid;
      for (const auto& p : spec.points) {
        if (static_cast<int>(p.size()) != control_dim) {
          throw ValidationError("grid fiber point has wrong dimension");
        }
        grid.points.push_back(Eigen::Map<const Eigen::VectorXd>(p.data(), control_dim));
      }
      return grid;
    }
  }
  throw ValidationError("unknown fiber type");
}

}  // namespace

ControlProblem::ControlProblem(const ProblemSpec& spec) : spec_(spec) {
  if (spec.state_dim < 1) throw ValidationError("state dimension must be at least 1");
  if (spec.control_dim < 1) throw ValidationError("control dimension must be at least 1");
  if (!std::isfinite(spec.t_start) || !std::isfinite(spec.t_end) ||
      !(spec.t_start < spec.t_end)) {
    throw ValidationError("horizon must be a finite nonempty interval");
  }
  d_ = spec.state_dim;
  k_ = spec.control_dim;
  t0_ = spec.t_start;
  t1_ = spec.t_end;
  vars_ = std::make_shared<const VarSet>(VarSet::for_problem(d_, k_));

  if (static_cast<int>(spec.dynamics.size()) != d_) {
    throw ValidationError("dynamics must provide exactly state_dim expressions");
  }
  const auto parse_or_invalid = [&](const std::string& text, const std::string& what) {
    try {
      return parse(text, vars_);
    } catch (const ParseError& e) {
      throw ValidationError(what + ": " + e.what());
    }
  };
  for (std::size_t i = 0; i < spec.dynamics.size(); ++i) {
    dyn_.push_back(parse_or_invalid(spec.dynamics[i], "dynamics[" + std::to_string(i) + "]"));
  }
  if (spec.cost.empty()) throw ValidationError("cost expression is required");
  cost_ = parse_or_invalid(spec.cost, "cost");

  fiber_ = build_fiber(spec.fiber, k_);

  auto load_endpoint = [&](const std::optional<std::vector<double>>& raw,
                           const char* which) -> std::optional<Eigen::VectorXd> {
    if (!raw) return std::nullopt;
    if (static_cast<int>(raw->size()) != d_) {
      throw ValidationError(std::string(which) + " must have state_dim entries");
    }
    return Eigen::Map<const Eigen::VectorXd>(raw->data(), d_);
  };
  x_start_ = load_endpoint(spec.x_start, "x_a");
  x_end_ = load_endpoint(spec.x_end, "x_b");

  // Differentiate everything once; evaluation later is pure lookup work.
  dyn_x_.reserve(static_cast<std::size_t>(d_) * d_);
  dyn_u_.reserve(static_cast<std::size_t>(d_) * k_);
  for (int i = 0; i < d_; ++i) {
    for (int j = 0; j < d_; ++j) dyn_x_.push_back(dyn_[i].derivative(vars_->name(1 + j)));
    for (int a = 0; a < k_; ++a)
      dyn_u_.push_back(dyn_[i].derivative(vars_->name(1 + d_ + a)));
  }
  for (int j = 0; j < d_; ++j) cost_x_.push_back(cost_.derivative(vars_->name(1 + j)));
  for (int a = 0; a < k_; ++a)
    cost_u_.push_back(cost_.derivative(vars_->name(1 + d_ + a)));

  for (int i = 0; i < d_; ++i) {
    for (int a = 0; a < k_; ++a) {
      const Expr& first = dynamics_u_expr(i, a);
      for (int b = 0; b < k_; ++b) {
        dyn_uu_.push_back(first.derivative(vars_->name(1 + d_ + b)));
      }
    }
  }
  for (int a = 0; a < k_; ++a) {
    const Expr& first = cost_u_expr(a);
    for (int b = 0; b < k_; ++b) {
      cost_uu_.push_back(first.derivative(vars_->name(1 + d_ + b)));
    }
  }
}

void ControlProblem::pack(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                          std::vector<double>& values) const {
  values.resize(static_cast<std::size_t>(1 + d_ + k_));
  values[0] = t;
  for (int i = 0; i < d_; ++i) values[1 + i] = x[i];
  for (int a = 0; a < k_; ++a) values[1 + d_ + a] = u[a];
}

std::pair<Eigen::VectorXd, double> dynamics_at(const ControlProblem& problem, double t,
                                               const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& u) {
  if (x.size() != problem.state_dim() || u.size() != problem.control_dim()) {
    throw ValidationError("dynamics_at: state or control dimension mismatch");
  }
  if (!fiber_contains(problem.fiber(), u)) {
    throw ValidationError("control value outside the fiber");
  }
  std::vector<double> values;
  problem.pack(t, x, u, values);
  Eigen::VectorXd velocity(problem.state_dim());
  for (int i = 0; i < problem.state_dim(); ++i) {
    velocity[i] = problem.dynamics_expr(i).eval(values);
  }
  double rate = problem.cost_expr().eval(values);
  return {velocity, rate};
}

SystemJacobians jacobians_at(const ControlProblem& problem, double t,
                             const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  if (x.size() != problem.state_dim() || u.size() != problem.control_dim()) {
    throw ValidationError("jacobians_at: state or control dimension mismatch");
  }
  const int d = problem.state_dim();
  const int k = problem.control_dim();
  std::vector<double> values;
  problem.pack(t, x, u, values);

  SystemJacobians out;
  out.dyn_x.resize(d, d);
  out.dyn_u.resize(d, k);
  out.cost_x.resize(d);
  out.cost_u.resize(k);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) out.dyn_x(i, j) = problem.dynamics_x_expr(i, j).eval(values);
    for (int a = 0; a < k; ++a) out.dyn_u(i, a) = problem.dynamics_u_expr(i, a).eval(values);
  }
  for (int j = 0; j < d; ++j) out.cost_x[j] = problem.cost_x_expr(j).eval(values);
  for (int a = 0; a < k; ++a) out.cost_u[a] = problem.cost_u_expr(a).eval(values);
  return out;
}

// --- validation of plain descriptions ---------------------------------------

namespace {

void check_expressions(const ProblemSpec& spec, std::vector<Diagnostic>& out) {
  VarSet vars = VarSet::for_problem(std::max(spec.state_dim, 0), std::max(spec.control_dim, 0));
  auto try_parse = [&](const std::string& text, const std::string& where) {
    try {
      parse(text, vars);
    } catch (const ParseError& e) {
      out.push_back({"expr-syntax", where + ": " + e.what()});
    }
  };
  for (std::size_t i = 0; i < spec.dynamics.size(); ++i) {
    try_parse(spec.dynamics[i], "dynamics[" + std::to_string(i) + "]");
  }
  if (spec.cost.empty()) {
    out.push_back({"cost-missing", "cost expression is required"});
  } else {
    try_parse(spec.cost, "cost");
  }
}

}  // namespace

std::vector<Diagnostic> validate(const ProblemSpec& spec) {
  std::vector<Diagnostic> out;
  if (spec.state_dim < 1) out.push_back({"state-dim", "state dimension must be at least 1"});
  if (spec.control_dim < 1)
    out.push_back({"control-dim", "control dimension must be at least 1"});
  if (!std::isfinite(spec.t_start) || !std::isfinite(spec.t_end) ||
      !(spec.t_start < spec.t_end)) {
    out.push_back({"horizon", "horizon must be a finite nonempty interval"});
  }
  if (static_cast<int>(spec.dynamics.size()) != spec.state_dim) {
    out.push_back({"dynamics-count", "dynamics must provide exactly state_dim expressions"});
  }
  check_expressions(spec, out);

  switch (spec.fiber.type) {
    case FiberSpec::Type::Unconstrained:
      break;
    case FiberSpec::Type::Box: {
      if (static_cast<int>(spec.fiber.lo.size()) != spec.control_dim ||
          static_cast<int>(spec.fiber.hi.size()) != spec.control_dim) {
        out.push_back({"fiber-box-dim", "box bounds must have control_dim entries"});
      } else {
        for (int i = 0; i < spec.control_dim; ++i) {
          if (!(spec.fiber.lo[i] < spec.fiber.hi[i])) {
            out.push_back({"fiber-box-order", "box bounds require lo < hi componentwise"});
            break;
          }
        }
      }
      break;
    }
    case FiberSpec::Type::Grid: {
      if (spec.fiber.points.empty()) {
        out.push_back({"fiber-grid-empty", "grid fiber requires at least one point"});
      }
      for (const auto& p : spec.fiber.points) {
        if (static_cast<int>(p.size()) != spec.control_dim) {
          out.push_back({"fiber-grid-dim", "grid fiber point has wrong dimension"});
          break;
        }
      }
      break;
    }
  }

  auto check_endpoint = [&](const std::optional<std::vector<double>>& v, const char* code,
                            const char* name) {
    if (v && static_cast<int>(v->size()) != spec.state_dim) {
      out.push_back({code, std::string(name) + " must have state_dim entries"});
    }
  };
  check_endpoint(spec.x_start, "x-a-dim", "x_a");
  check_endpoint(spec.x_end, "x-b-dim", "x_b");
  return out;
}

std::vector<Diagnostic> validate(const ProblemSpec& problem, const ControlSpec& control) {
  std::vector<Diagnostic> out = validate(problem);
  if (control.breakpoints.size() < 2) {
    out.push_back({"control-breakpoints", "control needs at least two breakpoints"});
    return out;
  }
  for (std::size_t i = 0; i + 1 < control.breakpoints.size(); ++i) {
    if (!(control.breakpoints[i] < control.breakpoints[i + 1])) {
      out.push_back({"control-order", "breakpoints must be strictly increasing"});
      break;
    }
  }
  const double tol = 1e-9 * (1.0 + std::fabs(problem.t_end - problem.t_start));
  if (std::fabs(control.breakpoints.front() - problem.t_start) > tol ||
      std::fabs(control.breakpoints.back() - problem.t_end) > tol) {
    out.push_back({"control-horizon", "control breakpoints must span the problem horizon"});
  }
  if (control.pieces.size() + 1 != control.breakpoints.size()) {
    out.push_back({"control-pieces", "piece count must be breakpoint count minus one"});
  }
  VarSet time_only(std::vector<std::string>{"t"});
  for (std::size_t i = 0; i < control.pieces.size(); ++i) {
    if (static_cast<int>(control.pieces[i].size()) != problem.control_dim) {
      out.push_back({"control-dim", "piece " + std::to_string(i) +
                                      " must provide control_dim expressions"});
      continue;
    }
    for (const auto& text : control.pieces[i]) {
      try {
        parse(text, time_only);
      } catch (const ParseError& e) {
        out.push_back({"control-expr", "piece " + std::to_string(i) + ": " + e.what()});
      }
    }
  }
  return out;
}

// --- piecewise control -------------------------------------------------------

PiecewiseControl::PiecewiseControl(std::vector<double> breakpoints,
                                   std::vector<std::vector<Expr>> pieces)
    : breakpoints_(std::move(breakpoints)), pieces_(std::move(pieces)) {
  if (breakpoints_.size() < 2) {
    throw ValidationError("piecewise control needs at least two breakpoints");
  }
  for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i] < breakpoints_[i + 1])) {
      throw ValidationError("piecewise control breakpoints must be strictly increasing");
    }
  }
  if (pieces_.size() + 1 != breakpoints_.size()) {
    throw ValidationError("piecewise control piece count must match breakpoints");
  }
  const std::size_t k = pieces_.front().size();
  if (k == 0) throw ValidationError("piecewise control pieces must be nonempty");
  for (const auto& piece : pieces_) {
    if (piece.size() != k) {
      throw ValidationError("all pieces must have the same control dimension");
    }
  }
}

PiecewiseControl PiecewiseControl::from_spec(const ControlSpec& spec, int control_dim) {
  VarSet time_only(std::vector<std::string>{"t"});
  auto vars = std::make_shared<const VarSet>(time_only);
  std::vector<std::vector<Expr>> pieces;
  for (const auto& piece : spec.pieces) {
    if (static_cast<int>(piece.size()) != control_dim) {
      throw ValidationError("control piece must provide control_dim expressions");
    }
    std::vector<Expr> exprs;
    exprs.reserve(piece.size());
    for (const auto& text : piece) {
      try {
        exprs.push_back(parse(text, vars));
      } catch (const ParseError& e) {
        throw ValidationError(std::string("control piece: ") + e.what());
      }
    }
    pieces.push_back(std::move(exprs));
  }
  return PiecewiseControl(spec.breakpoints, std::move(pieces));
}

PiecewiseControl PiecewiseControl::constants(double t_start, double t_end,
                                             const Eigen::VectorXd& u) {
  std::vector<Expr> piece;
  piece.reserve(static_cast<std::size_t>(u.size()));
  for (Eigen::Index i = 0; i < u.size(); ++i) piece.push_back(Expr::constant(u[i]));
  return PiecewiseControl({t_start, t_end}, {std::move(piece)});
}

PiecewiseControl PiecewiseControl::from_expressions(double t_start, double t_end,
                                                    const std::vector<std::string>& exprs) {
  ControlSpec spec;
  spec.breakpoints = {t_start, t_end};
  spec.pieces = {exprs};
  return PiecewiseControl::from_spec(spec, static_cast<int>(exprs.size()));
}

Eigen::VectorXd PiecewiseControl::value_on_piece(std::size_t i, double t) const {
  const auto& piece = pieces_.at(i);
  Eigen::VectorXd u(static_cast<Eigen::Index>(piece.size()));
  const double values[1] = {t};
  for (std::size_t a = 0; a < piece.size(); ++a) {
    u[static_cast<Eigen::Index>(a)] = piece[a].eval(std::span<const double>(values, 1));
  }
  return u;
}

Eigen::VectorXd PiecewiseControl::value(double t) const {
  if (t <= breakpoints_.front()) return value_on_piece(0, t);
  // Piece i covers (a_{i-1}, a_i]; upper_bound-1 lands on the piece ending at
  // or after t, so breakpoint values come from the piece that ends there.
  auto it = std::lower_bound(breakpoints_.begin() + 1, breakpoints_.end(), t);
  std::size_t idx = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  if (idx >= pieces_.size()) idx = pieces_.size() - 1;
  return value_on_piece(idx, t);
}

std::size_t PiecewiseControl::piece_for_step_start(double t) const {
  if (t >= breakpoints_.back()) return pieces_.size() - 1;
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  std::size_t idx = it == breakpoints_.begin()
                        ? 0
                        : static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  if (idx >= pieces_.size()) idx = pieces_.size() - 1;
  return idx;
}

// --- composite flow schedule ---------------------------------------------------

double CompositeFlowSchedule::total_duration() const {
  double total = 0.0;
  for (const auto& leg : legs) total += leg.duration;
  return total;
}

std::vector<Diagnostic> validate(const ControlProblem& problem,
                                 const CompositeFlowSchedule& schedule) {
  std::vector<Diagnostic> out;
  for (std::size_t i = 0; i < schedule.legs.size(); ++i) {
    const auto& leg = schedule.legs[i];
    if (!(leg.duration >= 0.0) || !std::isfinite(leg.duration)) {
      out.push_back({"leg-duration", "leg " + std::to_string(i) +
                                       " must have a finite nonnegative duration"});
    }
    if (const auto* u = std::get_if<Eigen::VectorXd>(&leg.control)) {
      if (u->size() != problem.control_dim()) {
        out.push_back({"leg-dim", "leg " + std::to_string(i) + " control dimension mismatch"});
      }
    } else {
      const auto& exprs = std::get<std::vector<Expr>>(leg.control);
      if (static_cast<int>(exprs.size()) != problem.control_dim()) {
        out.push_back({"leg-dim", "leg " + std::to_string(i) + " control dimension mismatch"});
      }
    }
  }
  const double total = schedule.total_duration();
  if (total > problem.horizon() + 1e-9 * (1.0 + problem.horizon())) {
    out.push_back({"schedule-duration", "total duration exceeds the horizon"});
  }
  return out;
}

// --- catalog --------------------------------------------------------------------

std::vector<std::string> catalog_names() {
  return {"lqr1d", "double_integrator", "heisenberg", "martinet"};
}

ProblemSpec catalog_spec(const std::string& name) {
  ProblemSpec spec;
  spec.t_start = 0.0;
  spec.t_end = 1.0;
  if (name == "lqr1d") {
    spec.state_dim = 1;
    spec.control_dim = 1;
    spec.dynamics = {"u1"};
    spec.cost = "0.5*u1^2";
    spec.x_start = std::vector<double>{0.0};
    spec.x_end = std::vector<double>{1.0};
    return spec;
  }
  if (name == "double_integrator") {
    spec.state_dim = 2;
    spec.control_dim = 1;
    spec.dynamics = {"x2", "u1"};
    spec.cost = "0.5*u1^2";
    return spec;
  }
  if (name == "heisenberg") {
    spec.state_dim = 3;
    spec.control_dim = 2;
    spec.dynamics = {"u1", "u2", "0.5*(x1*u2 - x2*u1)"};
    spec.cost = "0.5*(u1^2 + u2^2)";
    return spec;
  }
  if (name == "martinet") {
    spec.state_dim = 3;
    spec.control_dim = 2;
    spec.dynamics = {"u1", "u2", "0.5*x2^2*u1"};
    spec.cost = "0.5*(u1^2 + u2^2)";
    return spec;
  }
  throw ValidationError("unknown catalog problem: " + name);
}

ControlProblem catalog(const std::string& name) {
  return ControlProblem(catalog_spec(name));
}

}  // namespace extremalkit
