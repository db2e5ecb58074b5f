#include "extremalkit/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace extremalkit {

namespace {

// Stage data of one classical RK4 step on (state, cost). Transport reuses the
// stage states and controls so its variational matrices see exactly the
// arithmetic that produced the trajectory.
struct Rk4Step {
  double t = 0.0, h = 0.0;
  Eigen::VectorXd x_stage[4];
  Eigen::VectorXd u_stage[4];
  Eigen::VectorXd k_stage[4];
  double rate_stage[4] = {0, 0, 0, 0};
  Eigen::VectorXd x_next;
  double cost_next = 0.0;
};

class StageEvaluator {
 public:
  StageEvaluator(const ControlProblem& problem, const PiecewiseControl& control)
      : problem_(problem), control_(control) {}

  Eigen::VectorXd control_at(std::size_t piece, double t) const {
    return control_.value_on_piece(piece, t);
  }

  void velocity(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                Eigen::VectorXd& dx, double& rate) const {
    problem_.pack(t, x, u, scratch_);
    dx.resize(problem_.state_dim());
    for (int i = 0; i < problem_.state_dim(); ++i) {
      dx[i] = problem_.dynamics_expr(i).eval(scratch_);
    }
    rate = problem_.cost_expr().eval(scratch_);
  }

  const ControlProblem& problem() const { return problem_; }

 private:
  const ControlProblem& problem_;
  const PiecewiseControl& control_;
  mutable std::vector<double> scratch_;
};

Rk4Step rk4_step(const StageEvaluator& eval, std::size_t piece, double t, double h,
                 const Eigen::VectorXd& x, double cost) {
  Rk4Step s;
  s.t = t;
  s.h = h;
  const double t_mid = t + h / 2.0;
  const double t_end = t + h;

  s.x_stage[0] = x;
  s.u_stage[0] = eval.control_at(piece, t);
  eval.velocity(t, s.x_stage[0], s.u_stage[0], s.k_stage[0], s.rate_stage[0]);

  s.x_stage[1] = x + (h / 2.0) * s.k_stage[0];
  s.u_stage[1] = eval.control_at(piece, t_mid);
  eval.velocity(t_mid, s.x_stage[1], s.u_stage[1], s.k_stage[1], s.rate_stage[1]);

  s.x_stage[2] = x + (h / 2.0) * s.k_stage[1];
  s.u_stage[2] = s.u_stage[1];
  eval.velocity(t_mid, s.x_stage[2], s.u_stage[2], s.k_stage[2], s.rate_stage[2]);

  s.x_stage[3] = x + h * s.k_stage[2];
  s.u_stage[3] = eval.control_at(piece, t_end);
  eval.velocity(t_end, s.x_stage[3], s.u_stage[3], s.k_stage[3], s.rate_stage[3]);

  s.x_next = x + (h / 6.0) * (s.k_stage[0] + 2.0 * s.k_stage[1] + 2.0 * s.k_stage[2] +
                              s.k_stage[3]);
  s.cost_next = cost + (h / 6.0) * (s.rate_stage[0] + 2.0 * s.rate_stage[1] +
                                    2.0 * s.rate_stage[2] + s.rate_stage[3]);
  return s;
}

// Grid construction: every piece gets a uniform subgrid whose step is as
// close to the nominal one as possible, so breakpoints land exactly on nodes.
Trajectory integrate_impl(const ControlProblem& problem, const PiecewiseControl& control,
                          const Eigen::VectorXd& x0, double nominal_step) {
  if (x0.size() != problem.state_dim()) {
    throw ValidationError("initial state has wrong dimension");
  }
  if (control.control_dim() != problem.control_dim()) {
    throw ValidationError("control dimension does not match the problem");
  }
  if (!(nominal_step > 0.0) || !std::isfinite(nominal_step)) {
    throw ValidationError("integration step must be positive");
  }

  StageEvaluator eval(problem, control);
  const auto& bp = control.breakpoints();

  Trajectory traj;
  traj.source = std::make_shared<const PiecewiseControl>(control);
  traj.time.push_back(bp.front());
  traj.state.push_back(x0);
  traj.cost.push_back(0.0);
  traj.breakpoints.push_back(0);

  const Eigen::VectorXd u0 = control.value_on_piece(0, bp.front());
  if (!fiber_contains(problem.fiber(), u0)) {
    throw ValidationError("control value outside the fiber at t = " +
                          std::to_string(bp.front()));
  }
  traj.control.push_back(u0);

  for (std::size_t p = 0; p + 1 < bp.size(); ++p) {
    const double s = bp[p];
    const double e = bp[p + 1];
    const double len = e - s;
    const auto n = std::max<long long>(1, std::llround(len / nominal_step));
    for (long long q = 1; q <= n; ++q) {
      const double t0 = traj.time.back();
      const double t1 = q == n ? e : s + len * static_cast<double>(q) / static_cast<double>(n);
      const double h = t1 - t0;
      Rk4Step step = rk4_step(eval, p, t0, h, traj.state.back(), traj.cost.back());
      if (!step.x_next.allFinite() || !std::isfinite(step.cost_next)) {
        throw NumericalError("trajectory left the finite range near t = " +
                             std::to_string(t1));
      }
      const Eigen::VectorXd u = control.value_on_piece(p, t1);
      if (!fiber_contains(problem.fiber(), u)) {
        throw ValidationError("control value outside the fiber at t = " + std::to_string(t1));
      }
      traj.piece_of_step.push_back(p);
      traj.time.push_back(t1);
      traj.state.push_back(std::move(step.x_next));
      traj.cost.push_back(step.cost_next);
      traj.control.push_back(u);
    }
    traj.breakpoints.push_back(traj.time.size() - 1);
  }
  return traj;
}

}  // namespace

std::size_t Trajectory::index_of_time(double t) const {
  auto it = std::lower_bound(time.begin(), time.end(), t);
  const double tol = 1e-9 * (1.0 + std::fabs(t));
  std::size_t best = time.size();
  double best_err = tol;
  for (auto probe : {it, it == time.begin() ? it : std::prev(it)}) {
    if (probe != time.end()) {
      double err = std::fabs(*probe - t);
      if (err <= best_err) {
        best_err = err;
        best = static_cast<std::size_t>(probe - time.begin());
      }
    }
  }
  if (best == time.size()) {
    throw ValidationError("time " + std::to_string(t) + " is not on the trajectory grid");
  }
  return best;
}

Trajectory integrate(const ControlProblem& problem, const PiecewiseControl& control,
                     const Eigen::VectorXd& x0, const IntegrationOptions& options) {
  if (options.steps < 1) throw ValidationError("step count must be positive");
  const auto& bp = control.breakpoints();
  const double tol = 1e-9 * (1.0 + problem.horizon());
  if (std::fabs(bp.front() - problem.t_start()) > tol ||
      std::fabs(bp.back() - problem.t_end()) > tol) {
    throw ValidationError("control breakpoints must span the problem horizon");
  }
  return integrate_impl(problem, control, x0, problem.horizon() / options.steps);
}

Trajectory composite_flow(const ControlProblem& problem,
                          const CompositeFlowSchedule& schedule,
                          const Eigen::VectorXd& x0, const IntegrationOptions& options,
                          bool allow_stretch) {
  if (options.steps < 1) throw ValidationError("step count must be positive");
  for (const auto& leg : schedule.legs) {
    if (!(leg.duration >= 0.0) || !std::isfinite(leg.duration)) {
      throw ValidationError("schedule legs need finite nonnegative durations");
    }
  }
  const double total = schedule.total_duration();
  if (!allow_stretch &&
      total > problem.horizon() + 1e-9 * (1.0 + problem.horizon())) {
    throw ValidationError("schedule duration exceeds the horizon");
  }

  // Fold the legs into one piecewise control over [a, a + total]; legs of
  // zero duration contribute nothing to the flow.
  std::vector<double> breakpoints{problem.t_start()};
  std::vector<std::vector<Expr>> pieces;
  for (const auto& leg : schedule.legs) {
    const double t_next = breakpoints.back() + leg.duration;
    if (!(t_next > breakpoints.back())) continue;
    std::vector<Expr> piece;
    if (const auto* u = std::get_if<Eigen::VectorXd>(&leg.control)) {
      if (u->size() != problem.control_dim()) {
        throw ValidationError("schedule leg control dimension mismatch");
      }
      for (Eigen::Index i = 0; i < u->size(); ++i) piece.push_back(Expr::constant((*u)[i]));
    } else {
      piece = std::get<std::vector<Expr>>(leg.control);
      if (static_cast<int>(piece.size()) != problem.control_dim()) {
        throw ValidationError("schedule leg control dimension mismatch");
      }
    }
    breakpoints.push_back(t_next);
    pieces.push_back(std::move(piece));
  }

  if (pieces.empty()) {
    // Degenerate schedule: the composite flow is the identity at x0.
    Trajectory traj;
    traj.time.push_back(problem.t_start());
    traj.state.push_back(x0);
    traj.cost.push_back(0.0);
    traj.breakpoints.push_back(0);
    Eigen::VectorXd u;
    if (!schedule.legs.empty()) {
      const auto& leg = schedule.legs.back();
      if (const auto* cu = std::get_if<Eigen::VectorXd>(&leg.control)) {
        u = *cu;
      } else {
        PiecewiseControl tmp({problem.t_start(), problem.t_start() + 1.0},
                             {std::get<std::vector<Expr>>(leg.control)});
        u = tmp.value_on_piece(0, problem.t_start());
      }
    } else {
      u = Eigen::VectorXd::Zero(problem.control_dim());
    }
    traj.control.push_back(u);
    return traj;
  }

  PiecewiseControl folded(std::move(breakpoints), std::move(pieces));
  return integrate_impl(problem, folded, x0, problem.horizon() / options.steps);
}

std::pair<Eigen::VectorXd, double> replay_step(const ControlProblem& problem,
                                               const Trajectory& traj, std::size_t j) {
  if (!traj.source) {
    throw ValidationError("trajectory does not carry a replayable control");
  }
  if (j + 1 >= traj.node_count()) {
    throw ValidationError("replay_step index out of range");
  }
  StageEvaluator eval(problem, *traj.source);
  Rk4Step s = rk4_step(eval, traj.piece_of_step[j], traj.time[j],
                       traj.time[j + 1] - traj.time[j], traj.state[j], traj.cost[j]);
  return {s.x_next, s.cost_next};
}

namespace {

// Shared driver for plain and extended transports.
std::vector<Eigen::MatrixXd> transport_path_impl(const ControlProblem& problem,
                                                 const Trajectory& traj, double t0,
                                                 double t1, bool extended) {
  if (!traj.source) {
    throw ValidationError("trajectory does not carry a replayable control");
  }
  const std::size_t j0 = traj.index_of_time(t0);
  const std::size_t j1 = traj.index_of_time(t1);
  if (j0 > j1) throw ValidationError("transport requires t0 <= t1");

  const int d = problem.state_dim();
  const int n = extended ? d + 1 : d;
  StageEvaluator eval(problem, *traj.source);
  std::vector<double> scratch;

  // Variational coefficient at one stage: plain transports use the state
  // Jacobian A; extended ones append the cost-gradient row and a zero column
  // so the last column of the operator stays exactly e_{d+1}.
  auto coefficient = [&](double t, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u) -> Eigen::MatrixXd {
    problem.pack(t, x, u, scratch);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < d; ++i) {
      for (int jj = 0; jj < d; ++jj) {
        A(i, jj) = problem.dynamics_x_expr(i, jj).eval(scratch);
      }
    }
    if (extended) {
      for (int jj = 0; jj < d; ++jj) {
        A(d, jj) = problem.cost_x_expr(jj).eval(scratch);
      }
    }
    return A;
  };

  std::vector<Eigen::MatrixXd> path;
  path.reserve(j1 - j0 + 1);
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
  path.push_back(M);

  for (std::size_t j = j0; j < j1; ++j) {
    const double h = traj.time[j + 1] - traj.time[j];
    Rk4Step s = rk4_step(eval, traj.piece_of_step[j], traj.time[j], h, traj.state[j],
                         traj.cost[j]);
    const Eigen::MatrixXd A1 = coefficient(s.t, s.x_stage[0], s.u_stage[0]);
    const Eigen::MatrixXd A2 = coefficient(s.t + h / 2.0, s.x_stage[1], s.u_stage[1]);
    const Eigen::MatrixXd A3 = coefficient(s.t + h / 2.0, s.x_stage[2], s.u_stage[2]);
    const Eigen::MatrixXd A4 = coefficient(s.t + h, s.x_stage[3], s.u_stage[3]);

    const Eigen::MatrixXd K1 = A1 * M;
    const Eigen::MatrixXd K2 = A2 * (M + (h / 2.0) * K1);
    const Eigen::MatrixXd K3 = A3 * (M + (h / 2.0) * K2);
    const Eigen::MatrixXd K4 = A4 * (M + h * K3);
    M += (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
    if (!M.allFinite()) {
      throw NumericalError("transport matrix left the finite range near t = " +
                           std::to_string(traj.time[j + 1]));
    }
    path.push_back(M);
  }
  return path;
}

}  // namespace

TransportOperator transport(const ControlProblem& problem, const Trajectory& traj,
                            double t0, double t1) {
  auto path = transport_path_impl(problem, traj, t0, t1, false);
  return TransportOperator{t0, t1, path.back(), false};
}

std::vector<Eigen::MatrixXd> transport_path(const ControlProblem& problem,
                                            const Trajectory& traj, double t0, double t1) {
  return transport_path_impl(problem, traj, t0, t1, false);
}

TransportOperator extended_transport(const ControlProblem& problem,
                                     const Trajectory& traj, double t0, double t1) {
  auto path = transport_path_impl(problem, traj, t0, t1, true);
  return TransportOperator{t0, t1, path.back(), true};
}

std::vector<Eigen::VectorXd> adjoint_transport(const ControlProblem& problem,
                                               const Trajectory& traj,
                                               const Eigen::VectorXd& eta_end,
                                               double lambda, double t_hi, double t_lo) {
  if (!traj.source) {
    throw ValidationError("trajectory does not carry a replayable control");
  }
  if (eta_end.size() != problem.state_dim()) {
    throw ValidationError("adjoint seed has wrong dimension");
  }
  const std::size_t j_lo = traj.index_of_time(t_lo);
  const std::size_t j_hi = traj.index_of_time(t_hi);
  if (j_lo > j_hi) throw ValidationError("adjoint_transport requires t_lo <= t_hi");

  const int d = problem.state_dim();
  const auto& control = *traj.source;
  std::vector<double> scratch;
  Eigen::VectorXd dx(d);
  double rate = 0.0;

  StageEvaluator eval(problem, control);

  // Right-hand side of the adjoint equation at an arbitrary time, with the
  // state rebuilt by cubic Hermite interpolation between the bracketing nodes.
  auto rhs = [&](std::size_t step, double t, const Eigen::VectorXd& eta) -> Eigen::VectorXd {
    const double ta = traj.time[step];
    const double tb = traj.time[step + 1];
    const double h = tb - ta;
    const std::size_t piece = traj.piece_of_step[step];
    Eigen::VectorXd x;
    if (t == ta) {
      x = traj.state[step];
    } else if (t == tb) {
      x = traj.state[step + 1];
    } else {
      const Eigen::VectorXd ua = control.value_on_piece(piece, ta);
      const Eigen::VectorXd ub = control.value_on_piece(piece, tb);
      eval.velocity(ta, traj.state[step], ua, dx, rate);
      Eigen::VectorXd fa = dx;
      eval.velocity(tb, traj.state[step + 1], ub, dx, rate);
      Eigen::VectorXd fb = dx;
      const double s = (t - ta) / h;
      const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
      const double h10 = s * (1 - s) * (1 - s);
      const double h01 = s * s * (3 - 2 * s);
      const double h11 = s * s * (s - 1);
      x = h00 * traj.state[step] + (h10 * h) * fa + h01 * traj.state[step + 1] +
          (h11 * h) * fb;
    }
    const Eigen::VectorXd u = control.value_on_piece(piece, t);
    problem.pack(t, x, u, scratch);
    Eigen::VectorXd out(d);
    for (int i = 0; i < d; ++i) {
      double acc = 0.0;
      for (int jj = 0; jj < d; ++jj) {
        acc += problem.dynamics_x_expr(jj, i).eval(scratch) * eta[jj];
      }
      out[i] = -acc - lambda * problem.cost_x_expr(i).eval(scratch);
    }
    return out;
  };

  std::vector<Eigen::VectorXd> path(j_hi - j_lo + 1);
  Eigen::VectorXd eta = eta_end;
  path.back() = eta;
  for (std::size_t j = j_hi; j-- > j_lo;) {
    const double ta = traj.time[j];
    const double tb = traj.time[j + 1];
    const double h = tb - ta;
    const double tm = ta + h / 2.0;
    const Eigen::VectorXd k1 = rhs(j, tb, eta);
    const Eigen::VectorXd k2 = rhs(j, tm, eta - (h / 2.0) * k1);
    const Eigen::VectorXd k3 = rhs(j, tm, eta - (h / 2.0) * k2);
    const Eigen::VectorXd k4 = rhs(j, ta, eta - h * k3);
    eta -= (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!eta.allFinite()) {
      throw NumericalError("adjoint left the finite range near t = " + std::to_string(ta));
    }
    path[j - j_lo] = eta;
  }
  return path;
}

Eigen::MatrixXd fd_flow_oracle(const ControlProblem& problem,
                               const PiecewiseControl& control,
                               const Eigen::VectorXd& x0, double eps,
                               const IntegrationOptions& options) {
  if (!(eps > 0.0)) throw ValidationError("finite-difference step must be positive");
  const int d = problem.state_dim();
  Eigen::MatrixXd J(d, d);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd xp = x0, xm = x0;
    xp[i] += eps;
    xm[i] -= eps;
    const Eigen::VectorXd fp = integrate(problem, control, xp, options).final_state();
    const Eigen::VectorXd fm = integrate(problem, control, xm, options).final_state();
    J.col(i) = (fp - fm) / (2.0 * eps);
  }
  return J;
}

Eigen::MatrixXd fd_flow_oracle(const ControlProblem& problem,
                               const CompositeFlowSchedule& schedule,
                               const Eigen::VectorXd& x0, double eps,
                               const IntegrationOptions& options) {
  if (!(eps > 0.0)) throw ValidationError("finite-difference step must be positive");
  const int d = problem.state_dim();
  Eigen::MatrixXd J(d, d);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd xp = x0, xm = x0;
    xp[i] += eps;
    xm[i] -= eps;
    const Eigen::VectorXd fp =
        composite_flow(problem, schedule, xp, options).final_state();
    const Eigen::VectorXd fm =
        composite_flow(problem, schedule, xm, options).final_state();
    J.col(i) = (fp - fm) / (2.0 * eps);
  }
  return J;
}

void write_csv(const Trajectory& traj, std::ostream& out) {
  const int d = static_cast<int>(traj.state.front().size());
  const int k = static_cast<int>(traj.control.front().size());
  out << "t";
  for (int i = 1; i <= d; ++i) out << ",x" << i;
  for (int i = 1; i <= k; ++i) out << ",u" << i;
  out << ",J\n";
  char buf[40];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (std::size_t j = 0; j < traj.node_count(); ++j) {
    emit(traj.time[j]);
    for (int i = 0; i < d; ++i) {
      out << ',';
      emit(traj.state[j][i]);
    }
    for (int i = 0; i < k; ++i) {
      out << ',';
      emit(traj.control[j][i]);
    }
    out << ',';
    emit(traj.cost[j]);
    out << '\n';
  }
}

}  // namespace extremalkit
