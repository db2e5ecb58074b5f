#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <memory>
#include <vector>

#include "extremalkit/problem.hpp"

namespace extremalkit {

struct IntegrationOptions {
  int steps = 1000;  // nominal step count over the problem horizon
};

/// Discrete trajectory on a time grid that is uniform within each control
/// piece and has every control breakpoint on a node. The running cost is
/// integrated alongside the state as an extra component, starting at 0.
/// Controls are stored with the left-limit convention: the value at an
/// interior breakpoint comes from the piece ending there.
struct Trajectory {
  std::vector<double> time;
  std::vector<Eigen::VectorXd> state;
  std::vector<Eigen::VectorXd> control;
  std::vector<double> cost;
  std::vector<std::size_t> breakpoints;    // node indices of piece boundaries
  std::vector<std::size_t> piece_of_step;  // control piece used on step j
  std::shared_ptr<const PiecewiseControl> source;  // control that generated it

  std::size_t node_count() const { return time.size(); }
  std::size_t step_count() const { return time.empty() ? 0 : time.size() - 1; }
  double t_start() const { return time.front(); }
  double t_end() const { return time.back(); }
  const Eigen::VectorXd& initial_state() const { return state.front(); }
  const Eigen::VectorXd& final_state() const { return state.back(); }
  double final_cost() const { return cost.back(); }

  /// Grid index of a node within relative tolerance 1e-9; throws
  /// ValidationError when t is not on the grid.
  std::size_t index_of_time(double t) const;
};

/// Linearization of the flow between two grid nodes: the matrix maps state
/// perturbations at t_from to state perturbations at t_to. Extended
/// operators additionally carry the accumulated-cost row; their last column
/// is exactly (0, ..., 0, 1).
struct TransportOperator {
  double t_from = 0.0;
  double t_to = 0.0;
  Eigen::MatrixXd matrix;
  bool extended = false;
};

/// Integrate the problem dynamics under a piecewise control with fixed-step
/// RK4. The control's breakpoints must span the problem horizon. No
/// integration step straddles a control discontinuity.
Trajectory integrate(const ControlProblem& problem, const PiecewiseControl& control,
                     const Eigen::VectorXd& x0, const IntegrationOptions& options = {});

/// Run the legs of a schedule in order (first leg first), starting at the
/// problem's initial time. With allow_stretch the total duration may exceed
/// the horizon, which needle insertions use; otherwise that is an error.
Trajectory composite_flow(const ControlProblem& problem,
                          const CompositeFlowSchedule& schedule,
                          const Eigen::VectorXd& x0,
                          const IntegrationOptions& options = {},
                          bool allow_stretch = false);

/// Re-run one RK4 step from the stored node j; returns the next (state, cost)
/// pair. Equals the stored values bitwise.
std::pair<Eigen::VectorXd, double> replay_step(const ControlProblem& problem,
                                               const Trajectory& traj, std::size_t j);

/// Linearized flow along the trajectory from node t0 to node t1 (t0 <= t1),
/// integrating the matrix variational equation jointly with a replay of the
/// state steps.
TransportOperator transport(const ControlProblem& problem, const Trajectory& traj,
                            double t0, double t1);

/// Transport matrices to every node between t0 and t1: element q maps
/// perturbations at t0 to node j0+q. Element 0 is the identity.
std::vector<Eigen::MatrixXd> transport_path(const ControlProblem& problem,
                                            const Trajectory& traj, double t0, double t1);

/// Extended transport on state + accumulated cost, shaped
///   [ M  0 ]
///   [ r  1 ]
/// where M is the plain transport and r accumulates the cost-gradient row.
TransportOperator extended_transport(const ControlProblem& problem,
                                     const Trajectory& traj, double t0, double t1);

/// Integrate the adjoint equation backward from t_hi to t_lo, starting at
/// eta_end. Returns the covector at every grid node from t_lo to t_hi
/// (ascending; back() == eta_end). States at internal RK4 stages are
/// reconstructed by cubic Hermite interpolation between the stored nodes.
std::vector<Eigen::VectorXd> adjoint_transport(const ControlProblem& problem,
                                               const Trajectory& traj,
                                               const Eigen::VectorXd& eta_end,
                                               double lambda, double t_hi, double t_lo);

/// Central finite-difference Jacobian of the endpoint map x0 -> x(b); an
/// independent check of transport.
Eigen::MatrixXd fd_flow_oracle(const ControlProblem& problem,
                               const PiecewiseControl& control,
                               const Eigen::VectorXd& x0, double eps,
                               const IntegrationOptions& options = {});
Eigen::MatrixXd fd_flow_oracle(const ControlProblem& problem,
                               const CompositeFlowSchedule& schedule,
                               const Eigen::VectorXd& x0, double eps,
                               const IntegrationOptions& options = {});

/// CSV dump with header t,x1..xd,u1..uk,J at 17 significant digits.
void write_csv(const Trajectory& traj, std::ostream& out);

}  // namespace extremalkit
