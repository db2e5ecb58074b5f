#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "extremalkit/cone.hpp"
#include "extremalkit/flow.hpp"
#include "extremalkit/problem.hpp"
#include "extremalkit/variation.hpp"

namespace extremalkit {

/// Covector path on a trajectory grid together with the cost multiplier.
/// Conventions: lambda <= 0 for minimizers, and (eta(t), lambda) must never
/// vanish.
struct Multiplier {
  double lambda = 0.0;
  std::vector<Eigen::VectorXd> eta;  // one covector per grid node
};

/// Pointwise pairing eta . f(t, x, u) + lambda L(t, x, u).
double hamiltonian(const ControlProblem& problem, double t, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& u, const Eigen::VectorXd& eta,
                   double lambda);

/// Residual report for a candidate multiplier along a trajectory.
struct MultiplierCheck {
  double adjoint_residual = 0.0;       // covector ODE, central differences
  double stationarity_residual = 0.0;  // |B^T eta + lambda L_u|, unconstrained
  bool stationarity_applicable = false;
  double maximization_margin = 0.0;  // max_t max_u' h(u') - h(u(t)) over draws
  double hamiltonian_scale = 0.0;    // max_t |h(t)| along the path
  double min_multiplier_norm = 0.0;  // min_t |(eta(t), lambda)|_inf
  bool nonvanishing = false;
  bool passes = false;
  double tol = 0.0;
  std::string search_region;  // where the maximization was probed
};

/// Check the three multiplier conditions at the grid resolution: adjoint
/// residual on smooth pieces, control stationarity (unconstrained fibers),
/// and Hamiltonian maximization against `fiber_samples` deterministic draws
/// per node. The margin is compared against tol * (1 + max |h|).
MultiplierCheck check_multiplier(const ControlProblem& problem, const Trajectory& traj,
                                 const Multiplier& mult, int fiber_samples,
                                 double tol);

/// Integrate the covector ODE backward from eta_b at the final time; lambda
/// rides along as a constant. (eta_b, lambda) must be nonzero.
Multiplier recover_multiplier(const ControlProblem& problem, const Trajectory& traj,
                              const Eigen::VectorXd& eta_b, double lambda);

/// One dual ray of the sampled extended cone, its recovered multiplier, and
/// the verification residuals.
struct WitnessReport {
  Eigen::VectorXd ray;      // raw dual ray in R^{d+1}, last entry = lambda part
  Eigen::VectorXd eta_b;    // final-time covector after normalization/cleanup
  double lambda = 0.0;
  bool polished = false;    // least-squares stationarity cleanup applied
  Multiplier multiplier;
  MultiplierCheck check;
  double hamiltonian_drift = 0.0;  // max_t |h(t) - h(a)| under this witness
};

struct ExtremalReport {
  bool is_extremal = false;
  bool is_normal = false;
  bool is_abnormal = false;
  bool is_strictly_abnormal = false;

  std::vector<WitnessReport> witnesses;
  std::vector<Eigen::VectorXd> dual_rays_extended;  // all rays of the dual

  int extended_cone_dimension = 0;
  int state_cone_dimension = 0;
  int dropped_zero_generators = 0;
  double max_neg_lambda = 0.0;     // LP value deciding is_normal
  bool boundary_within_tol = false;  // cost direction sits on the boundary
  double max_stationarity_residual = 0.0;
  double max_maximization_violation = 0.0;
  double hamiltonian_drift = 0.0;

  SamplingConfig sampling;
  double tol = 0.0;
  std::string note;
};

/// Classify the trajectory by sampling its extended displacement cone
/// (state + cost), testing the cost direction against it, and re-verifying
/// every dual ray as a multiplier through the covector ODE. Verdicts are
/// sampling-relative: "not extremal" is certified by an interior point,
/// "extremal" is falsifiable by denser sampling.
ExtremalReport classify_extremal(const ControlProblem& problem, const Trajectory& traj,
                                 const SamplingConfig& cfg = {}, double tol = 1e-9);

/// Forward integration of the Hamiltonian system with the fiber maximizer
/// solved at every stage (Newton for unconstrained/box fibers, enumeration
/// for finite grids).
struct HamiltonianFlow {
  Trajectory trajectory;
  Multiplier multiplier;
  double initial_hamiltonian = 0.0;
  double hamiltonian_drift = 0.0;  // max_t |h(t) - h(a)|
};

HamiltonianFlow integrate_normal_hamiltonian(const ControlProblem& problem,
                                             const Eigen::VectorXd& x0,
                                             const Eigen::VectorXd& p0, double lambda,
                                             const IntegrationOptions& options = {});

}  // namespace extremalkit
