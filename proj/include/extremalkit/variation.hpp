#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "extremalkit/cone.hpp"
#include "extremalkit/flow.hpp"
#include "extremalkit/problem.hpp"

namespace extremalkit {

/// A needle variation at a grid time tau in (a, b]: either run an alternate
/// constant control for a short burst (AltControl) or shorten the reference
/// leg that ends at tau (ReverseLeg). The weight scales the burst length.
enum class NeedleKind { AltControl, ReverseLeg };

struct NeedleSpec {
  double tau = 0.0;
  NeedleKind kind = NeedleKind::AltControl;
  Eigen::VectorXd alt_control;  // AltControl only
  double weight = 1.0;
};

/// Deterministic sampling plan for cone construction: needle times are
/// stratified over the grid nodes in (a, b], and alternate controls are drawn
/// from the fiber (all points of a finite grid; Latin hypercube in a box;
/// Gaussians at spreads 0.5, 1, 2 around the reference value when
/// unconstrained).
struct SamplingConfig {
  int time_samples = 64;
  int fiber_samples = 64;
  unsigned long long seed = 0;
};

/// First-order endpoint displacement of a single needle: the alternate
/// velocity (AltControl) or the negated reference velocity (ReverseLeg) at
/// tau, transported to the final time and scaled by the weight.
Eigen::VectorXd needle_vector(const ControlProblem& problem, const Trajectory& traj,
                              const NeedleSpec& spec);

/// Transported velocity difference rho(tau, x, u_alt) - rho(tau, x, u(tau)).
Eigen::VectorXd vertical_needle_vector(const ControlProblem& problem,
                                       const Trajectory& traj, double tau,
                                       const Eigen::VectorXd& u_alt);

/// Same displacement on (state, accumulated cost): the extended transport
/// applied to the velocity and cost-rate differences. Size d + 1.
Eigen::VectorXd extended_vertical_needle(const ControlProblem& problem,
                                         const Trajectory& traj, double tau,
                                         const Eigen::VectorXd& u_alt);

/// Cone in R^d generated by sampled vertical needle vectors.
Cone vertical_cone(const ControlProblem& problem, const Trajectory& traj,
                   const SamplingConfig& cfg = {});

/// Cone in R^{d+1} generated by the same samples' extended needle vectors
/// (last coordinate = cost displacement).
Cone extended_vertical_cone(const ControlProblem& problem, const Trajectory& traj,
                            const SamplingConfig& cfg = {});

/// Cone in R^{1+d} of full tangent vectors with their time components:
/// (+1, transported alternate velocity) and (-1, negated transported
/// reference velocity).
Cone variational_cone(const ControlProblem& problem, const Trajectory& traj,
                      const SamplingConfig& cfg = {});

/// Realize a family of needles as an executable composite flow: reference
/// legs are split at the needle times, AltControl needles insert constant
/// legs of duration eps * weight, and ReverseLeg needles shorten the leg
/// ending at tau by eps * weight. Needles must be sorted by tau with
/// ReverseLeg before AltControl at equal times. Returns the endpoint and its
/// accumulated cost; at eps = 0 these equal the reference values exactly.
std::pair<Eigen::VectorXd, double> multi_needle_endpoint(
    const ControlProblem& problem, const Eigen::VectorXd& x0, const Trajectory& traj,
    const std::vector<NeedleSpec>& needles, double eps,
    const IntegrationOptions& options = {});

}  // namespace extremalkit
