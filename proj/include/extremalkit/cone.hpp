#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "extremalkit/errors.hpp"

namespace extremalkit {

/// Finitely generated convex cone { sum_i lambda_i g_i : lambda_i >= 0 }.
/// Zero generators are dropped at construction and counted.
struct Cone {
  int ambient = 0;
  std::vector<Eigen::VectorXd> generators;
  int dropped_zero_generators = 0;
};

Cone make_cone(int ambient, std::vector<Eigen::VectorXd> generators);

/// Dimension of the linear span of the generators (QR with column pivoting;
/// pivots below 1e-10 of the largest count as zero).
int dimension(const Cone& cone);

/// Membership test, exact up to tolerance 1e-9 * (1 + |v|): is v a
/// nonnegative combination of the generators? Solved as a phase-1 LP.
bool contains(const Cone& cone, const Eigen::VectorXd& v);

/// A covector eta != 0 with <eta, g_i> <= 0 for all generators and
/// <eta, v> > 0, i.e. a hyperplane separating v from the closure of the
/// cone; absent exactly when v lies in the closure (up to tolerance).
std::optional<Eigen::VectorXd> separating_covector(const Cone& cone,
                                                   const Eigen::VectorXd& v);

/// A properness witness: eta != 0 with <eta, g_i> <= 0 for all i, absent
/// exactly when the cone's closure is the whole space.
std::optional<Eigen::VectorXd> separating_covector(const Cone& cone);

/// True iff the cone is full-dimensional and v stays inside when nudged by
/// +-delta along every axis, delta = 1e-6 * max(1, |v|, max |g_i|).
bool in_interior(const Cone& cone, const Eigen::VectorXd& v);

/// Generators of the dual cone { eta : <eta, g_i> <= 0 for all i }, computed
/// by the double-description method seeded from the unit box. Returns a
/// minimal generating set normalized to unit max-norm (extreme rays when the
/// dual cone is pointed); empty exactly when the dual cone is {0}. Requires
/// ambient dimension <= 8.
std::vector<Eigen::VectorXd> dual_rays(const Cone& cone);

namespace detail {

/// Dense two-phase simplex with Bland's rule for
///   min c^T x   s.t.  A x = b,  x >= 0.
/// `duals` carries the equality multipliers of the original rows.
struct LpOutcome {
  bool feasible = false;
  bool bounded = true;
  double objective = 0.0;
  double infeasibility = 0.0;  // phase-1 residual; feasible iff ~0
  Eigen::VectorXd x;
  Eigen::VectorXd duals;
};

LpOutcome solve_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                   const Eigen::VectorXd& c);

}  // namespace detail

}  // namespace extremalkit
