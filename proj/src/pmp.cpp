#include "extremalkit/pmp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <utility>
#include <variant>

namespace extremalkit {

namespace {

constexpr double kWitnessResidualTol = 1e-5;

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

// Deterministic draws for the maximization probe (fixed internal seed so the
// check itself is a pure function of its arguments).
class DrawRng {
 public:
  explicit DrawRng(unsigned long long seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::vector<Eigen::VectorXd> fiber_draws(const Fiber& fiber,
                                         const Eigen::VectorXd& u_ref, int count,
                                         DrawRng& rng) {
  std::vector<Eigen::VectorXd> out;
  const auto k = u_ref.size();
  if (const auto* grid = std::get_if<GridFiber>(&fiber)) {
    return grid->points;
  }
  if (const auto* box = std::get_if<BoxFiber>(&fiber)) {
    for (int s = 0; s < count; ++s) {
      Eigen::VectorXd u(k);
      for (Eigen::Index j = 0; j < k; ++j) {
        u[j] = box->lo[j] + rng.uniform() * (box->hi[j] - box->lo[j]);
      }
      out.push_back(std::move(u));
    }
    return out;
  }
  static constexpr double kSpreads[] = {0.5, 1.0, 2.0};
  for (int s = 0; s < count; ++s) {
    Eigen::VectorXd u(k);
    const double spread = kSpreads[s % 3];
    for (Eigen::Index j = 0; j < k; ++j) u[j] = u_ref[j] + spread * rng.gaussian();
    out.push_back(std::move(u));
  }
  return out;
}

std::string search_region_text(const Fiber& fiber) {
  if (std::holds_alternative<GridFiber>(fiber)) {
    return "all control grid points";
  }
  if (std::holds_alternative<BoxFiber>(fiber)) {
    return "uniform draws in the control box";
  }
  return "Gaussian draws at spreads 0.5/1/2 around the reference control";
}

}  // namespace

double hamiltonian(const ControlProblem& problem, double t, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& u, const Eigen::VectorXd& eta,
                   double lambda) {
  if (eta.size() != problem.state_dim()) {
    throw ValidationError("covector has wrong dimension");
  }
  const auto [vel, rate] = dynamics_at(problem, t, x, u);
  const double h = eta.dot(vel) + lambda * rate;
  if (!std::isfinite(h)) {
    throw NumericalError("Hamiltonian evaluated to a non-finite value");
  }
  return h;
}

MultiplierCheck check_multiplier(const ControlProblem& problem, const Trajectory& traj,
                                 const Multiplier& mult, int fiber_samples,
                                 double tol) {
  const int d = problem.state_dim();
  if (mult.eta.size() != traj.node_count()) {
    throw ValidationError("covector path does not match the trajectory grid");
  }
  for (const auto& e : mult.eta) {
    if (e.size() != d) throw ValidationError("covector has wrong dimension");
  }
  if (fiber_samples < 0) throw ValidationError("sample count must be nonnegative");

  MultiplierCheck rep;
  rep.tol = tol;
  rep.search_region = search_region_text(problem.fiber());

  double min_norm = std::numeric_limits<double>::infinity();
  for (const auto& e : mult.eta) {
    min_norm = std::min(min_norm, std::max(inf_norm(e), std::abs(mult.lambda)));
  }
  rep.min_multiplier_norm = min_norm;
  rep.nonvanishing = min_norm > tol;

  // Covector ODE residual with central differences, interior to each piece.
  for (std::size_t b = 0; b + 1 < traj.breakpoints.size(); ++b) {
    const std::size_t n0 = traj.breakpoints[b];
    const std::size_t n1 = traj.breakpoints[b + 1];
    for (std::size_t j = n0 + 1; j < n1; ++j) {
      const double dt = traj.time[j + 1] - traj.time[j - 1];
      const Eigen::VectorXd etadot = (mult.eta[j + 1] - mult.eta[j - 1]) / dt;
      const SystemJacobians jac =
          jacobians_at(problem, traj.time[j], traj.state[j], traj.control[j]);
      const Eigen::VectorXd res =
          etadot + jac.dyn_x.transpose() * mult.eta[j] + mult.lambda * jac.cost_x;
      rep.adjoint_residual = std::max(rep.adjoint_residual, inf_norm(res));
    }
  }

  // Control stationarity, meaningful only without fiber constraints.
  if (std::holds_alternative<UnconstrainedFiber>(problem.fiber())) {
    rep.stationarity_applicable = true;
    for (std::size_t j = 0; j < traj.node_count(); ++j) {
      const SystemJacobians jac =
          jacobians_at(problem, traj.time[j], traj.state[j], traj.control[j]);
      const Eigen::VectorXd res =
          jac.dyn_u.transpose() * mult.eta[j] + mult.lambda * jac.cost_u;
      rep.stationarity_residual = std::max(rep.stationarity_residual, inf_norm(res));
    }
  }

  // Maximization margin over deterministic fiber draws.
  DrawRng rng(0x9e3779b97f4a7c15ull);
  double margin = -std::numeric_limits<double>::infinity();
  double hscale = 0.0;
  for (std::size_t j = 0; j < traj.node_count(); ++j) {
    const double h_ref = hamiltonian(problem, traj.time[j], traj.state[j],
                                     traj.control[j], mult.eta[j], mult.lambda);
    hscale = std::max(hscale, std::abs(h_ref));
    for (const auto& u_alt :
         fiber_draws(problem.fiber(), traj.control[j], fiber_samples, rng)) {
      const double h_alt = hamiltonian(problem, traj.time[j], traj.state[j], u_alt,
                                       mult.eta[j], mult.lambda);
      margin = std::max(margin, h_alt - h_ref);
    }
  }
  rep.maximization_margin = std::isfinite(margin) ? margin : 0.0;
  rep.hamiltonian_scale = hscale;

  const double margin_tol = tol * (1.0 + hscale);
  rep.passes = rep.nonvanishing && rep.adjoint_residual <= tol &&
               rep.maximization_margin <= margin_tol &&
               (!rep.stationarity_applicable || rep.stationarity_residual <= tol);
  return rep;
}

Multiplier recover_multiplier(const ControlProblem& problem, const Trajectory& traj,
                              const Eigen::VectorXd& eta_b, double lambda) {
  if (eta_b.size() != problem.state_dim()) {
    throw ValidationError("covector has wrong dimension");
  }
  if (std::max(inf_norm(eta_b), std::abs(lambda)) == 0.0) {
    throw ValidationError("multiplier must not vanish");
  }
  Multiplier m;
  m.lambda = lambda;
  m.eta = adjoint_transport(problem, traj, eta_b, lambda, traj.t_end(),
                            traj.t_start());
  return m;
}

namespace {

// The covector path is affine in (eta_b, lambda); these hold the linear part
// (per-node matrix applied to eta_b) and the lambda = 1 particular part.
struct AdjointBasis {
  std::vector<Eigen::MatrixXd> linear;      // node -> d x d
  std::vector<Eigen::VectorXd> particular;  // node -> d
};

AdjointBasis adjoint_basis(const ControlProblem& problem, const Trajectory& traj) {
  const int d = problem.state_dim();
  AdjointBasis basis;
  basis.linear.assign(traj.node_count(), Eigen::MatrixXd(d, d));
  std::vector<std::vector<Eigen::VectorXd>> columns(d);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    e[i] = 1.0;
    columns[i] =
        adjoint_transport(problem, traj, e, 0.0, traj.t_end(), traj.t_start());
  }
  for (std::size_t j = 0; j < traj.node_count(); ++j) {
    for (int i = 0; i < d; ++i) basis.linear[j].col(i) = columns[i][j];
  }
  basis.particular = adjoint_transport(problem, traj, Eigen::VectorXd::Zero(d), 1.0,
                                       traj.t_end(), traj.t_start());
  return basis;
}

// Stationarity conditions stacked over all grid nodes, as a linear system in
// eta_b for fixed lambda: rows(eta_b) = -lambda * shift.
struct StationaritySystem {
  Eigen::MatrixXd rows;    // (nodes * k) x d
  Eigen::VectorXd shift;   // nodes * k, the lambda-proportional right side
};

StationaritySystem stationarity_system(const ControlProblem& problem,
                                       const Trajectory& traj,
                                       const AdjointBasis& basis) {
  const int d = problem.state_dim();
  const int k = problem.control_dim();
  const auto nodes = static_cast<Eigen::Index>(traj.node_count());
  StationaritySystem sys;
  sys.rows.resize(nodes * k, d);
  sys.shift.resize(nodes * k);
  for (Eigen::Index j = 0; j < nodes; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const SystemJacobians jac =
        jacobians_at(problem, traj.time[ju], traj.state[ju], traj.control[ju]);
    const Eigen::MatrixXd bt = jac.dyn_u.transpose();  // k x d
    sys.rows.block(j * k, 0, k, d) = bt * basis.linear[ju];
    sys.shift.segment(j * k, k) = bt * basis.particular[ju] + jac.cost_u;
  }
  return sys;
}

struct PolishedRay {
  Eigen::VectorXd eta_b;
  double lambda = 0.0;
  bool polished = false;
};

// Sampled dual rays satisfy the stationarity conditions only to the sampling
// resolution; project them onto the exact stationarity solution set (least
// squares in eta_b with lambda pinned to -1 or 0) before re-verification.
PolishedRay polish_ray(const Eigen::VectorXd& ray, int d, double tol,
                       bool stationarity_available,
                       const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>* cod,
                       const StationaritySystem* sys) {
  PolishedRay out;
  Eigen::VectorXd eta0 = ray.head(d);
  const double lambda0 = ray[d];
  out.eta_b = eta0;
  out.lambda = lambda0;
  if (stationarity_available && lambda0 < -tol) {
    const double scale = -lambda0;
    const Eigen::VectorXd eta_scaled = eta0 / scale;
    const Eigen::VectorXd target = sys->shift;  // right side at lambda = -1
    const Eigen::VectorXd corr = cod->solve(target - sys->rows * eta_scaled);
    out.eta_b = eta_scaled + corr;
    out.lambda = -1.0;
    out.polished = true;
  } else if (stationarity_available && std::abs(lambda0) <= tol) {
    // Abnormal candidate: keep only the stationarity null-space component.
    const Eigen::VectorXd row_part = cod->solve(sys->rows * eta0);
    Eigen::VectorXd eta = eta0 - row_part;
    if (inf_norm(eta) > 1e-6) {
      out.eta_b = eta;
      out.lambda = 0.0;
      out.polished = true;
    }
  }
  const double norm = std::max(inf_norm(out.eta_b), std::abs(out.lambda));
  if (norm <= 1e-12) {
    out.eta_b = eta0;
    out.lambda = lambda0;
    out.polished = false;
    const double raw = std::max(inf_norm(out.eta_b), std::abs(out.lambda));
    out.eta_b /= raw;
    out.lambda /= raw;
    return out;
  }
  out.eta_b /= norm;
  out.lambda /= norm;
  return out;
}

}  // namespace

ExtremalReport classify_extremal(const ControlProblem& problem, const Trajectory& traj,
                                 const SamplingConfig& cfg, double tol) {
  const int d = problem.state_dim();
  if (d + 1 > 8) {
    throw ValidationError("dual ray enumeration supports at most 8 dimensions");
  }
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");

  ExtremalReport rep;
  rep.sampling = cfg;
  rep.tol = tol;

  const Cone extended = extended_vertical_cone(problem, traj, cfg);
  if (extended.generators.empty()) {
    throw ValidationError("sampling produced an empty displacement cone");
  }
  const Cone state_cone = vertical_cone(problem, traj, cfg);
  rep.extended_cone_dimension = dimension(extended);
  rep.state_cone_dimension = dimension(state_cone);
  rep.dropped_zero_generators = extended.dropped_zero_generators;

  Eigen::VectorXd cost_dir = Eigen::VectorXd::Zero(d + 1);
  cost_dir[d] = -1.0;

  rep.is_extremal = !in_interior(extended, cost_dir);
  rep.boundary_within_tol = rep.is_extremal && contains(extended, cost_dir);

  // Largest achievable -lambda over the dual intersected with the unit box.
  {
    const auto s = static_cast<Eigen::Index>(extended.generators.size());
    const Eigen::Index n = d + 1;
    Eigen::MatrixXd a(n, s + 2 * n);
    for (Eigen::Index i = 0; i < s; ++i) a.col(i) = extended.generators[i];
    a.block(0, s, n, n) = Eigen::MatrixXd::Identity(n, n);
    a.block(0, s + n, n, n) = -Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(s + 2 * n);
    c.segment(s, 2 * n).setOnes();
    const detail::LpOutcome lp = detail::solve_lp(a, cost_dir, c);
    if (!lp.feasible || !lp.bounded) {
      throw NumericalError("support problem did not solve");
    }
    rep.max_neg_lambda = lp.objective;
  }
  rep.is_normal = rep.max_neg_lambda > tol;
  rep.is_abnormal = separating_covector(state_cone).has_value();
  rep.is_strictly_abnormal = rep.is_abnormal && !rep.is_normal;

  rep.dual_rays_extended = dual_rays(extended);

  // Witness verification: every dual ray with a nonpositive lambda part is
  // cleaned up, integrated backward, and re-checked through the residuals.
  const bool stationarity_available =
      std::holds_alternative<UnconstrainedFiber>(problem.fiber());
  AdjointBasis basis;
  StationaritySystem sys;
  std::unique_ptr<Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>> cod;
  if (stationarity_available) {
    basis = adjoint_basis(problem, traj);
    sys = stationarity_system(problem, traj, basis);
    cod = std::make_unique<Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>>();
    cod->setThreshold(1e-10);
    cod->compute(sys.rows);
  }

  for (const Eigen::VectorXd& ray : rep.dual_rays_extended) {
    if (ray[d] > tol) continue;
    const PolishedRay pr = polish_ray(ray, d, tol, stationarity_available,
                                      cod.get(), &sys);
    WitnessReport w;
    w.ray = ray;
    w.eta_b = pr.eta_b;
    w.lambda = pr.lambda;
    w.polished = pr.polished;
    w.multiplier = recover_multiplier(problem, traj, pr.eta_b, pr.lambda);
    w.check = check_multiplier(problem, traj, w.multiplier, cfg.fiber_samples,
                               kWitnessResidualTol);
    double h0 = 0.0;
    for (std::size_t j = 0; j < traj.node_count(); ++j) {
      const double h = hamiltonian(problem, traj.time[j], traj.state[j],
                                   traj.control[j], w.multiplier.eta[j], w.lambda);
      if (j == 0) h0 = h;
      w.hamiltonian_drift = std::max(w.hamiltonian_drift, std::abs(h - h0));
    }
    rep.witnesses.push_back(std::move(w));
  }

  // Aggregate diagnostics over the passing witnesses, or over all of them
  // when none pass.
  std::vector<const WitnessReport*> pool;
  for (const auto& w : rep.witnesses) {
    if (w.check.passes) pool.push_back(&w);
  }
  if (pool.empty()) {
    for (const auto& w : rep.witnesses) pool.push_back(&w);
  }
  for (const WitnessReport* w : pool) {
    rep.max_stationarity_residual =
        std::max(rep.max_stationarity_residual, w->check.stationarity_residual);
    rep.max_maximization_violation = std::max(
        rep.max_maximization_violation, std::max(0.0, w->check.maximization_margin));
    rep.hamiltonian_drift = std::max(rep.hamiltonian_drift, w->hamiltonian_drift);
  }

  std::ostringstream note;
  note << "Classification is sampling-relative (" << cfg.time_samples
       << " time samples x " << cfg.fiber_samples << " fiber samples, seed "
       << cfg.seed << "): a negative extremality verdict is certified by an "
          "interior point, a positive one is falsifiable by denser sampling. "
          "Maximization probed over "
       << search_region_text(problem.fiber()) << ".";
  rep.note = note.str();
  return rep;
}

namespace {

// Global maximizer of the Hamiltonian over the control fiber at one (t,x,p).
class FiberMaximizer {
 public:
  FiberMaximizer(const ControlProblem& problem, double lambda)
      : problem_(problem), lambda_(lambda), d_(problem.state_dim()),
        k_(problem.control_dim()) {
    if (const auto* box = std::get_if<BoxFiber>(&problem.fiber())) {
      warm_ = (box->lo + box->hi) / 2.0;
    } else {
      warm_ = Eigen::VectorXd::Zero(k_);
    }
    values_.resize(problem.vars().size());
  }

  Eigen::VectorXd maximize(double t, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& p) {
    if (const auto* grid = std::get_if<GridFiber>(&problem_.fiber())) {
      double best = -std::numeric_limits<double>::infinity();
      Eigen::VectorXd best_u;
      for (const auto& u : grid->points) {
        const double h = hamiltonian(problem_, t, x, u, p, lambda_);
        if (h > best) {
          best = h;
          best_u = u;
        }
      }
      return best_u;
    }
    const auto* box = std::get_if<BoxFiber>(&problem_.fiber());
    Eigen::VectorXd u = warm_;
    if (box) clip(*box, u);
    bool converged = false;
    for (int iter = 0; iter < 50; ++iter) {
      const Eigen::VectorXd g = gradient(t, x, p, u);
      const Eigen::MatrixXd h = hessian(t, x, p, u);
      Eigen::VectorXd step = h.ldlt().solve(-g);
      if (!step.allFinite()) {
        throw NumericalError("fiber maximizer produced a non-finite step");
      }
      Eigen::VectorXd next = u + step;
      if (box) clip(*box, next);
      const double move = inf_norm(next - u);
      u = next;
      if (move <= 1e-13 * (1.0 + inf_norm(u))) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw NumericalError("fiber maximizer did not converge in 50 iterations");
    }
    // The maximizer must sit on a strictly concave piece of the Hamiltonian.
    const Eigen::MatrixXd h = hessian(t, x, p, u);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    const double top = eig.eigenvalues().maxCoeff();
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if (top > -1e-10 * scale) {
      throw NumericalError("Hamiltonian is not concave at the fiber maximizer");
    }
    warm_ = u;
    return u;
  }

 private:
  static void clip(const BoxFiber& box, Eigen::VectorXd& u) {
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      u[j] = std::min(box.hi[j], std::max(box.lo[j], u[j]));
    }
  }

  Eigen::VectorXd gradient(double t, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& p, const Eigen::VectorXd& u) {
    problem_.pack(t, x, u, values_);
    Eigen::VectorXd g(k_);
    for (int a = 0; a < k_; ++a) {
      double v = lambda_ * problem_.cost_u_expr(a).eval(values_);
      for (int i = 0; i < d_; ++i) {
        v += p[i] * problem_.dynamics_u_expr(i, a).eval(values_);
      }
      g[a] = v;
    }
    return g;
  }

  Eigen::MatrixXd hessian(double t, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& p, const Eigen::VectorXd& u) {
    problem_.pack(t, x, u, values_);
    Eigen::MatrixXd h(k_, k_);
    for (int a = 0; a < k_; ++a) {
      for (int b = 0; b < k_; ++b) {
        double v = lambda_ * problem_.cost_uu_expr(a, b).eval(values_);
        for (int i = 0; i < d_; ++i) {
          v += p[i] * problem_.dynamics_uu_expr(i, a, b).eval(values_);
        }
        h(a, b) = v;
      }
    }
    return h;
  }

  const ControlProblem& problem_;
  double lambda_;
  int d_, k_;
  Eigen::VectorXd warm_;
  std::vector<double> values_;
};

}  // namespace

HamiltonianFlow integrate_normal_hamiltonian(const ControlProblem& problem,
                                             const Eigen::VectorXd& x0,
                                             const Eigen::VectorXd& p0, double lambda,
                                             const IntegrationOptions& options) {
  const int d = problem.state_dim();
  if (x0.size() != d || p0.size() != d) {
    throw ValidationError("state or covector has wrong dimension");
  }
  if (!(lambda < 0.0)) {
    throw ValidationError("cost multiplier must be negative");
  }
  if (options.steps < 1) throw ValidationError("step count must be positive");

  FiberMaximizer maximizer(problem, lambda);

  // One joint step rate: (x_dot, p_dot, J_dot) at the fiber maximizer.
  const auto rate = [&](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& p,
                        Eigen::VectorXd* xd, Eigen::VectorXd* pd, double* jd,
                        Eigen::VectorXd* u_out) {
    const Eigen::VectorXd u = maximizer.maximize(t, x, p);
    const auto [vel, cost_rate] = dynamics_at(problem, t, x, u);
    const SystemJacobians jac = jacobians_at(problem, t, x, u);
    *xd = vel;
    *pd = -jac.dyn_x.transpose() * p - lambda * jac.cost_x;
    *jd = cost_rate;
    if (u_out) *u_out = u;
  };

  const double a = problem.t_start();
  const double b = problem.t_end();
  const int n = options.steps;

  Trajectory traj;
  traj.time.reserve(n + 1);
  traj.state.reserve(n + 1);
  traj.control.reserve(n + 1);
  traj.cost.reserve(n + 1);
  traj.breakpoints = {0, static_cast<std::size_t>(n)};
  traj.piece_of_step.assign(n, 0);

  Multiplier mult;
  mult.lambda = lambda;
  mult.eta.reserve(n + 1);

  Eigen::VectorXd x = x0;
  Eigen::VectorXd p = p0;
  double cost = 0.0;

  Eigen::VectorXd xd, pd, u_node;
  double jd = 0.0;

  for (int q = 0; q < n; ++q) {
    const double t0 = a + (b - a) * q / n;
    const double t1 = (q + 1 == n) ? b : a + (b - a) * (q + 1) / n;
    const double h = t1 - t0;

    rate(t0, x, p, &xd, &pd, &jd, &u_node);
    traj.time.push_back(t0);
    traj.state.push_back(x);
    traj.control.push_back(u_node);
    traj.cost.push_back(cost);
    mult.eta.push_back(p);

    const Eigen::VectorXd k1x = xd, k1p = pd;
    const double k1j = jd;
    rate(t0 + h / 2, x + (h / 2) * k1x, p + (h / 2) * k1p, &xd, &pd, &jd, nullptr);
    const Eigen::VectorXd k2x = xd, k2p = pd;
    const double k2j = jd;
    rate(t0 + h / 2, x + (h / 2) * k2x, p + (h / 2) * k2p, &xd, &pd, &jd, nullptr);
    const Eigen::VectorXd k3x = xd, k3p = pd;
    const double k3j = jd;
    rate(t1, x + h * k3x, p + h * k3p, &xd, &pd, &jd, nullptr);

    x += (h / 6) * (k1x + 2 * k2x + 2 * k3x + xd);
    p += (h / 6) * (k1p + 2 * k2p + 2 * k3p + pd);
    cost += (h / 6) * (k1j + 2 * k2j + 2 * k3j + jd);
    if (!x.allFinite() || !p.allFinite() || !std::isfinite(cost)) {
      throw NumericalError("Hamiltonian integration left the finite range");
    }
  }

  const Eigen::VectorXd u_final = maximizer.maximize(b, x, p);
  traj.time.push_back(b);
  traj.state.push_back(x);
  traj.control.push_back(u_final);
  traj.cost.push_back(cost);
  mult.eta.push_back(p);

  HamiltonianFlow flow;
  flow.initial_hamiltonian = hamiltonian(problem, traj.time[0], traj.state[0],
                                         traj.control[0], mult.eta[0], lambda);
  for (std::size_t j = 0; j < traj.node_count(); ++j) {
    const double h = hamiltonian(problem, traj.time[j], traj.state[j],
                                 traj.control[j], mult.eta[j], lambda);
    flow.hamiltonian_drift =
        std::max(flow.hamiltonian_drift, std::abs(h - flow.initial_hamiltonian));
  }
  flow.trajectory = std::move(traj);
  flow.multiplier = std::move(mult);
  return flow;
}

}  // namespace extremalkit
