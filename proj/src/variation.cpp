#include "extremalkit/variation.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <utility>
#include <vector>

namespace extremalkit {

namespace {

// Deterministic draws: raw mt19937_64 bits mapped to [0,1), Gaussians via
// Box-Muller with a cached spare.
class SampleRng {
 public:
  explicit SampleRng(unsigned long long seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  std::size_t below(std::size_t n) {
    return std::min<std::size_t>(n - 1, static_cast<std::size_t>(uniform() * n));
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct SamplePlan {
  std::vector<std::size_t> tau_nodes;              // grid node per time sample
  std::vector<std::vector<Eigen::VectorXd>> alts;  // fiber draws per time sample
};

SamplePlan build_plan(const ControlProblem& problem, const Trajectory& traj,
                      const SamplingConfig& cfg) {
  if (cfg.time_samples < 1 || cfg.fiber_samples < 1) {
    throw ValidationError("sampling counts must be at least 1");
  }
  const std::size_t eligible = traj.node_count() - 1;  // nodes after the start
  if (eligible < 1) {
    throw ValidationError("trajectory has no nodes after the initial time");
  }
  SampleRng rng(cfg.seed);
  SamplePlan plan;
  const auto t_count = static_cast<std::size_t>(cfg.time_samples);
  for (std::size_t i = 0; i < t_count; ++i) {
    // Stratified: jitter within the i-th equal slice of the eligible nodes.
    const double f = (static_cast<double>(i) + rng.uniform()) /
                     static_cast<double>(t_count);
    const auto offset = std::min<std::size_t>(
        eligible - 1, static_cast<std::size_t>(f * static_cast<double>(eligible)));
    plan.tau_nodes.push_back(1 + offset);
  }

  const auto f_count = static_cast<std::size_t>(cfg.fiber_samples);
  const int k = problem.control_dim();
  for (std::size_t i = 0; i < t_count; ++i) {
    const Eigen::VectorXd& u_ref = traj.control[plan.tau_nodes[i]];
    std::vector<Eigen::VectorXd> draws;
    if (const auto* grid = std::get_if<GridFiber>(&problem.fiber())) {
      draws = grid->points;
    } else if (const auto* box = std::get_if<BoxFiber>(&problem.fiber())) {
      // Latin hypercube: one shuffled stratum order per control dimension.
      std::vector<std::vector<std::size_t>> order(k);
      for (int j = 0; j < k; ++j) {
        order[j].resize(f_count);
        for (std::size_t s = 0; s < f_count; ++s) order[j][s] = s;
        for (std::size_t s = f_count; s-- > 1;) {
          std::swap(order[j][s], order[j][rng.below(s + 1)]);
        }
      }
      for (std::size_t s = 0; s < f_count; ++s) {
        Eigen::VectorXd u(k);
        for (int j = 0; j < k; ++j) {
          const double cell =
              (static_cast<double>(order[j][s]) + rng.uniform()) /
              static_cast<double>(f_count);
          u[j] = box->lo[j] + cell * (box->hi[j] - box->lo[j]);
        }
        draws.push_back(std::move(u));
      }
    } else {
      static constexpr double kSpreads[] = {0.5, 1.0, 2.0};
      for (std::size_t s = 0; s < f_count; ++s) {
        Eigen::VectorXd u(k);
        const double spread = kSpreads[s % 3];
        for (int j = 0; j < k; ++j) u[j] = u_ref[j] + spread * rng.gaussian();
        draws.push_back(std::move(u));
      }
    }
    plan.alts.push_back(std::move(draws));
  }
  return plan;
}

// Transport operators from every grid node to the final time, assembled as
// suffix products of the one-step operators.
std::vector<Eigen::MatrixXd> transports_to_end(const ControlProblem& problem,
                                               const Trajectory& traj,
                                               bool extended) {
  const std::size_t steps = traj.step_count();
  const int n = problem.state_dim() + (extended ? 1 : 0);
  std::vector<Eigen::MatrixXd> suffix(steps + 1);
  suffix[steps] = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t j = steps; j-- > 0;) {
    const TransportOperator one =
        extended ? extended_transport(problem, traj, traj.time[j], traj.time[j + 1])
                 : transport(problem, traj, traj.time[j], traj.time[j + 1]);
    suffix[j] = suffix[j + 1] * one.matrix;
  }
  return suffix;
}

std::size_t checked_needle_node(const Trajectory& traj, double tau) {
  const std::size_t idx = traj.index_of_time(tau);
  if (idx == 0) {
    throw ValidationError("needle time must lie strictly after the start");
  }
  return idx;
}

}  // namespace

Eigen::VectorXd needle_vector(const ControlProblem& problem, const Trajectory& traj,
                              const NeedleSpec& spec) {
  if (spec.weight < 0.0) {
    throw ValidationError("needle weight must be nonnegative");
  }
  const std::size_t idx = checked_needle_node(traj, spec.tau);
  const double tau = traj.time[idx];
  const Eigen::VectorXd& x = traj.state[idx];
  Eigen::VectorXd vel;
  if (spec.kind == NeedleKind::AltControl) {
    if (spec.alt_control.size() != problem.control_dim()) {
      throw ValidationError("alternate control has wrong dimension");
    }
    if (!fiber_contains(problem.fiber(), spec.alt_control)) {
      throw ValidationError("alternate control lies outside the fiber");
    }
    vel = dynamics_at(problem, tau, x, spec.alt_control).first;
  } else {
    vel = -dynamics_at(problem, tau, x, traj.control[idx]).first;
  }
  const TransportOperator op = transport(problem, traj, tau, traj.t_end());
  return spec.weight * (op.matrix * vel);
}

Eigen::VectorXd vertical_needle_vector(const ControlProblem& problem,
                                       const Trajectory& traj, double tau,
                                       const Eigen::VectorXd& u_alt) {
  const std::size_t idx = checked_needle_node(traj, tau);
  const double t = traj.time[idx];
  const Eigen::VectorXd& x = traj.state[idx];
  if (u_alt.size() != problem.control_dim()) {
    throw ValidationError("alternate control has wrong dimension");
  }
  if (!fiber_contains(problem.fiber(), u_alt)) {
    throw ValidationError("alternate control lies outside the fiber");
  }
  const Eigen::VectorXd v_alt = dynamics_at(problem, t, x, u_alt).first;
  const Eigen::VectorXd v_ref = dynamics_at(problem, t, x, traj.control[idx]).first;
  const TransportOperator op = transport(problem, traj, t, traj.t_end());
  return op.matrix * (v_alt - v_ref);
}

Eigen::VectorXd extended_vertical_needle(const ControlProblem& problem,
                                         const Trajectory& traj, double tau,
                                         const Eigen::VectorXd& u_alt) {
  const std::size_t idx = checked_needle_node(traj, tau);
  const double t = traj.time[idx];
  const Eigen::VectorXd& x = traj.state[idx];
  if (u_alt.size() != problem.control_dim()) {
    throw ValidationError("alternate control has wrong dimension");
  }
  if (!fiber_contains(problem.fiber(), u_alt)) {
    throw ValidationError("alternate control lies outside the fiber");
  }
  const auto [v_alt, l_alt] = dynamics_at(problem, t, x, u_alt);
  const auto [v_ref, l_ref] = dynamics_at(problem, t, x, traj.control[idx]);
  const int d = problem.state_dim();
  Eigen::VectorXd w(d + 1);
  w.head(d) = v_alt - v_ref;
  w[d] = l_alt - l_ref;
  const TransportOperator op = extended_transport(problem, traj, t, traj.t_end());
  return op.matrix * w;
}

namespace {

enum class ConeMode { Vertical, Extended, Variational };

Cone build_sampled_cone(const ControlProblem& problem, const Trajectory& traj,
                        const SamplingConfig& cfg, ConeMode mode) {
  const SamplePlan plan = build_plan(problem, traj, cfg);
  const int d = problem.state_dim();
  const bool extended = mode == ConeMode::Extended;
  const std::vector<Eigen::MatrixXd> to_end =
      transports_to_end(problem, traj, extended);

  std::vector<Eigen::VectorXd> gens;
  for (std::size_t i = 0; i < plan.tau_nodes.size(); ++i) {
    const std::size_t node = plan.tau_nodes[i];
    const double t = traj.time[node];
    const Eigen::VectorXd& x = traj.state[node];
    const Eigen::VectorXd& u_ref = traj.control[node];
    const auto [v_ref, l_ref] = dynamics_at(problem, t, x, u_ref);
    const Eigen::MatrixXd& m = to_end[node];

    if (mode == ConeMode::Variational) {
      Eigen::VectorXd g(1 + d);
      g[0] = -1.0;
      g.tail(d) = -(m * v_ref);
      gens.push_back(std::move(g));
    }
    for (const Eigen::VectorXd& u_alt : plan.alts[i]) {
      const auto [v_alt, l_alt] = dynamics_at(problem, t, x, u_alt);
      switch (mode) {
        case ConeMode::Vertical:
          gens.push_back(m * (v_alt - v_ref));
          break;
        case ConeMode::Extended: {
          Eigen::VectorXd w(d + 1);
          w.head(d) = v_alt - v_ref;
          w[d] = l_alt - l_ref;
          gens.push_back(m * w);
          break;
        }
        case ConeMode::Variational: {
          Eigen::VectorXd g(1 + d);
          g[0] = 1.0;
          g.tail(d) = m * v_alt;
          gens.push_back(std::move(g));
          break;
        }
      }
    }
  }
  const int ambient = mode == ConeMode::Vertical ? d : d + 1;
  return make_cone(ambient, std::move(gens));
}

}  // namespace

Cone vertical_cone(const ControlProblem& problem, const Trajectory& traj,
                   const SamplingConfig& cfg) {
  return build_sampled_cone(problem, traj, cfg, ConeMode::Vertical);
}

Cone extended_vertical_cone(const ControlProblem& problem, const Trajectory& traj,
                            const SamplingConfig& cfg) {
  return build_sampled_cone(problem, traj, cfg, ConeMode::Extended);
}

Cone variational_cone(const ControlProblem& problem, const Trajectory& traj,
                      const SamplingConfig& cfg) {
  return build_sampled_cone(problem, traj, cfg, ConeMode::Variational);
}

std::pair<Eigen::VectorXd, double> multi_needle_endpoint(
    const ControlProblem& problem, const Eigen::VectorXd& x0, const Trajectory& traj,
    const std::vector<NeedleSpec>& needles, double eps,
    const IntegrationOptions& options) {
  if (eps < 0.0) {
    throw ValidationError("needle burst parameter must be nonnegative");
  }
  if (!traj.source) {
    throw ValidationError("trajectory does not carry its generating control");
  }

  // Validate and snap every needle to its grid node before any execution.
  struct Item {
    double tau;
    NeedleKind kind;
    Eigen::VectorXd alt;
    double weight;
  };
  std::vector<Item> items;
  for (const NeedleSpec& nd : needles) {
    if (nd.weight < 0.0) {
      throw ValidationError("needle weight must be nonnegative");
    }
    const std::size_t idx = checked_needle_node(traj, nd.tau);
    if (nd.kind == NeedleKind::AltControl) {
      if (nd.alt_control.size() != problem.control_dim()) {
        throw ValidationError("alternate control has wrong dimension");
      }
      if (!fiber_contains(problem.fiber(), nd.alt_control)) {
        throw ValidationError("alternate control lies outside the fiber");
      }
    }
    if (nd.weight == 0.0) continue;  // dropped silently
    items.push_back(Item{traj.time[idx], nd.kind, nd.alt_control, nd.weight});
  }
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (items[i].tau < items[i - 1].tau) {
      throw ValidationError("needles must be sorted by time");
    }
    if (items[i].tau == items[i - 1].tau &&
        items[i - 1].kind == NeedleKind::AltControl &&
        items[i].kind == NeedleKind::ReverseLeg) {
      throw ValidationError(
          "at equal times, leg-shortening needles must precede alternate-control ones");
    }
  }

  const bool inert = eps == 0.0 || items.empty();
  const bool same_start =
      x0.size() == traj.initial_state().size() &&
      (x0.array() == traj.initial_state().array()).all();
  if (inert && same_start) {
    return {traj.final_state(), traj.final_cost()};
  }

  // Split the reference control at the needle times, shortening legs that a
  // ReverseLeg ends and inserting constant bursts after AltControl times.
  const PiecewiseControl& ref = *traj.source;
  const std::vector<double>& bps = ref.breakpoints();
  const double len_tol = 1e-12 * std::max(1.0, traj.t_end() - traj.t_start());
  std::vector<FlowLeg> legs;
  std::size_t p = 0;
  for (std::size_t i = 0; i + 1 < bps.size(); ++i) {
    const double s = bps[i];
    const double e = bps[i + 1];
    double cursor = s;
    while (p < items.size() && items[p].tau <= e) {
      const double tau = items[p].tau;
      double shrink = 0.0;
      while (p < items.size() && items[p].tau == tau &&
             items[p].kind == NeedleKind::ReverseLeg) {
        shrink += eps * items[p].weight;
        ++p;
      }
      const double seg = (tau - cursor) - shrink;
      if (seg < -len_tol) {
        throw ValidationError("needle burst would make a leg duration negative");
      }
      if (seg > 0.0) legs.push_back(FlowLeg{ref.piece(i), seg});
      cursor = tau;
      while (p < items.size() && items[p].tau == tau &&
             items[p].kind == NeedleKind::AltControl) {
        const double dur = eps * items[p].weight;
        if (dur > 0.0) legs.push_back(FlowLeg{items[p].alt, dur});
        ++p;
      }
    }
    if (e - cursor > 0.0) legs.push_back(FlowLeg{ref.piece(i), e - cursor});
  }

  CompositeFlowSchedule schedule{std::move(legs)};
  const Trajectory out =
      composite_flow(problem, schedule, x0, options, /*allow_stretch=*/true);
  return {out.final_state(), out.final_cost()};
}

}  // namespace extremalkit
