#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "extremalkit/errors.hpp"
#include "extremalkit/flow.hpp"
#include "extremalkit/json_io.hpp"
#include "extremalkit/pmp.hpp"
#include "extremalkit/problem.hpp"
#include "extremalkit/variation.hpp"

namespace ek = extremalkit;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ek::ValidationError("cannot read file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw ek::ValidationError("cannot open output file: " + out_path);
  f << text;
}

Eigen::VectorXd parse_vector(const std::string& text, const char* what) {
  std::string body = text;
  body.erase(std::remove_if(body.begin(), body.end(),
                            [](char c) { return c == '[' || c == ']' || c == ' '; }),
             body.end());
  if (body.empty()) throw ek::ValidationError(std::string(what) + ": empty vector");
  std::vector<double> vals;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ek::ValidationError(std::string(what) + ": bad number '" + item + "'");
    }
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

std::string join_diagnostics(const std::vector<ek::Diagnostic>& diags) {
  std::string msg;
  for (const auto& d : diags) {
    if (!msg.empty()) msg += "; ";
    msg += d.code + ": " + d.message;
  }
  return msg;
}

// A problem reference is either a JSON file path or a catalog name.
ek::ProblemSpec load_problem_spec(const std::string& ref) {
  std::ifstream probe(ref);
  if (probe) {
    const ek::Json j = ek::parse_json_text(read_file(ref));
    ek::ProblemSpec spec = ek::problem_spec_from_json(j);
    const auto diags = ek::validate(spec);
    if (!diags.empty()) throw ek::ValidationError(join_diagnostics(diags));
    return spec;
  }
  for (const auto& name : ek::catalog_names()) {
    if (name == ref) return ek::catalog_spec(ref);
  }
  throw ek::ValidationError("no such problem file or catalog entry: " + ref);
}

ek::PiecewiseControl load_control(const std::string& path,
                                  const ek::ProblemSpec& problem_spec) {
  const ek::Json j = ek::parse_json_text(read_file(path));
  const ek::ControlSpec spec = ek::control_spec_from_json(j);
  const auto diags = ek::validate(problem_spec, spec);
  if (!diags.empty()) throw ek::ValidationError(join_diagnostics(diags));
  return ek::PiecewiseControl::from_spec(spec, problem_spec.control_dim);
}

Eigen::VectorXd resolve_x0(const std::string& flag, const ek::ControlProblem& problem) {
  if (!flag.empty()) {
    Eigen::VectorXd v = parse_vector(flag, "--x0");
    if (v.size() != problem.state_dim()) {
      throw ek::ValidationError("--x0 has wrong dimension");
    }
    return v;
  }
  if (problem.x_start()) return *problem.x_start();
  throw ek::ValidationError(
      "initial state required: pass --x0 or use a problem with x_start");
}

unsigned long long resolve_seed(const std::optional<unsigned long long>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("EXTREMALKIT_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
      throw ek::ValidationError("EXTREMALKIT_SEED must be an unsigned integer");
    }
    return v;
  }
  return 0;
}

void check_steps(int steps) {
  if (steps < 10) throw ek::ValidationError("--steps must be at least 10");
}

// ---- subcommand payloads -----------------------------------------------------

struct CatalogOpts {
  std::string name;
  bool as_json = false;
};

int run_catalog(const CatalogOpts& o) {
  if (!o.name.empty()) {
    for (const auto& name : ek::catalog_names()) {
      if (name == o.name) {
        std::cout << ek::json_to_text(ek::problem_spec_to_json(ek::catalog_spec(name)));
        return 0;
      }
    }
    throw ek::ValidationError("no such catalog entry: " + o.name);
  }
  if (o.as_json) {
    ek::Json out = ek::Json::array();
    for (const auto& name : ek::catalog_names()) {
      const ek::ProblemSpec spec = ek::catalog_spec(name);
      ek::Json e;
      e["name"] = name;
      e["state_dim"] = spec.state_dim;
      e["control_dim"] = spec.control_dim;
      e["t_start"] = spec.t_start;
      e["t_end"] = spec.t_end;
      out.push_back(e);
    }
    std::cout << ek::json_to_text(out);
    return 0;
  }
  for (const auto& name : ek::catalog_names()) {
    const ek::ProblemSpec spec = ek::catalog_spec(name);
    std::cout << name << "  states=" << spec.state_dim
              << " controls=" << spec.control_dim << " horizon=[" << spec.t_start
              << ", " << spec.t_end << "]\n";
  }
  return 0;
}

struct SimulateOpts {
  std::string problem, control, x0, out;
  int steps = 1000;
};

int run_simulate(const SimulateOpts& o) {
  check_steps(o.steps);
  const ek::ProblemSpec spec = load_problem_spec(o.problem);
  const ek::ControlProblem problem(spec);
  const ek::PiecewiseControl control = load_control(o.control, spec);
  const Eigen::VectorXd x0 = resolve_x0(o.x0, problem);
  const ek::Trajectory traj = ek::integrate(problem, control, x0, {o.steps});
  std::ostringstream ss;
  ek::write_csv(traj, ss);
  emit(ss.str(), o.out);
  return 0;
}

struct TransportOpts {
  std::string problem, control, x0, out;
  int steps = 1000;
  double t0 = std::numeric_limits<double>::quiet_NaN();
  double t1 = std::numeric_limits<double>::quiet_NaN();
  bool extended = false;
};

int run_transport(const TransportOpts& o) {
  check_steps(o.steps);
  const ek::ProblemSpec spec = load_problem_spec(o.problem);
  const ek::ControlProblem problem(spec);
  const ek::PiecewiseControl control = load_control(o.control, spec);
  const Eigen::VectorXd x0 = resolve_x0(o.x0, problem);
  const ek::Trajectory traj = ek::integrate(problem, control, x0, {o.steps});
  const double t0 = std::isfinite(o.t0) ? o.t0 : problem.t_start();
  const double t1 = std::isfinite(o.t1) ? o.t1 : problem.t_end();
  const ek::TransportOperator op = o.extended
                                       ? ek::extended_transport(problem, traj, t0, t1)
                                       : ek::transport(problem, traj, t0, t1);
  ek::Json j;
  j["t_from"] = op.t_from;
  j["t_to"] = op.t_to;
  j["extended"] = op.extended;
  j["matrix"] = ek::matrix_to_json(op.matrix);
  emit(ek::json_to_text(j), o.out);
  return 0;
}

struct ConeOpts {
  std::string problem, control, x0, out, kind = "vertical";
  int steps = 1000, time_samples = 64, fiber_samples = 64;
  std::optional<unsigned long long> seed;
};

int run_cone(const ConeOpts& o) {
  check_steps(o.steps);
  const ek::ProblemSpec spec = load_problem_spec(o.problem);
  const ek::ControlProblem problem(spec);
  const ek::PiecewiseControl control = load_control(o.control, spec);
  const Eigen::VectorXd x0 = resolve_x0(o.x0, problem);
  const ek::Trajectory traj = ek::integrate(problem, control, x0, {o.steps});
  const ek::SamplingConfig cfg{o.time_samples, o.fiber_samples, resolve_seed(o.seed)};
  ek::Cone cone;
  if (o.kind == "vertical") {
    cone = ek::vertical_cone(problem, traj, cfg);
  } else if (o.kind == "extended") {
    cone = ek::extended_vertical_cone(problem, traj, cfg);
  } else if (o.kind == "variational") {
    cone = ek::variational_cone(problem, traj, cfg);
  } else {
    throw ek::ValidationError("--kind must be vertical, extended, or variational");
  }
  ek::Json j = ek::cone_to_json(cone);
  j["dimension"] = ek::dimension(cone);
  if (cone.ambient <= 8) {
    ek::Json rays = ek::Json::array();
    for (const auto& r : ek::dual_rays(cone)) rays.push_back(ek::vector_to_json(r));
    j["dual_rays"] = rays;
  }
  emit(ek::json_to_text(j), o.out);
  return 0;
}

struct ClassifyOpts {
  std::string problem, control, x0, out;
  int steps = 1000, time_samples = 64, fiber_samples = 64;
  std::optional<unsigned long long> seed;
  double tol_cone = 1e-9;
};

int run_classify(const ClassifyOpts& o) {
  check_steps(o.steps);
  if (!(o.tol_cone > 0)) throw ek::ValidationError("--tol-cone must be positive");
  const ek::ProblemSpec spec = load_problem_spec(o.problem);
  const ek::ControlProblem problem(spec);
  const ek::PiecewiseControl control = load_control(o.control, spec);
  const Eigen::VectorXd x0 = resolve_x0(o.x0, problem);
  const ek::Trajectory traj = ek::integrate(problem, control, x0, {o.steps});
  const ek::SamplingConfig cfg{o.time_samples, o.fiber_samples, resolve_seed(o.seed)};
  const ek::ExtremalReport report = ek::classify_extremal(problem, traj, cfg, o.tol_cone);
  std::cerr << "extremal: " << (report.is_extremal ? "true" : "false")
            << ", normal: " << (report.is_normal ? "true" : "false")
            << ", abnormal: " << (report.is_abnormal ? "true" : "false")
            << ", strictly_abnormal: "
            << (report.is_strictly_abnormal ? "true" : "false") << "\n";
  emit(ek::json_to_text(ek::extremal_report_to_json(report)), o.out);
  return 0;
}

struct CheckOpts {
  std::string problem, control, x0, out, eta_b;
  double lambda = -1.0;
  int steps = 1000, fiber_samples = 64;
  double tol = 1e-5;
};

int run_check(const CheckOpts& o) {
  check_steps(o.steps);
  if (!(o.tol > 0)) throw ek::ValidationError("--tol must be positive");
  const ek::ProblemSpec spec = load_problem_spec(o.problem);
  const ek::ControlProblem problem(spec);
  const ek::PiecewiseControl control = load_control(o.control, spec);
  const Eigen::VectorXd x0 = resolve_x0(o.x0, problem);
  const Eigen::VectorXd eta_b = parse_vector(o.eta_b, "--eta-b");
  if (eta_b.size() != problem.state_dim()) {
    throw ek::ValidationError("--eta-b has wrong dimension");
  }
  const ek::Trajectory traj = ek::integrate(problem, control, x0, {o.steps});
  const ek::Multiplier mult = ek::recover_multiplier(problem, traj, eta_b, o.lambda);
  const ek::MultiplierCheck check =
      ek::check_multiplier(problem, traj, mult, o.fiber_samples, o.tol);
  ek::Json j;
  j["eta_b"] = ek::vector_to_json(eta_b);
  j["lambda"] = o.lambda;
  j["residuals"] = ek::multiplier_check_to_json(check);
  emit(ek::json_to_text(j), o.out);
  return 0;
}

struct ExtremalOpts {
  std::string problem, x0, p0, out;
  double lambda = -1.0;
  int steps = 1000;
};

int run_extremal(const ExtremalOpts& o) {
  check_steps(o.steps);
  const ek::ProblemSpec spec = load_problem_spec(o.problem);
  const ek::ControlProblem problem(spec);
  const Eigen::VectorXd x0 = resolve_x0(o.x0, problem);
  const Eigen::VectorXd p0 = parse_vector(o.p0, "--p0");
  if (p0.size() != problem.state_dim()) {
    throw ek::ValidationError("--p0 has wrong dimension");
  }
  const ek::HamiltonianFlow flow =
      ek::integrate_normal_hamiltonian(problem, x0, p0, o.lambda, {o.steps});
  if (!o.out.empty()) {
    std::ostringstream ss;
    ek::write_csv(flow.trajectory, ss);
    emit(ss.str(), o.out);
  }
  ek::Json j;
  j["initial_hamiltonian"] = flow.initial_hamiltonian;
  j["hamiltonian_drift"] = flow.hamiltonian_drift;
  j["lambda"] = flow.multiplier.lambda;
  j["final_state"] = ek::vector_to_json(flow.trajectory.final_state());
  j["final_cost"] = flow.trajectory.final_cost();
  std::cout << ek::json_to_text(j);
  return 0;
}

struct ReachOpts {
  std::string problem, control, x0, out;
  int steps = 1000, samples = 50, time_samples = 64, fiber_samples = 64;
  double eps = 1e-3;
  std::optional<unsigned long long> seed;
};

int run_reach(const ReachOpts& o) {
  check_steps(o.steps);
  if (o.samples < 1) throw ek::ValidationError("--samples must be at least 1");
  if (o.eps < 0) throw ek::ValidationError("--eps must be nonnegative");
  const ek::ProblemSpec spec = load_problem_spec(o.problem);
  const ek::ControlProblem problem(spec);
  const ek::PiecewiseControl control = load_control(o.control, spec);
  const Eigen::VectorXd x0 = resolve_x0(o.x0, problem);
  const ek::Trajectory traj = ek::integrate(problem, control, x0, {o.steps});
  const unsigned long long seed = resolve_seed(o.seed);
  const ek::SamplingConfig cfg{o.time_samples, o.fiber_samples, seed};
  const ek::Cone cone = ek::vertical_cone(problem, traj, cfg);
  std::vector<Eigen::VectorXd> rays;
  if (cone.ambient <= 8) rays = ek::dual_rays(cone);

  std::mt19937_64 gen(seed);
  const auto uniform = [&] {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
  };
  double spare = 0.0;
  bool has_spare = false;
  const auto gaussian = [&] {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare = r * std::sin(2.0 * M_PI * u2);
    has_spare = true;
    return r * std::cos(2.0 * M_PI * u2);
  };
  const auto draw_control = [&](const Eigen::VectorXd& u_ref) {
    const int k = problem.control_dim();
    if (const auto* grid = std::get_if<ek::GridFiber>(&problem.fiber())) {
      const auto idx = std::min<std::size_t>(grid->points.size() - 1,
                                             static_cast<std::size_t>(
                                                 uniform() * grid->points.size()));
      return grid->points[idx];
    }
    Eigen::VectorXd u(k);
    if (const auto* box = std::get_if<ek::BoxFiber>(&problem.fiber())) {
      for (int j = 0; j < k; ++j) {
        u[j] = box->lo[j] + uniform() * (box->hi[j] - box->lo[j]);
      }
      return u;
    }
    for (int j = 0; j < k; ++j) u[j] = u_ref[j] + gaussian();
    return u;
  };

  const Eigen::VectorXd y = traj.final_state();
  std::ostringstream csv;
  csv << "sample";
  for (int i = 0; i < problem.state_dim(); ++i) csv << ",x" << (i + 1);
  csv << ",J\n";
  char buf[40];
  double max_pairing = 0.0;
  for (int s = 0; s < o.samples; ++s) {
    const int count = 1 + static_cast<int>(uniform() * 3);
    std::vector<ek::NeedleSpec> needles;
    for (int q = 0; q < count; ++q) {
      ek::NeedleSpec nd;
      const std::size_t node =
          1 + std::min<std::size_t>(traj.node_count() - 2,
                                    static_cast<std::size_t>(
                                        uniform() * (traj.node_count() - 1)));
      nd.tau = traj.time[node];
      nd.weight = 0.5 + uniform();
      if (uniform() < 0.7) {
        nd.kind = ek::NeedleKind::AltControl;
        nd.alt_control = draw_control(traj.control[node]);
      } else {
        nd.kind = ek::NeedleKind::ReverseLeg;
      }
      needles.push_back(std::move(nd));
    }
    std::sort(needles.begin(), needles.end(),
              [](const ek::NeedleSpec& a, const ek::NeedleSpec& b) {
                if (a.tau != b.tau) return a.tau < b.tau;
                return a.kind == ek::NeedleKind::ReverseLeg &&
                       b.kind == ek::NeedleKind::AltControl;
              });
    const auto [endpoint, cost] =
        ek::multi_needle_endpoint(problem, x0, traj, needles, o.eps, {o.steps});
    csv << s;
    for (int i = 0; i < problem.state_dim(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", endpoint[i]);
      csv << "," << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", cost);
    csv << "," << buf << "\n";
    if (o.eps > 0) {
      const Eigen::VectorXd delta = endpoint - y;
      for (const auto& ray : rays) {
        max_pairing = std::max(max_pairing, ray.dot(delta) / o.eps);
      }
    }
  }
  if (!o.out.empty()) emit(csv.str(), o.out);

  ek::Json j;
  j["samples"] = o.samples;
  j["eps"] = o.eps;
  j["reference_endpoint"] = ek::vector_to_json(y);
  j["reference_cost"] = traj.final_cost();
  ek::Json rj = ek::Json::array();
  for (const auto& r : rays) rj.push_back(ek::vector_to_json(r));
  j["dual_rays"] = rj;
  j["max_pairing_over_eps"] = max_pairing;
  if (o.out.empty()) {
    j["endpoints_csv"] = csv.str();
  }
  std::cout << ek::json_to_text(j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Trajectory, transported-cone, and multiplier analysis for fixed-horizon "
      "control systems"};
  app.require_subcommand(1);

  CatalogOpts catalog_opts;
  auto* cat = app.add_subcommand("catalog", "List built-in problems");
  cat->add_option("name", catalog_opts.name, "Print one entry's full description");
  cat->add_flag("--json", catalog_opts.as_json, "Machine-readable listing");

  SimulateOpts sim_opts;
  auto* sim =
      app.add_subcommand("simulate", "Integrate a control and emit the trajectory CSV");
  sim->add_option("--problem", sim_opts.problem, "Problem file or catalog name")
      ->required();
  sim->add_option("--control", sim_opts.control, "Control file")->required();
  sim->add_option("--x0", sim_opts.x0, "Initial state, comma-separated");
  sim->add_option("--steps", sim_opts.steps, "Step count over the horizon");
  sim->add_option("--out", sim_opts.out, "Output file (default stdout)");

  TransportOpts tr_opts;
  auto* tr = app.add_subcommand("transport",
                                "Linearized flow between two grid times as JSON");
  tr->add_option("--problem", tr_opts.problem, "Problem file or catalog name")
      ->required();
  tr->add_option("--control", tr_opts.control, "Control file")->required();
  tr->add_option("--x0", tr_opts.x0, "Initial state");
  tr->add_option("--t0", tr_opts.t0, "From time (default horizon start)");
  tr->add_option("--t1", tr_opts.t1, "To time (default horizon end)");
  tr->add_flag("--extended", tr_opts.extended, "Append the accumulated-cost row");
  tr->add_option("--steps", tr_opts.steps, "Step count");
  tr->add_option("--out", tr_opts.out, "Output file");

  ConeOpts cone_opts;
  auto* cn = app.add_subcommand("cone", "Sampled displacement cone as JSON");
  cn->add_option("--problem", cone_opts.problem, "Problem file or catalog name")
      ->required();
  cn->add_option("--control", cone_opts.control, "Control file")->required();
  cn->add_option("--x0", cone_opts.x0, "Initial state");
  cn->add_option("--kind", cone_opts.kind, "vertical | extended | variational");
  cn->add_option("--steps", cone_opts.steps, "Step count");
  cn->add_option("--time-samples", cone_opts.time_samples, "Needle time draws");
  cn->add_option("--fiber-samples", cone_opts.fiber_samples, "Control draws per time");
  cn->add_option("--seed", cone_opts.seed, "RNG seed (default EXTREMALKIT_SEED or 0)");
  cn->add_option("--out", cone_opts.out, "Output file");

  ClassifyOpts cls_opts;
  auto* cls = app.add_subcommand(
      "classify", "Extremality flags, dual-ray witnesses, and residuals as JSON");
  cls->add_option("--problem", cls_opts.problem, "Problem file or catalog name")
      ->required();
  cls->add_option("--control", cls_opts.control, "Control file")->required();
  cls->add_option("--x0", cls_opts.x0, "Initial state");
  cls->add_option("--steps", cls_opts.steps, "Step count");
  cls->add_option("--time-samples", cls_opts.time_samples, "Needle time draws");
  cls->add_option("--fiber-samples", cls_opts.fiber_samples, "Control draws per time");
  cls->add_option("--seed", cls_opts.seed, "RNG seed (default EXTREMALKIT_SEED or 0)");
  cls->add_option("--tol-cone", cls_opts.tol_cone, "Cone decision tolerance");
  cls->add_option("--out", cls_opts.out, "Output file");

  CheckOpts chk_opts;
  auto* chk = app.add_subcommand("check-multiplier",
                                 "Recover a covector path and report its residuals");
  chk->add_option("--problem", chk_opts.problem, "Problem file or catalog name")
      ->required();
  chk->add_option("--control", chk_opts.control, "Control file")->required();
  chk->add_option("--x0", chk_opts.x0, "Initial state");
  chk->add_option("--eta-b", chk_opts.eta_b, "Final-time covector")->required();
  chk->add_option("--lambda", chk_opts.lambda, "Cost multiplier");
  chk->add_option("--steps", chk_opts.steps, "Step count");
  chk->add_option("--fiber-samples", chk_opts.fiber_samples,
                  "Maximization draws per node");
  chk->add_option("--tol", chk_opts.tol, "Residual tolerance");
  chk->add_option("--out", chk_opts.out, "Output file");

  ExtremalOpts ext_opts;
  auto* ext = app.add_subcommand(
      "extremal", "Integrate the Hamiltonian system with the fiber maximizer");
  ext->add_option("--problem", ext_opts.problem, "Problem file or catalog name")
      ->required();
  ext->add_option("--x0", ext_opts.x0, "Initial state");
  ext->add_option("--p0", ext_opts.p0, "Initial covector")->required();
  ext->add_option("--lambda", ext_opts.lambda, "Cost multiplier (negative)");
  ext->add_option("--steps", ext_opts.steps, "Step count");
  ext->add_option("--out", ext_opts.out, "Trajectory CSV file");

  ReachOpts reach_opts;
  auto* rch = app.add_subcommand(
      "reach", "Endpoint cloud of random needle bundles plus cone consistency");
  rch->add_option("--problem", reach_opts.problem, "Problem file or catalog name")
      ->required();
  rch->add_option("--control", reach_opts.control, "Reference control file")
      ->required();
  rch->add_option("--x0", reach_opts.x0, "Initial state");
  rch->add_option("--samples", reach_opts.samples, "Needle bundles to draw");
  rch->add_option("--eps", reach_opts.eps, "Needle burst scale");
  rch->add_option("--steps", reach_opts.steps, "Step count");
  rch->add_option("--time-samples", reach_opts.time_samples, "Cone time draws");
  rch->add_option("--fiber-samples", reach_opts.fiber_samples, "Cone control draws");
  rch->add_option("--seed", reach_opts.seed, "RNG seed");
  rch->add_option("--out", reach_opts.out, "Endpoint CSV file");

  int rc = 0;
  cat->callback([&] { rc = run_catalog(catalog_opts); });
  sim->callback([&] { rc = run_simulate(sim_opts); });
  tr->callback([&] { rc = run_transport(tr_opts); });
  cn->callback([&] { rc = run_cone(cone_opts); });
  cls->callback([&] { rc = run_classify(cls_opts); });
  chk->callback([&] { rc = run_check(chk_opts); });
  ext->callback([&] { rc = run_extremal(ext_opts); });
  rch->callback([&] { rc = run_reach(reach_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ek::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const ek::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const ek::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return rc;
}
