#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "extremalkit/errors.hpp"
#include "extremalkit/problem.hpp"

using namespace extremalkit;

namespace {

ProblemSpec minimal_spec() {
  ProblemSpec spec;
  spec.state_dim = 1;
  spec.control_dim = 1;
  spec.t_start = 0.0;
  spec.t_end = 1.0;
  spec.dynamics = {"u1"};
  spec.cost = "0";
  return spec;
}

}  // namespace

TEST_CASE("catalog entries validate and construct") {
  for (const auto& name : catalog_names()) {
    const ProblemSpec spec = catalog_spec(name);
    CHECK(validate(spec).empty());
    const ControlProblem problem(spec);
    CHECK(problem.state_dim() == spec.state_dim);
    CHECK(problem.control_dim() == spec.control_dim);
    CHECK(problem.horizon() == doctest::Approx(spec.t_end - spec.t_start));
  }
  CHECK_THROWS_AS(catalog("no_such_problem"), ValidationError);
}

TEST_CASE("validate reports description defects") {
  ProblemSpec spec = minimal_spec();
  spec.state_dim = 2;  // dynamics list has one entry
  CHECK_FALSE(validate(spec).empty());

  spec = minimal_spec();
  spec.t_end = spec.t_start;  // empty horizon
  CHECK_FALSE(validate(spec).empty());

  spec = minimal_spec();
  spec.dynamics = {"u1 +"};  // malformed expression
  CHECK_FALSE(validate(spec).empty());

  spec = minimal_spec();
  spec.dynamics = {"u2"};  // unknown variable for control_dim = 1
  CHECK_FALSE(validate(spec).empty());

  spec = minimal_spec();
  spec.fiber.type = FiberSpec::Type::Box;
  spec.fiber.lo = {1.0};
  spec.fiber.hi = {0.0};  // inverted bounds
  CHECK_FALSE(validate(spec).empty());

  spec = minimal_spec();
  spec.fiber.type = FiberSpec::Type::Grid;
  spec.fiber.points = {};  // empty admissible set
  CHECK_FALSE(validate(spec).empty());

  spec = minimal_spec();
  spec.x_start = std::vector<double>{0.0, 0.0};  // wrong length
  CHECK_FALSE(validate(spec).empty());
}

TEST_CASE("construction throws on invalid specs") {
  ProblemSpec spec = minimal_spec();
  spec.dynamics = {"u1 *"};
  CHECK_THROWS_AS(ControlProblem{spec}, ValidationError);
}

TEST_CASE("fiber membership") {
  CHECK(fiber_contains(UnconstrainedFiber{}, Eigen::VectorXd::Constant(3, 1e9)));

  BoxFiber box;
  box.lo = Eigen::VectorXd::Constant(2, -1.0);
  box.hi = Eigen::VectorXd::Constant(2, 1.0);
  Eigen::VectorXd u(2);
  u << 0.5, -1.0;
  CHECK(fiber_contains(box, u));
  u << 0.5, -1.0 - 1e-6;
  CHECK_FALSE(fiber_contains(box, u));

  GridFiber grid;
  grid.points = {Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0)};
  CHECK(fiber_contains(grid, Eigen::VectorXd::Constant(1, 1.0)));
  CHECK_FALSE(fiber_contains(grid, Eigen::VectorXd::Constant(1, 0.0)));
  CHECK(fiber_contains(grid, Eigen::VectorXd::Constant(1, 1.0 + 1e-9), 1e-8));
}

TEST_CASE("dynamics_at enforces the fiber and finiteness") {
  ProblemSpec spec = minimal_spec();
  spec.fiber.type = FiberSpec::Type::Box;
  spec.fiber.lo = {-1.0};
  spec.fiber.hi = {1.0};
  const ControlProblem problem(spec);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
  CHECK(dynamics_at(problem, 0.0, x, Eigen::VectorXd::Constant(1, 0.5)).first[0] ==
        doctest::Approx(0.5));
  CHECK_THROWS_AS(dynamics_at(problem, 0.0, x, Eigen::VectorXd::Constant(1, 2.0)),
                  ValidationError);
}

TEST_CASE("jacobians match finite differences on heisenberg") {
  const ControlProblem problem = catalog("heisenberg");
  std::mt19937_64 gen(3);
  const auto uniform = [&] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd x(3), u(2);
    for (int i = 0; i < 3; ++i) x[i] = -1 + 2 * uniform();
    for (int i = 0; i < 2; ++i) u[i] = -1 + 2 * uniform();
    const double t = uniform();
    const SystemJacobians jac = jacobians_at(problem, t, x, u);
    const double h = 1e-6;
    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXd lo = x, hi = x;
      lo[j] -= h;
      hi[j] += h;
      const auto [flo, llo] = dynamics_at(problem, t, lo, u);
      const auto [fhi, lhi] = dynamics_at(problem, t, hi, u);
      for (int i = 0; i < 3; ++i) {
        CHECK(jac.dyn_x(i, j) == doctest::Approx((fhi[i] - flo[i]) / (2 * h)).epsilon(1e-5));
      }
      CHECK(jac.cost_x[j] == doctest::Approx((lhi - llo) / (2 * h)).epsilon(1e-5));
    }
    for (int a = 0; a < 2; ++a) {
      Eigen::VectorXd lo = u, hi = u;
      lo[a] -= h;
      hi[a] += h;
      const auto [flo, llo] = dynamics_at(problem, t, x, lo);
      const auto [fhi, lhi] = dynamics_at(problem, t, x, hi);
      for (int i = 0; i < 3; ++i) {
        CHECK(jac.dyn_u(i, a) == doctest::Approx((fhi[i] - flo[i]) / (2 * h)).epsilon(1e-5));
      }
      CHECK(jac.cost_u[a] == doctest::Approx((lhi - llo) / (2 * h)).epsilon(1e-5));
    }
  }
}

TEST_CASE("piecewise control left-limit convention") {
  ControlSpec cs;
  cs.breakpoints = {0.0, 0.5, 1.0};
  cs.pieces = {{"1"}, {"2*t"}};
  const PiecewiseControl control = PiecewiseControl::from_spec(cs, 1);
  CHECK(control.piece_count() == 2);
  CHECK(control.value(0.0)[0] == doctest::Approx(1.0));   // start: first piece
  CHECK(control.value(0.25)[0] == doctest::Approx(1.0));
  CHECK(control.value(0.5)[0] == doctest::Approx(1.0));   // left limit at the seam
  CHECK(control.value(0.75)[0] == doctest::Approx(1.5));
  CHECK(control.value(1.0)[0] == doctest::Approx(2.0));
  CHECK(control.piece_for_step_start(0.5) == 1);  // steps starting at the seam
  CHECK(control.piece_for_step_start(0.0) == 0);
}

TEST_CASE("piecewise control constructors validate") {
  CHECK_THROWS_AS(PiecewiseControl({0.0, 0.0}, {{Expr::constant(1.0)}}),
                  ValidationError);
  CHECK_THROWS_AS(PiecewiseControl({0.0}, {}), ValidationError);

  ControlSpec cs;
  cs.breakpoints = {0.0, 1.0};
  cs.pieces = {{"v"}};  // unknown variable: only t is allowed
  CHECK_THROWS_AS(PiecewiseControl::from_spec(cs, 1), ValidationError);

  const PiecewiseControl c =
      PiecewiseControl::constants(0.0, 2.0, Eigen::VectorXd::Constant(2, 3.0));
  CHECK(c.control_dim() == 2);
  CHECK(c.value(1.7)[1] == doctest::Approx(3.0));

  const PiecewiseControl e =
      PiecewiseControl::from_expressions(0.0, 1.0, {"cos(t)", "sin(t)"});
  CHECK(e.value(0.5)[0] == doctest::Approx(std::cos(0.5)));
  CHECK(e.value(0.5)[1] == doctest::Approx(std::sin(0.5)));
}

TEST_CASE("control validation against a problem spec") {
  const ProblemSpec spec = catalog_spec("heisenberg");

  ControlSpec good;
  good.breakpoints = {0.0, 1.0};
  good.pieces = {{"cos(t)", "sin(t)"}};
  CHECK(validate(spec, good).empty());

  ControlSpec bad = good;
  bad.pieces = {{"cos(t)"}};  // wrong control dimension
  CHECK_FALSE(validate(spec, bad).empty());

  bad = good;
  bad.breakpoints = {0.0, 0.5};  // does not span the horizon
  CHECK_FALSE(validate(spec, bad).empty());

  bad = good;
  bad.breakpoints = {0.0, 0.5, 0.5, 1.0};  // not strictly increasing
  bad.pieces = {{"1", "0"}, {"1", "0"}, {"1", "0"}};
  CHECK_FALSE(validate(spec, bad).empty());
}

TEST_CASE("composite flow schedule validation") {
  const ControlProblem problem = catalog("lqr1d");
  CompositeFlowSchedule schedule;
  schedule.legs.push_back({Eigen::VectorXd::Constant(1, 1.0), 0.4});
  schedule.legs.push_back({Eigen::VectorXd::Constant(1, -1.0), 0.6});
  CHECK(validate(problem, schedule).empty());
  CHECK(schedule.total_duration() == doctest::Approx(1.0));

  schedule.legs.push_back({Eigen::VectorXd::Constant(1, 0.0), 0.5});
  CHECK_FALSE(validate(problem, schedule).empty());  // exceeds the horizon

  CompositeFlowSchedule bad_dim;
  bad_dim.legs.push_back({Eigen::VectorXd::Constant(2, 1.0), 0.5});
  CHECK_FALSE(validate(problem, bad_dim).empty());

  CompositeFlowSchedule bad_dur;
  bad_dur.legs.push_back({Eigen::VectorXd::Constant(1, 1.0), -0.1});
  CHECK_FALSE(validate(problem, bad_dur).empty());
}
