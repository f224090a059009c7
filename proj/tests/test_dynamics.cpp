#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hisd/dynamics.hpp"

using namespace hisd;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

std::unique_ptr<EnergyModel> quad(double a, double b) {
  Vector s(2);
  s << a, b;
  return make_quadratic(s);
}

UnstableBasis basis_e1() {
  UnstableBasis b;
  b.vectors = Matrix::Identity(2, 1);
  b.values = Vector::Constant(1, -1.0);
  return b;
}

}  // namespace

TEST_CASE("gradient descent on a convex quadratic") {
  auto model = quad(1, 2);
  FlowConfig cfg;
  cfg.h = 0.05;
  cfg.t_max = 100;
  cfg.grad_tol = 1e-8;
  Trajectory traj = gradient_flow(*model, vec2(1, 1), cfg);
  CHECK(traj.status == FlowStatus::converged);
  CHECK(traj.samples.back().x.norm() <= 1e-7);
  CHECK(traj.samples.back().grad_norm < 1e-8);

  // energy must be monotonically non-increasing
  for (std::size_t i = 1; i < traj.samples.size(); ++i)
    CHECK(traj.samples[i].energy <= traj.samples[i - 1].energy + 1e-15);
  // t strictly increasing
  for (std::size_t i = 1; i < traj.samples.size(); ++i)
    CHECK(traj.samples[i].t > traj.samples[i - 1].t);
}

TEST_CASE("gradient flow from a stationary point converges at t = 0") {
  auto model = quad(1, 2);
  Trajectory traj = gradient_flow(*model, vec2(0, 0), {});
  CHECK(traj.status == FlowStatus::converged);
  CHECK(traj.samples.size() == 1);
  CHECK(traj.samples[0].t == 0.0);
}

TEST_CASE("gradient ascent from a perturbed butterfly minimum diverges") {
  auto model = make_butterfly(1.0);
  FlowConfig cfg;
  cfg.h = 1e-3;
  cfg.t_max = 50;
  Trajectory traj = gradient_flow(*model, vec2(1.49, -0.99), cfg,
                                  FlowDirection::ascent);
  CHECK(traj.status == FlowStatus::diverged);
}

TEST_CASE("ihisd_field formula") {
  FlowConfig cfg;  // beta = gamma = 1, c = 2, s = +1

  SUBCASE("equilibrium at a saddle with alpha = 1") {
    auto model = quad(-1, 2);
    SearchState state;
    state.x = vec2(0, 0);
    state.basis = basis_e1();
    state.alpha = 1.0;
    FieldEval f = ihisd_field(*model, state, cfg);
    CHECK(f.dx.norm() <= 1e-12);
    CHECK(f.dv.norm() <= 1e-12);
    CHECK(f.dalpha == 0.0);
  }

  SUBCASE("alpha = 0, s = +1 reduces to gradient ascent") {
    auto model = quad(-1, 2);
    SearchState state;
    state.x = vec2(0.3, 0.4);
    state.basis = basis_e1();
    state.alpha = 0.0;
    FieldEval f = ihisd_field(*model, state, cfg);
    Vector g = model->gradient(state.x);
    CHECK((f.dx - g).norm() <= 1e-15);
  }

  SUBCASE("hand-evaluated mixed field") {
    auto model = quad(-1, 2);
    SearchState state;
    state.x = vec2(1, 1);
    state.basis = basis_e1();
    state.alpha = 1.0;
    FieldEval f = ihisd_field(*model, state, cfg);
    // g = (-1, 2); dx = -g + 2 <e1, g> e1 = (-1, -2)
    CHECK(f.dx(0) == doctest::Approx(-1.0));
    CHECK(f.dx(1) == doctest::Approx(-2.0));
  }
}

TEST_CASE("integrate_ihisd on quadratic diag(-1,2) converges to the origin") {
  auto model = quad(-1, 2);
  SearchState state;
  state.x = vec2(0.2, 0.3);
  state.basis = basis_e1();
  state.alpha = 0.5;
  FlowConfig cfg;
  cfg.h = 0.01;
  cfg.t_max = 200;
  Trajectory traj = integrate_ihisd(*model, state, cfg);
  CHECK(traj.status == FlowStatus::converged);
  CHECK(state.x.norm() <= 1e-5);
  CHECK(state.alpha > 0.99);

  // basis stays orthonormal at every sample (k = 1: unit norm)
  CHECK(std::abs(state.basis.vectors.col(0).norm() - 1.0) <= 1e-8);
  // alpha nondecreasing along the trajectory
  for (std::size_t i = 1; i < traj.samples.size(); ++i)
    CHECK(traj.samples[i].alpha >= traj.samples[i - 1].alpha);
}

TEST_CASE("euler alpha matches the closed form to O(h)") {
  const double alpha0 = 1e-3, c = 2.0, h = 1e-3;
  auto model = quad(1, 2);  // irrelevant convex model, x pinned at minimum
  SearchState state;
  state.x = vec2(0, 0);
  state.basis.vectors = Matrix(2, 0);
  state.basis.values = Vector(0);
  state.alpha = alpha0;
  FlowConfig cfg;
  cfg.h = h;
  cfg.t_max = 20.0;
  cfg.grad_tol = 0.0;  // force full horizon
  Trajectory traj = integrate_ihisd(*model, state, cfg);
  CHECK(traj.status == FlowStatus::t_max_reached);
  for (const auto& s : traj.samples) {
    double exact = alpha_closed_form(alpha0, c, s.t);
    CHECK(std::abs(s.alpha - exact) <= 5 * h * c);
  }
}

TEST_CASE("alpha_closed_form") {
  CHECK(alpha_closed_form(0.25, 2.0, 0.0) == doctest::Approx(0.25));
  double v = alpha_closed_form(0.5, 2.0, 1.0);
  CHECK(v == doctest::Approx(std::exp(2.0) / (1.0 + std::exp(2.0))));
  CHECK(std::abs(alpha_closed_form(0.5, 2.0, 25.0) - 1.0) <= 1e-12);
  CHECK_THROWS_AS(alpha_closed_form(0.0, 2.0, 1.0), InvalidInputError);
  CHECK_THROWS_AS(alpha_closed_form(1.0, 2.0, 1.0), InvalidInputError);
}

TEST_CASE("pinned alpha reproduces an independent HiSD stepper") {
  auto model = quad(-1, 2);
  FlowConfig cfg;
  cfg.h = 0.01;
  cfg.t_max = 3.0;
  cfg.grad_tol = 0.0;
  cfg.rate_c = 0.0;  // pin alpha

  SearchState state;
  state.x = vec2(0.4, 0.5);
  state.basis = basis_e1();
  state.alpha = 1.0;
  Trajectory traj = integrate_ihisd(*model, state, cfg);

  // independently coded HiSD Euler stepper: x' = x - h R g. On the diagonal
  // quadratic the v-flow leaves e1 fixed, so the reference can pin it.
  Vector x = vec2(0.4, 0.5);
  Vector v = Vector::Unit(2, 0);
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    Vector g = model->gradient(x);
    Vector d = (-1.0) * g;
    d += (2.0 * 1.0 * v.dot(g)) * v;
    x += cfg.h * d;
    CHECK((traj.samples[i].x - x).norm() <= 1e-12);
  }
}

TEST_CASE("trajectory CSV format") {
  auto model = quad(1, 2);
  FlowConfig cfg;
  cfg.h = 0.1;
  cfg.t_max = 0.35;
  cfg.grad_tol = 1e-12;
  Trajectory traj = gradient_flow(*model, vec2(1, 1), cfg);
  std::ostringstream os;
  write_trajectory_csv(traj, os);
  std::string text = os.str();
  CHECK(text.rfind("step,t,alpha,energy,grad_norm,x0,x1\n", 0) == 0);
  // one line per sample plus header
  std::size_t lines = 0;
  for (char ch : text)
    if (ch == '\n') ++lines;
  CHECK(lines == traj.samples.size() + 1);
  // 17 significant digits survive a round trip
  std::istringstream in(text);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  double t, alpha, energy, grad, x0v, x1v;
  long step;
  char comma;
  std::istringstream row(first);
  row >> step >> comma >> t >> comma >> alpha >> comma >> energy >> comma >>
      grad >> comma >> x0v >> comma >> x1v;
  CHECK(energy == traj.samples[0].energy);
  CHECK(x0v == traj.samples[0].x(0));
}
