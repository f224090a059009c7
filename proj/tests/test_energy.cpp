#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "hisd/energy.hpp"

using namespace hisd;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector quad_spec2(double a, double b) {
  Vector s(2);
  s << a, b;
  return s;
}

}  // namespace

TEST_CASE("butterfly energy values") {
  auto model = make_butterfly(1.0);
  CHECK(model->dim() == 2);
  CHECK(model->energy(vec2(0, 0)) == doctest::Approx(0.0));
  // hand-substituted at (1, 1): 1 - 2 + 1 + 1 - 1.5 + 1 - 1 = -0.5
  CHECK(model->energy(vec2(1, 1)) == doctest::Approx(-0.5));
  // the c=1 ground states sit at (+-1.5, -1) with E = -2.0625
  CHECK(model->energy(vec2(1.5, -1)) == doctest::Approx(-2.0625));
  CHECK(model->gradient(vec2(1.5, -1)).norm() == doctest::Approx(0.0));
  CHECK(model->gradient(vec2(-1.5, -1)).norm() == doctest::Approx(0.0));
}

TEST_CASE("butterfly gradient and hessian at the origin") {
  for (double c : {0.5, 1.0, 1.5, 2.0}) {
    auto model = make_butterfly(c);
    CHECK(model->gradient(vec2(0, 0)).norm() == 0.0);
    Matrix h = model->dense_hessian(vec2(0, 0));
    CHECK(h(0, 0) == doctest::Approx(-4.0));
    CHECK(h(1, 1) == doctest::Approx(2.0));
    CHECK(h(0, 1) == doctest::Approx(0.0));
  }
}

TEST_CASE("quadratic model") {
  auto model = make_quadratic(quad_spec2(-1, 2));
  CHECK(model->energy(vec2(0, 0)) == 0.0);
  Vector g = model->gradient(vec2(1, 1));
  CHECK(g(0) == doctest::Approx(-1.0));
  CHECK(g(1) == doctest::Approx(2.0));
  Matrix h = model->dense_hessian(vec2(3, -7));
  CHECK(h(0, 0) == -1.0);
  CHECK(h(1, 1) == 2.0);
  CHECK(h(0, 1) == 0.0);
  REQUIRE(model->quadratic_spectrum() != nullptr);
}

TEST_CASE("morse dimer at unit separation") {
  auto model = make_morse_cluster(2, 6.0);
  Vector x(4);
  x << 0, 0, 1, 0;
  CHECK(model->energy(x) == doctest::Approx(-1.0));  // V(1) = 1 - 2
  CHECK(model->gradient(x).norm() == doctest::Approx(0.0));
  CHECK(model->symmetry() == Symmetry::planar_cluster);
  CHECK(model->symmetry_zero_modes() == 3);
}

TEST_CASE("morse coincident particles raise a domain error") {
  auto model = make_morse_cluster(2, 6.0);
  Vector x(4);
  x << 0.5, 0.5, 0.5, 0.5;
  CHECK_THROWS_AS(model->energy(x), NumericDomainError);
}

TEST_CASE("dimension mismatch raises invalid input") {
  auto model = make_butterfly(1.0);
  Vector x(3);
  x << 1, 2, 3;
  CHECK_THROWS_AS(model->energy(x), InvalidInputError);
  CHECK_THROWS_AS(model->gradient(x), InvalidInputError);
}

TEST_CASE("hessian_vector") {
  auto quad = make_quadratic(quad_spec2(-1, 2));
  Vector v = vec2(1, 0);
  Vector hv = quad->hessian_vector(vec2(0.3, 0.7), v);
  CHECK(hv(0) == doctest::Approx(-1.0));
  CHECK(hv(1) == doctest::Approx(0.0));

  auto butterfly = make_butterfly(1.0);
  Vector hv2 = butterfly->hessian_vector(vec2(0, 0), v);
  CHECK(hv2(0) == doctest::Approx(-4.0));
  CHECK(hv2(1) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(butterfly->hessian_vector(vec2(0, 0), vec2(0, 0)),
                  InvalidInputError);
  DimerSettings bad;
  bad.half_length = -1.0;
  CHECK_THROWS_AS(butterfly->hessian_vector(vec2(0, 0), v, bad),
                  InvalidInputError);
}

TEST_CASE("finite-difference hessian products are near exact on quadratics") {
  // zero third derivative makes the central difference exact up to rounding
  struct FdOnly : EnergyModel {
    FdOnly() : EnergyModel("fdonly", 2, Symmetry::none, {}) {}
    double energy_impl(const Vector& x) const override {
      return 0.5 * (-x(0) * x(0) + 2 * x(1) * x(1));
    }
    Vector gradient_impl(const Vector& x) const override {
      Vector g(2);
      g << -x(0), 2 * x(1);
      return g;
    }
  } fd_model;

  DimerSettings settings;
  settings.half_length = 1e-4;
  Vector hv = fd_model.hessian_vector(vec2(0.4, -0.2), vec2(1, 0), settings);
  CHECK(std::abs(hv(0) - (-1.0)) <= 1e-10);
  CHECK(std::abs(hv(1)) <= 1e-10);
}

TEST_CASE("dense hessian cap") {
  struct Big : EnergyModel {
    Big() : EnergyModel("big", 600, Symmetry::none, {}) {}
    double energy_impl(const Vector& x) const override {
      return 0.5 * x.squaredNorm();
    }
    Vector gradient_impl(const Vector& x) const override { return x; }
  } big;
  CHECK_THROWS_AS(big.dense_hessian(Vector::Zero(600)),
                  UnsupportedOperationError);
  // hessian_vector still works matrix-free
  Vector v = Vector::Unit(600, 3);
  Vector hv = big.hessian_vector(Vector::Zero(600), v);
  CHECK((hv - v).norm() <= 1e-9);
}

TEST_CASE("fd_check on all benchmark models") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> box(-2.0, 2.0);

  auto butterfly = make_butterfly(1.0);
  for (int t = 0; t < 20; ++t) {
    FdReport rep = fd_check(*butterfly, vec2(box(rng), box(rng)));
    CHECK(rep.grad_rel_err <= 1e-5);
    CHECK(rep.hess_rel_err <= 1e-5);
  }

  auto quad = make_quadratic(quad_spec2(-1, 2));
  FdReport repq = fd_check(*quad, vec2(1.3, -0.8));
  CHECK(repq.grad_rel_err <= 1e-10);
  CHECK(repq.hess_rel_err <= 1e-10);

  auto morse = make_morse_cluster(4, 6.0);
  std::uniform_real_distribution<double> pos(0.0, 2.5);
  int done = 0;
  while (done < 20) {
    Vector x(8);
    for (int i = 0; i < 8; ++i) x(i) = pos(rng);
    bool ok = true;
    for (int i = 0; i < 4 && ok; ++i)
      for (int j = i + 1; j < 4 && ok; ++j)
        if (std::hypot(x(2 * i) - x(2 * j), x(2 * i + 1) - x(2 * j + 1)) < 0.3)
          ok = false;
    if (!ok) continue;
    FdReport rep = fd_check(*morse, x);
    CHECK(rep.grad_rel_err <= 1e-5);
    CHECK(rep.hess_rel_err <= 1e-5);
    ++done;
  }
}

TEST_CASE("morse translation and rotation invariance") {
  auto model = make_morse_cluster(4, 1.5);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(0.0, 2.0);
  Vector x(8);
  for (int i = 0; i < 8; ++i) x(i) = pos(rng);

  double e0 = model->energy(x);

  Vector shifted = x;
  for (int i = 0; i < 4; ++i) {
    shifted(2 * i) += 5.0;
    shifted(2 * i + 1) += 7.0;
  }
  CHECK(std::abs(model->energy(shifted) - e0) <= 1e-10);

  double th = M_PI / 6;
  Vector rotated(8);
  for (int i = 0; i < 4; ++i) {
    rotated(2 * i) = std::cos(th) * x(2 * i) - std::sin(th) * x(2 * i + 1);
    rotated(2 * i + 1) = std::sin(th) * x(2 * i) + std::cos(th) * x(2 * i + 1);
  }
  CHECK(std::abs(model->energy(rotated) - e0) <= 1e-10);

  // gradient components sum to zero (translation invariance)
  Vector g = model->gradient(x);
  double sx = 0, sy = 0;
  for (int i = 0; i < 4; ++i) {
    sx += g(2 * i);
    sy += g(2 * i + 1);
  }
  CHECK(std::abs(sx) <= 1e-10);
  CHECK(std::abs(sy) <= 1e-10);
}

TEST_CASE("morse square pattern at a=1.5 has three near-zero eigenvalues") {
  auto model = make_morse_cluster(4, 1.5);
  // stationary square: side solves 4 V'(s) + 2 sqrt(2) V'(s sqrt2) = 0
  double a = 1.5;
  auto vp = [a](double r) {
    return -2 * a * std::exp(-2 * a * (r - 1)) + 2 * a * std::exp(-a * (r - 1));
  };
  auto f = [&](double s) { return 4 * vp(s) + 2 * std::sqrt(2.0) * vp(s * std::sqrt(2.0)); };
  double lo = 0.7, hi = 1.5;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if ((f(mid) < 0) == (f(lo) < 0)) lo = mid;
    else hi = mid;
  }
  double s = 0.5 * (lo + hi);
  Vector x(8);
  x << 0, 0, s, 0, s, s, 0, s;
  CHECK(model->gradient(x).norm() <= 1e-9);

  Matrix h = model->dense_hessian(x);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  double zeta = 1e-6 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  int zeros = 0;
  for (int i = 0; i < 8; ++i)
    if (std::abs(es.eigenvalues()(i)) < zeta) ++zeros;
  CHECK(zeros == 3);
}

TEST_CASE("model factory") {
  auto b = make_model("butterfly", {{"c", "1.5"}});
  CHECK(b->params().at("c") == 1.5);
  auto m = make_model("morse", {{"a", "6"}, {"n", "4"}});
  CHECK(m->dim() == 8);
  auto q = make_model("quadratic", {{"spectrum", "-1,2"}});
  CHECK(q->dim() == 2);
  CHECK((*q->quadratic_spectrum())(0) == -1.0);
  CHECK_THROWS_AS(make_model("nosuch", {}), InvalidInputError);
  CHECK_THROWS_AS(make_model("butterfly", {{"zzz", "1"}}), InvalidInputError);
  CHECK_THROWS_AS(make_model("quadratic", {}), InvalidInputError);
  CHECK_THROWS_AS(make_model("morse", {{"n", "1"}}), InvalidInputError);
}
