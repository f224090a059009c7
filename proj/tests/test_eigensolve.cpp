#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

#include "hisd/eigensolve.hpp"
#include "hisd/verify.hpp"

using namespace hisd;

TEST_CASE("diagonal matrix, k = 2") {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << 3, 1, 2;
  UnstableBasis basis = eigensolve_k(SymmetricOperator::from_matrix(a), 2);
  CHECK(basis.values(0) == doctest::Approx(1.0));
  CHECK(basis.values(1) == doctest::Approx(2.0));
  // sign-normalized: largest component positive
  CHECK(basis.vectors(1, 0) == doctest::Approx(1.0));
  CHECK(basis.vectors(2, 1) == doctest::Approx(1.0));
  CHECK(!basis.degenerate);
}

TEST_CASE("butterfly origin Hessian, k = 1") {
  Matrix h(2, 2);
  h << -4, 0, 0, 2;
  UnstableBasis basis = eigensolve_k(SymmetricOperator::from_matrix(h), 1);
  CHECK(basis.values(0) == doctest::Approx(-4.0));
  CHECK(std::abs(basis.vectors(0, 0)) == doctest::Approx(1.0));
  CHECK(basis.vectors(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("random 6x6 against dense oracle") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 50; ++t) {
    Matrix a = random_symmetric(6, rng);
    UnstableBasis basis = eigensolve_k(SymmetricOperator::from_matrix(a), 3);
    Eigen::SelfAdjointEigenSolver<Matrix> oracle(a);
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(basis.values(i) - oracle.eigenvalues()(i)) <= 1e-8);
  }
}

TEST_CASE("oracle equivalence over random sizes, dense mode") {
  std::mt19937_64 rng(12345);
  std::uniform_int_distribution<int> size_dist(2, 8);
  int angle_checked = 0;
  for (int t = 0; t < 300; ++t) {
    int n = size_dist(rng);
    std::uniform_int_distribution<int> k_dist(1, n);
    int k = k_dist(rng);
    Matrix a = random_symmetric(n, rng);
    UnstableBasis basis = eigensolve_k(SymmetricOperator::from_matrix(a), k);
    Eigen::SelfAdjointEigenSolver<Matrix> oracle(a);
    for (int i = 0; i < k; ++i)
      CHECK(std::abs(basis.values(i) - oracle.eigenvalues()(i)) <= 1e-8);
    double gap =
        k < n ? oracle.eigenvalues()(k) - oracle.eigenvalues()(k - 1) : 1.0;
    if (gap > 1e-4) {
      ++angle_checked;
      Matrix diff = basis.vectors * basis.vectors.transpose() -
                    oracle.eigenvectors().leftCols(k) *
                        oracle.eigenvectors().leftCols(k).transpose();
      CHECK(diff.norm() / std::sqrt(2.0) <= 1e-6);
    }
  }
  CHECK(angle_checked > 100);
}

TEST_CASE("rayleigh quotient sum equals the k lowest eigenvalue sum") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 30; ++t) {
    Matrix a = random_symmetric(7, rng);
    UnstableBasis basis = eigensolve_k(SymmetricOperator::from_matrix(a), 3);
    double sum = 0;
    for (int i = 0; i < 3; ++i)
      sum += basis.vectors.col(i).dot(a * basis.vectors.col(i));
    Eigen::SelfAdjointEigenSolver<Matrix> oracle(a);
    CHECK(std::abs(sum - oracle.eigenvalues().head(3).sum()) <= 1e-8);
  }
}

TEST_CASE("matrix-free block descent") {
  std::mt19937_64 rng(5);
  Matrix a = random_symmetric(30, rng);
  EigenOptions opts;
  opts.mode = EigenMode::matrix_free;
  opts.tol = 1e-9;
  opts.max_iter = 500;
  int applies = 0;
  auto op = SymmetricOperator::from_function(30, [&](const Vector& v) {
    ++applies;
    return Vector(a * v);
  });
  UnstableBasis basis = eigensolve_k(op, 3, opts);
  Eigen::SelfAdjointEigenSolver<Matrix> oracle(a);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(basis.values(i) - oracle.eigenvalues()(i)) <= 1e-6);
    double res = (a * basis.vectors.col(i) -
                  basis.values(i) * basis.vectors.col(i))
                     .norm();
    CHECK(res <= 1e-8 * std::max(1.0, std::abs(basis.values(i))));
  }
  CHECK(applies > 0);

  SUBCASE("warm start from the solution converges immediately") {
    int before = applies;
    UnstableBasis again = eigensolve_k(op, 3, opts, &basis.vectors);
    CHECK(applies - before <= 4 * 3);  // one or two block applications
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(again.values(i) - basis.values(i)) <= 1e-9);
  }
}

TEST_CASE("matrix-free non-convergence carries best residual") {
  std::mt19937_64 rng(6);
  Matrix a = random_symmetric(20, rng);
  EigenOptions opts;
  opts.mode = EigenMode::matrix_free;
  opts.tol = 1e-14;
  opts.max_iter = 1;
  auto op = SymmetricOperator::from_function(
      20, [&](const Vector& v) { return Vector(a * v); });
  try {
    eigensolve_k(op, 2, opts);
    FAIL("expected ConvergenceFailureError");
  } catch (const ConvergenceFailureError& e) {
    CHECK(e.best_residual() > 0.0);
    CHECK(std::isfinite(e.best_residual()));
  }
}

TEST_CASE("deflation removes a known subspace") {
  Matrix a = Matrix::Zero(4, 4);
  a.diagonal() << -2, 0, 1, 3;  // pretend the 0-mode is a symmetry artifact
  Matrix deflate = Matrix::Identity(4, 4).middleCols(1, 1);
  UnstableBasis basis =
      eigensolve_k(SymmetricOperator::from_matrix(a), 2, {}, nullptr, &deflate);
  CHECK(basis.values(0) == doctest::Approx(-2.0));
  CHECK(basis.values(1) == doctest::Approx(1.0));  // 0 skipped
  CHECK(std::abs(basis.vectors.col(0).dot(deflate.col(0))) <= 1e-12);
  CHECK(std::abs(basis.vectors.col(1).dot(deflate.col(0))) <= 1e-12);
}

TEST_CASE("degeneracy flag") {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << 1, 1, 2;
  UnstableBasis basis = eigensolve_k(SymmetricOperator::from_matrix(a), 1);
  CHECK(basis.degenerate);  // boundary gap is zero
  a.diagonal() << 1, 1.5, 2;
  basis = eigensolve_k(SymmetricOperator::from_matrix(a), 1);
  CHECK(!basis.degenerate);
}

TEST_CASE("k = 0 returns an empty basis") {
  Matrix a = Matrix::Identity(3, 3);
  UnstableBasis basis = eigensolve_k(SymmetricOperator::from_matrix(a), 0);
  CHECK(basis.k() == 0);
  CHECK(basis.dim() == 3);
}

TEST_CASE("orthonormalize") {
  SUBCASE("already orthonormal input is unchanged") {
    Matrix v = Matrix::Identity(3, 2);
    Matrix q = orthonormalize(v);
    CHECK((q - v).norm() <= 1e-14);
  }
  SUBCASE("hand Gram-Schmidt example") {
    Matrix v(2, 2);
    v << 1, 1, 0, 1;  // columns (1,0), (1,1)
    Matrix q = orthonormalize(v);
    CHECK(q(0, 0) == doctest::Approx(1.0));
    CHECK(q(1, 0) == doctest::Approx(0.0));
    CHECK(std::abs(q(0, 1)) <= 1e-14);
    CHECK(q(1, 1) == doctest::Approx(1.0));
  }
  SUBCASE("normalization") {
    Matrix v(2, 2);
    v << 2, 0, 0, 3;
    Matrix q = orthonormalize(v);
    CHECK((q - Matrix::Identity(2, 2)).norm() <= 1e-14);
  }
  SUBCASE("rank deficiency throws") {
    Matrix v(3, 2);
    v.col(0) << 1, 1, 0;
    v.col(1) << 2, 2, 0;
    CHECK_THROWS_AS(orthonormalize(v), DegenerateBasisError);
  }
  SUBCASE("orthonormality to 1e-12 on random inputs") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> dist;
    for (int t = 0; t < 50; ++t) {
      Matrix v(6, 3);
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 3; ++j) v(i, j) = dist(rng);
      Matrix q = orthonormalize(v);
      CHECK((q.transpose() * q - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff()
            <= 1e-12);
    }
  }
}

TEST_CASE("morse_index") {
  Vector ev(2);
  ev << -4, 2;
  IndexCount c = morse_index(ev, 1e-6);
  CHECK(c.index == 1);
  CHECK(c.zero_count == 0);

  Vector pos(3);
  pos << 0.5, 1, 2;
  c = morse_index(pos, 1e-6);
  CHECK(c.index == 0);
  CHECK(c.zero_count == 0);

  Vector mixed(5);
  mixed << -3, -1e-9, 0, 1e-9, 7;
  c = morse_index(mixed, 1e-6);
  CHECK(c.index == 1);
  CHECK(c.zero_count == 3);

  CHECK_THROWS_AS(morse_index(ev, -1.0), InvalidInputError);
}

TEST_CASE("reflection_distance") {
  SUBCASE("distance to itself is zero") {
    Matrix g(2, 2);
    g << -1, 0, 0, 1;
    UnstableBasis v;
    v.vectors = Matrix::Identity(2, 1);
    v.values = Vector::Constant(1, -1.0);
    CHECK(reflection_distance(v, g) == doctest::Approx(0.0));
  }
  SUBCASE("hand-computed value") {
    Matrix g(2, 2);
    g << -4, 0, 0, 2;
    UnstableBasis v;
    v.vectors = Matrix::Identity(2, 1);
    v.values = Vector::Constant(1, -4.0);
    // |diag(-1,1) - diag(-4,2)|_F^2 = 9 + 1
    CHECK(reflection_distance(v, g) == doctest::Approx(10.0));
  }
  SUBCASE("dimension mismatch") {
    Matrix g = Matrix::Zero(3, 3);
    UnstableBasis v;
    v.vectors = Matrix::Identity(2, 1);
    v.values = Vector::Zero(1);
    CHECK_THROWS_AS(reflection_distance(v, g), InvalidInputError);
  }
}

TEST_CASE("k-lowest basis is a local minimum of the reflection distance") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    Matrix g = random_symmetric(5, rng);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    bool gapped = true;
    for (int i = 0; i + 1 < 5; ++i)
      if (es.eigenvalues()(i + 1) - es.eigenvalues()(i) < 1e-3) gapped = false;
    if (!gapped) continue;
    for (int k = 1; k <= 4; ++k) {
      UnstableBasis basis;
      basis.vectors = es.eigenvectors().leftCols(k);
      basis.values = es.eigenvalues().head(k);
      double base = reflection_distance(basis, g);
      for (int p = 0; p < 50; ++p) {
        UnstableBasis pert = tangent_perturb(basis, 1e-3, rng);
        CHECK(reflection_distance(pert, g) >= base - 1e-12);
      }
    }
  }
}
