#include "hisd/eigensolve.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace hisd {

SymmetricOperator SymmetricOperator::from_matrix(Matrix a) {
  if (a.rows() != a.cols())
    throw InvalidInputError("SymmetricOperator: matrix must be square");
  SymmetricOperator op;
  op.dim_ = static_cast<int>(a.rows());
  op.have_dense_ = true;
  op.dense_ = std::move(a);
  return op;
}

SymmetricOperator SymmetricOperator::from_function(
    int dim, std::function<Vector(const Vector&)> apply) {
  if (dim < 1) throw InvalidInputError("SymmetricOperator: dim must be >= 1");
  SymmetricOperator op;
  op.dim_ = dim;
  op.apply_ = std::move(apply);
  return op;
}

Vector SymmetricOperator::apply(const Vector& v) const {
  if (v.size() != dim_)
    throw InvalidInputError("SymmetricOperator: dimension mismatch");
  return have_dense_ ? Vector(dense_ * v) : apply_(v);
}

// ---------------------------------------------------------------------------
// Cyclic Jacobi
// ---------------------------------------------------------------------------

void dense_eigh(const Matrix& a_in, Vector& values, Matrix& vectors) {
  if (a_in.rows() != a_in.cols())
    throw InvalidInputError("dense_eigh: matrix must be square");
  const int n = static_cast<int>(a_in.rows());
  Matrix a = 0.5 * (a_in + a_in.transpose());
  Matrix v = Matrix::Identity(n, n);

  auto off_norm = [&a, n]() {
    double s = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) s += a(p, q) * a(p, q);
    return std::sqrt(2.0 * s);
  };

  const double scale = std::max(1.0, a.norm());
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off_norm() <= 1e-15 * scale) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (std::abs(apq) <= 1e-18 * scale) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int i = 0; i < n; ++i) {
          double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (int i = 0; i < n; ++i) {
          double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&a](int i, int j) { return a(i, i) < a(j, j); });
  values.resize(n);
  vectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    values(i) = a(order[i], order[i]);
    vectors.col(i) = v.col(order[i]);
  }
}

namespace {

void normalize_signs(Matrix& vectors) {
  for (int j = 0; j < vectors.cols(); ++j) {
    int imax = 0;
    vectors.col(j).cwiseAbs().maxCoeff(&imax);
    if (vectors(imax, j) < 0.0) vectors.col(j) = -vectors.col(j);
  }
}

// Projects the columns of `deflate` out of v, in place.
void deflate_vector(Vector& v, const Matrix* deflate) {
  if (deflate == nullptr || deflate->cols() == 0) return;
  v -= *deflate * (deflate->transpose() * v);
}

void deflate_columns(Matrix& m, const Matrix* deflate) {
  if (deflate == nullptr || deflate->cols() == 0) return;
  m -= *deflate * (deflate->transpose() * m);
}

UnstableBasis finish_basis(Matrix vectors, Vector values, double boundary_gap) {
  UnstableBasis basis;
  basis.degenerate = false;
  const int k = static_cast<int>(values.size());
  for (int i = 0; i + 1 < k; ++i)
    if (values(i + 1) - values(i) < 1e-10) basis.degenerate = true;
  if (boundary_gap >= 0.0 && boundary_gap < 1e-10) basis.degenerate = true;
  normalize_signs(vectors);
  basis.vectors = std::move(vectors);
  basis.values = std::move(values);
  return basis;
}

UnstableBasis eigensolve_dense(const SymmetricOperator& op, int k,
                               const Matrix* deflate) {
  const int n = op.dim();
  Matrix a;
  if (op.dense() != nullptr) {
    a = *op.dense();
  } else {
    a.resize(n, n);
    Vector e = Vector::Zero(n);
    for (int j = 0; j < n; ++j) {
      e(j) = 1.0;
      a.col(j) = op.apply(e);
      e(j) = 0.0;
    }
    a = 0.5 * (a + a.transpose()).eval();
  }

  if (deflate != nullptr && deflate->cols() > 0) {
    // Solve on the orthogonal complement of the deflation subspace.
    const int m = static_cast<int>(deflate->cols());
    Matrix full(n, n);
    full.leftCols(m) = *deflate;
    full.rightCols(n - m) = Matrix::Identity(n, n).leftCols(n - m);
    // Complete to an orthonormal basis with a QR factorization.
    Eigen::HouseholderQR<Matrix> qr(full);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    Matrix comp = q.rightCols(n - m);
    Matrix reduced = comp.transpose() * a * comp;
    Vector values;
    Matrix vecs;
    dense_eigh(reduced, values, vecs);
    if (k > n - m)
      throw InvalidInputError("eigensolve_k: k exceeds deflated dimension");
    double boundary = k < n - m ? values(k) - values(k - 1) : -1.0;
    return finish_basis(comp * vecs.leftCols(k), values.head(k), boundary);
  }

  Vector values;
  Matrix vecs;
  dense_eigh(a, values, vecs);
  double boundary = k < n ? values(k) - values(k - 1) : -1.0;
  return finish_basis(vecs.leftCols(k), values.head(k), boundary);
}

UnstableBasis eigensolve_matrix_free(const SymmetricOperator& op, int k,
                                     const EigenOptions& opts,
                                     const Matrix* warm_start,
                                     const Matrix* deflate) {
  const int n = op.dim();
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * n;

  Matrix x;
  if (warm_start != nullptr && warm_start->rows() == n &&
      warm_start->cols() == k) {
    x = *warm_start;
  } else {
    std::mt19937_64 rng(0x5eed5eedULL);
    std::normal_distribution<double> dist;
    x.resize(n, k);
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < n; ++i) x(i, j) = dist(rng);
  }
  deflate_columns(x, deflate);
  x = orthonormalize(x);

  auto apply_block = [&](const Matrix& b) {
    Matrix out(n, b.cols());
    for (int j = 0; j < b.cols(); ++j) {
      Vector col = op.apply(b.col(j));
      deflate_vector(col, deflate);
      out.col(j) = col;
    }
    return out;
  };

  Matrix p(n, 0);
  double best_residual = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iter; ++iter) {
    Matrix ax = apply_block(x);
    Vector rho(k);
    for (int j = 0; j < k; ++j) rho(j) = x.col(j).dot(ax.col(j));
    Matrix resid = ax - x * rho.asDiagonal();

    double worst = 0.0;
    for (int j = 0; j < k; ++j)
      worst = std::max(worst,
                       resid.col(j).norm() / std::max(1.0, std::abs(rho(j))));
    best_residual = std::min(best_residual, worst);
    if (worst <= opts.tol) {
      // Rayleigh-Ritz once more inside span(x) to get sorted values.
      Matrix t = x.transpose() * ax;
      t = 0.5 * (t + t.transpose()).eval();
      Vector tv;
      Matrix tw;
      dense_eigh(t, tv, tw);
      return finish_basis(x * tw, tv, -1.0);
    }

    // Subspace [x, residuals, previous step], trimmed of dependent columns.
    Matrix s(n, x.cols() + resid.cols() + p.cols());
    s.leftCols(x.cols()) = x;
    s.middleCols(x.cols(), resid.cols()) = resid;
    if (p.cols() > 0) s.rightCols(p.cols()) = p;

    // Tolerant Gram-Schmidt: drop columns that lose rank.
    Matrix q(n, s.cols());
    int kept = 0;
    for (int j = 0; j < s.cols(); ++j) {
      Vector v = s.col(j);
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i < kept; ++i) v -= q.col(i) * q.col(i).dot(v);
      double nv = v.norm();
      if (nv > 1e-10 * std::max(1.0, s.col(j).norm())) {
        q.col(kept++) = v / nv;
      }
    }
    Matrix basis = q.leftCols(kept);

    Matrix ab = apply_block(basis);
    Matrix t = basis.transpose() * ab;
    t = 0.5 * (t + t.transpose()).eval();
    Vector tv;
    Matrix tw;
    dense_eigh(t, tv, tw);
    if (kept < k)
      throw ConvergenceFailureError(
          "eigensolve_k: subspace collapsed below block size", best_residual);

    Matrix x_new = basis * tw.leftCols(k);
    p = x_new - x;
    x = x_new;
  }
  throw ConvergenceFailureError(
      "eigensolve_k: no convergence within max_iter", best_residual);
}

}  // namespace

UnstableBasis eigensolve_k(const SymmetricOperator& op, int k,
                           const EigenOptions& opts, const Matrix* warm_start,
                           const Matrix* deflate) {
  const int n = op.dim();
  if (k < 0 || k > n)
    throw InvalidInputError("eigensolve_k: need 0 <= k <= dim");
  if (deflate != nullptr && k > n - deflate->cols())
    throw InvalidInputError("eigensolve_k: k exceeds deflated dimension");
  if (k == 0) {
    UnstableBasis basis;
    basis.vectors = Matrix(n, 0);
    basis.values = Vector(0);
    return basis;
  }
  if (opts.mode == EigenMode::dense)
    return eigensolve_dense(op, k, deflate);
  return eigensolve_matrix_free(op, k, opts, warm_start, deflate);
}

Matrix orthonormalize(const Matrix& v) {
  const int n = static_cast<int>(v.rows());
  const int k = static_cast<int>(v.cols());
  if (k > n)
    throw InvalidInputError("orthonormalize: more vectors than dimensions");
  Matrix q(n, k);
  for (int j = 0; j < k; ++j) {
    Vector w = v.col(j);
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i < j; ++i) w -= q.col(i) * q.col(i).dot(w);
    double nw = w.norm();
    if (nw <= 1e-12 * std::max(1.0, v.col(j).norm()))
      throw DegenerateBasisError("orthonormalize: rank-deficient input");
    q.col(j) = w / nw;
  }
  return q;
}

IndexCount morse_index(const Vector& eigenvalues, double zero_threshold) {
  if (zero_threshold < 0.0)
    throw InvalidInputError("morse_index: threshold must be >= 0");
  IndexCount out;
  for (int i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues(i) < -zero_threshold) ++out.index;
    else if (std::abs(eigenvalues(i)) <= zero_threshold) ++out.zero_count;
  }
  return out;
}

double reflection_distance(const UnstableBasis& basis, const Matrix& g) {
  if (g.rows() != g.cols() || g.rows() != basis.dim())
    throw InvalidInputError("reflection_distance: dimension mismatch");
  Matrix r = Matrix::Identity(basis.dim(), basis.dim()) -
             2.0 * basis.vectors * basis.vectors.transpose();
  return (r - g).squaredNorm();
}

}  // namespace hisd
