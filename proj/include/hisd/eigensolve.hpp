#pragma once

#include <functional>

#include "hisd/energy.hpp"

namespace hisd {

/// Orthonormal basis of a low-dimensional unstable subspace together with
/// the Rayleigh quotients of its vectors, ascending. Spans ker(R + I) of
/// the reflection R = I - 2 sum_i v_i v_i^T.
struct UnstableBasis {
  Matrix vectors;  // n x k, orthonormal columns
  Vector values;   // k Rayleigh quotients, ascending
  /// Set when an eigenvalue gap inside or at the boundary of the returned
  /// block is below 1e-10; the subspace is then not uniquely determined.
  bool degenerate = false;

  int dim() const { return static_cast<int>(vectors.rows()); }
  int k() const { return static_cast<int>(vectors.cols()); }
};

enum class EigenMode { dense, matrix_free };

struct EigenOptions {
  EigenMode mode = EigenMode::dense;
  double tol = 1e-8;
  int max_iter = 0;  // 0 selects 10 * n
};

/// A symmetric linear map, either backed by an explicit dense matrix or by
/// a matrix-vector product callback.
class SymmetricOperator {
 public:
  static SymmetricOperator from_matrix(Matrix a);
  static SymmetricOperator from_function(
      int dim, std::function<Vector(const Vector&)> apply);

  int dim() const { return dim_; }
  Vector apply(const Vector& v) const;
  /// Dense representation, or nullptr for purely functional operators.
  const Matrix* dense() const { return have_dense_ ? &dense_ : nullptr; }

 private:
  SymmetricOperator() = default;
  int dim_ = 0;
  bool have_dense_ = false;
  Matrix dense_;
  std::function<Vector(const Vector&)> apply_;
};

/// Full dense eigendecomposition by cyclic Jacobi rotations; eigenvalues
/// ascending, eigenvectors as columns. Matrix must be symmetric.
void dense_eigh(const Matrix& a, Vector& values, Matrix& vectors);

/// Returns the k lowest eigenpairs of the operator. Dense mode runs cyclic
/// Jacobi on the full matrix (materialized column-by-column when only a
/// callback is available); matrix-free mode runs a block Rayleigh-quotient
/// descent with Rayleigh-Ritz extraction, warm-started from `warm_start`
/// when given. Columns of `deflate` (orthonormal) are projected out first,
/// so the solve happens on their orthogonal complement.
UnstableBasis eigensolve_k(const SymmetricOperator& op, int k,
                           const EigenOptions& opts = {},
                           const Matrix* warm_start = nullptr,
                           const Matrix* deflate = nullptr);

/// Modified Gram-Schmidt with reorthogonalization. Preserves span and
/// column order; throws DegenerateBasisError on rank deficiency.
Matrix orthonormalize(const Matrix& v);

struct IndexCount {
  int index = 0;       // eigenvalues below -zero_threshold
  int zero_count = 0;  // eigenvalues with |lambda| <= zero_threshold
};

IndexCount morse_index(const Vector& eigenvalues, double zero_threshold);

/// Squared Frobenius distance |R - G|_F^2 with R = I - 2 sum v_i v_i^T.
double reflection_distance(const UnstableBasis& basis, const Matrix& g);

}  // namespace hisd
