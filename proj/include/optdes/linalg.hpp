#pragma once

#include "optdes/common.hpp"

namespace optdes {

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending.
/// Satisfies m = basis * eigenvalues.asDiagonal() * basis^T.
struct EigenDecomposition {
  Vector eigenvalues;
  Matrix basis;
};

/// Validates that m is square, finite and symmetric to within 1e-12 relative,
/// and returns the symmetrized copy (m + m^T)/2. Throws InvalidMatrix.
Matrix require_symmetric(const Matrix& m);

EigenDecomposition sym_eig(const Matrix& m);

/// Moore-Penrose pseudoinverse of a symmetric matrix. Eigenvalues whose
/// magnitude falls below rank_tol * max|eigenvalue| are treated as zero.
Matrix mp_pinv(const Matrix& m, double rank_tol = kRankTol);

/// Numerical rank of an arbitrary rectangular matrix (relative threshold on
/// singular values).
Index rank_of(const Matrix& a, double rank_tol = kRankTol);

/// Schur complement of the leading top_block x top_block block:
/// B22 - B12^T B11^{-1} B12. Falls back to the pseudoinverse of B11 when the
/// top block is numerically singular; in that case requires the columns of
/// B12 to lie in the column space of B11, else throws IllDefinedSchur.
/// pinv_fallback, when given, reports whether the fallback was taken.
Matrix schur_complement(const Matrix& b, Index top_block, double rank_tol = kRankTol,
                        bool* pinv_fallback = nullptr);

/// Block generalized inverse of a nonnegative definite matrix partitioned at
/// top_block, built from the inverse of B11 and the pseudoinverse of the
/// Schur complement S = B22 - B12^T B11^{-1} B12:
///
///   G = [ B11^{-1} + B11^{-1} B12 S^+ B12^T B11^{-1}   -B11^{-1} B12 S^+ ]
///       [          -S^+ B12^T B11^{-1}                        S^+        ]
///
/// Satisfies B G B = B. Throws SingularTopBlock when B11 is singular.
Matrix block_ginverse(const Matrix& b, Index top_block, double rank_tol = kRankTol);

/// True iff the column space of a is contained in the column space of the
/// symmetric matrix m, tested as ||m m^+ a - a|| <= tol * max(1, ||a||).
bool range_check(const Matrix& a, const Matrix& m, double tol = kFeasTol);

}  // namespace optdes
