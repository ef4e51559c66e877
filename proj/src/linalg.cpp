#include "optdes/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace optdes {

Matrix require_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw InvalidMatrix("matrix is not square: " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()));
  }
  if (!m.allFinite()) {
    throw InvalidMatrix("matrix has non-finite entries");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw InvalidMatrix("matrix is not symmetric (relative asymmetry " +
                        std::to_string(asym / scale) + ")");
  }
  return 0.5 * (m + m.transpose());
}

EigenDecomposition sym_eig(const Matrix& m) {
  const Matrix sym = require_symmetric(m);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw InvalidMatrix("eigendecomposition failed");
  }
  const Index n = sym.rows();
  EigenDecomposition out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.basis.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    out.basis.col(j) = solver.eigenvectors().col(n - 1 - j);
  }
  return out;
}

Matrix mp_pinv(const Matrix& m, double rank_tol) {
  const EigenDecomposition eig = sym_eig(m);
  const double gmax = eig.eigenvalues.cwiseAbs().maxCoeff();
  const double thr = rank_tol * gmax;
  Vector inv = Vector::Zero(eig.eigenvalues.size());
  for (Index j = 0; j < eig.eigenvalues.size(); ++j) {
    const double g = eig.eigenvalues[j];
    if (std::abs(g) > thr) inv[j] = 1.0 / g;
  }
  return eig.basis * inv.asDiagonal() * eig.basis.transpose();
}

Index rank_of(const Matrix& a, double rank_tol) {
  if (a.size() == 0) return 0;
  if (!a.allFinite()) throw InvalidMatrix("matrix has non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 0.0) return 0;
  const double thr = rank_tol * sv[0];
  Index r = 0;
  for (Index j = 0; j < sv.size(); ++j) {
    if (sv[j] > thr) ++r;
  }
  return r;
}

namespace {

void check_partition(const Matrix& b, Index top_block) {
  if (top_block < 1 || top_block >= b.rows()) {
    throw DimensionError("partition size " + std::to_string(top_block) +
                         " out of range for order " + std::to_string(b.rows()));
  }
}

// Inverse of a symmetric positive definite block through its decomposition;
// eig is the decomposition of the block.
Matrix eig_inverse(const EigenDecomposition& eig) {
  Vector inv(eig.eigenvalues.size());
  for (Index j = 0; j < eig.eigenvalues.size(); ++j) inv[j] = 1.0 / eig.eigenvalues[j];
  return eig.basis * inv.asDiagonal() * eig.basis.transpose();
}

}  // namespace

Matrix schur_complement(const Matrix& b, Index top_block, double rank_tol,
                        bool* pinv_fallback) {
  const Matrix sym = require_symmetric(b);
  check_partition(sym, top_block);
  const Index p = top_block;
  const Index q = sym.rows() - p;
  const Matrix b11 = sym.topLeftCorner(p, p);
  const Matrix b12 = sym.topRightCorner(p, q);
  const Matrix b22 = sym.bottomRightCorner(q, q);

  const EigenDecomposition eig11 = sym_eig(b11);
  const double gmax = eig11.eigenvalues.cwiseAbs().maxCoeff();
  const bool invertible =
      gmax > 0.0 && eig11.eigenvalues.minCoeff() > rank_tol * gmax;
  if (pinv_fallback) *pinv_fallback = !invertible;

  Matrix b11_inv;
  if (invertible) {
    b11_inv = eig_inverse(eig11);
  } else {
    if (!range_check(b12, b11)) {
      throw IllDefinedSchur(
          "top block is singular and the off-diagonal block leaves its column space");
    }
    b11_inv = mp_pinv(b11, rank_tol);
  }
  Matrix s = b22 - b12.transpose() * b11_inv * b12;
  return 0.5 * (s + s.transpose());
}

Matrix block_ginverse(const Matrix& b, Index top_block, double rank_tol) {
  const Matrix sym = require_symmetric(b);
  check_partition(sym, top_block);
  const Index p = top_block;
  const Index q = sym.rows() - p;
  const Matrix b11 = sym.topLeftCorner(p, p);
  const Matrix b12 = sym.topRightCorner(p, q);

  const EigenDecomposition eig11 = sym_eig(b11);
  const double gmax = eig11.eigenvalues.cwiseAbs().maxCoeff();
  if (!(gmax > 0.0) || eig11.eigenvalues.minCoeff() <= rank_tol * gmax) {
    throw SingularTopBlock("top block of order " + std::to_string(p) + " is singular");
  }
  const Matrix b11_inv = eig_inverse(eig11);
  const Matrix s = schur_complement(sym, top_block, rank_tol);
  const Matrix s_minus = mp_pinv(s, rank_tol);

  Matrix g(sym.rows(), sym.cols());
  const Matrix w = b11_inv * b12;  // B11^{-1} B12
  g.topLeftCorner(p, p) = b11_inv + w * s_minus * w.transpose();
  g.topRightCorner(p, q) = -w * s_minus;
  g.bottomLeftCorner(q, p) = g.topRightCorner(p, q).transpose();
  g.bottomRightCorner(q, q) = s_minus;
  return g;
}

bool range_check(const Matrix& a, const Matrix& m, double tol) {
  if (a.rows() != m.rows()) {
    throw DimensionError("range_check: a has " + std::to_string(a.rows()) +
                         " rows, m has order " + std::to_string(m.rows()));
  }
  const Matrix proj = m * mp_pinv(m) * a;
  const double resid = (proj - a).norm();
  return resid <= tol * std::max(1.0, a.norm());
}

}  // namespace optdes
