#include "optdes/criteria.hpp"

#include "optdes/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace optdes {

namespace {

std::vector<double> positive_part(const Vector& eigs, double rank_tol) {
  double gmax = 0.0;
  for (Index j = 0; j < eigs.size(); ++j) gmax = std::max(gmax, eigs[j]);
  std::vector<double> pos;
  if (gmax <= 0.0) return pos;
  const double thr = rank_tol * gmax;
  for (Index j = 0; j < eigs.size(); ++j) {
    if (eigs[j] > thr) pos.push_back(eigs[j]);
  }
  std::sort(pos.begin(), pos.end(), std::greater<double>());
  return pos;
}

/// Inverts a PSD matrix on its numerically positive eigenspace. positive_rank
/// reports how many eigenvalues were inverted; the inverse equals the plain
/// inverse whenever the matrix has full rank.
InfoMatrix invert_psd(const Matrix& j, double rank_tol) {
  const EigenDecomposition eig = sym_eig(j);
  const double gmax = std::max(0.0, eig.eigenvalues.maxCoeff());
  const double thr = rank_tol * gmax;
  Vector inv = Vector::Zero(eig.eigenvalues.size());
  Index positive = 0;
  for (Index t = 0; t < eig.eigenvalues.size(); ++t) {
    if (eig.eigenvalues[t] > thr) {
      inv[t] = 1.0 / eig.eigenvalues[t];
      ++positive;
    }
  }
  InfoMatrix out;
  out.n = eig.basis * inv.asDiagonal() * eig.basis.transpose();
  out.positive_rank = positive;
  return out;
}

}  // namespace

double phi_p_spectrum(const Vector& eigs, Index s, double p, double rank_tol) {
  const std::vector<double> pos = positive_part(eigs, rank_tol);
  if (s <= 0) s = static_cast<Index>(pos.size());
  if (static_cast<Index>(pos.size()) < s || s == 0) return 0.0;
  // Use the s largest positive eigenvalues (equal to all of them in the
  // non-degenerate case).
  if (std::isinf(p) && p < 0.0) {
    return pos[s - 1];
  }
  if (p == 0.0) {
    double logsum = 0.0;
    for (Index t = 0; t < s; ++t) logsum += std::log(pos[t]);
    return std::exp(logsum / static_cast<double>(s));
  }
  // ((1/s) sum gamma^p)^{1/p}, evaluated in the log domain so that very
  // negative p stays finite.
  const double lmin = std::log(pos[s - 1]);
  double acc = 0.0;
  for (Index t = 0; t < s; ++t) {
    acc += std::exp(p * (std::log(pos[t]) - lmin));
  }
  return std::exp(lmin + (std::log(acc) - std::log(static_cast<double>(s))) / p);
}

double phi_p(const InfoMatrix& n, const CriterionSpec& crit, double rank_tol) {
  const EigenDecomposition eig = sym_eig(n.n);
  const Index s = crit.s > 0 ? crit.s : n.positive_rank;
  return phi_p_spectrum(eig.eigenvalues, s, crit.p, rank_tol);
}

InfoMatrix info_matrix_full(const ModelSpec& spec, const ApproxDesign& xi,
                            const InterestSpec& interest, double rank_tol) {
  const Matrix m = moment_matrix(spec, xi);
  if (!range_check(interest.a, m)) {
    throw InfeasibleDesign(
        "design infeasible for the interest system: column space of A is not "
        "contained in the column space of M(xi)");
  }
  const Matrix j = interest.a.transpose() * mp_pinv(m, rank_tol) * interest.a;
  return invert_psd(require_symmetric(j), rank_tol);
}

InfoMatrix info_matrix_treatment(const ModelSpec& spec, const MarginalTreatmentDesign& w,
                                 const Matrix& q1, double rank_tol) {
  if (w.w.size() != spec.v1 || q1.rows() != spec.v1) {
    throw DimensionError("treatment information: dimension mismatch");
  }
  if (w.w.minCoeff() <= 0.0) {
    throw InfeasibleMarginal("marginal treatment design has a zero weight; w > 0 required");
  }
  const Vector inv_mw = (spec.lambda.array() * w.w.array()).inverse().matrix();
  const Matrix j = q1.transpose() * inv_mw.asDiagonal() * q1;
  return invert_psd(require_symmetric(j), rank_tol);
}

InfoMatrix info_matrix_covariate(const ModelSpec& spec, const MarginalCovariateDesign& alpha,
                                 const Matrix& k, double rank_tol) {
  if (alpha.alpha.size() != spec.d || k.rows() != spec.v2) {
    throw DimensionError("covariate information: dimension mismatch");
  }
  const Matrix s = covariate_moment(spec, alpha).schur;
  if (!range_check(k, s)) {
    throw InfeasibleMarginal(
        "marginal covariate design infeasible: column space of K is not contained "
        "in the column space of S(alpha)");
  }
  const Matrix j = k.transpose() * mp_pinv(s, rank_tol) * k;
  return invert_psd(require_symmetric(j), rank_tol);
}

InfoMatrix product_info(const ModelSpec& spec, const MarginalTreatmentDesign& w,
                        const MarginalCovariateDesign& alpha, const InterestSpec& interest,
                        double rank_tol) {
  const Index s1 = interest.s1();
  const Index s2 = interest.s2();
  InfoMatrix out;
  out.n = Matrix::Zero(s1 + s2, s1 + s2);
  out.positive_rank = 0;
  if (s1 > 0) {
    const InfoMatrix nt = info_matrix_treatment(spec, w, interest.q1, rank_tol);
    out.n.topLeftCorner(s1, s1) = nt.n;
    out.positive_rank += nt.positive_rank;
  }
  if (s2 > 0) {
    const InfoMatrix nc = info_matrix_covariate(spec, alpha, interest.k, rank_tol);
    const double total = spec.lambda.dot(w.w);
    out.n.bottomRightCorner(s2, s2) = total * nc.n;
    out.positive_rank += nc.positive_rank;
  }
  return out;
}

double efficiency(const ModelSpec& spec, const ExactDesign& exact,
                  const ApproxDesign& reference, const InterestSpec& interest,
                  const CriterionSpec& crit) {
  if (exact.n <= 0) throw InvalidDesign("exact design has no trials");
  double phi_ref = 0.0;
  try {
    phi_ref = phi_p(info_matrix_full(spec, reference, interest), crit);
  } catch (const InfeasibleDesign&) {
    throw;
  }
  if (phi_ref <= 0.0) {
    throw InfeasibleDesign("reference design has zero criterion value");
  }
  Vector xi = exact.counts.cast<double>() / static_cast<double>(exact.n);
  double phi_exact = 0.0;
  try {
    phi_exact = phi_p(info_matrix_full(spec, make_approx_design(spec, xi), interest), crit);
  } catch (const InfeasibleDesign&) {
    return 0.0;
  }
  return phi_exact / phi_ref;
}

}  // namespace optdes
