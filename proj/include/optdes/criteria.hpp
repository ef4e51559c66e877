#pragma once

#include "optdes/common.hpp"
#include "optdes/model.hpp"

#include <limits>

namespace optdes {

/// Kiefer phi_p criterion, p in [-inf, 0]. p = 0 is the D-criterion
/// (geometric mean of the positive eigenvalues), p = -1 the A-criterion and
/// p = -inf the E-criterion (smallest positive eigenvalue). s is the expected
/// number of positive eigenvalues; 0 means "use the interest system's rank".
struct CriterionSpec {
  double p = -1.0;
  Index s = 0;

  bool is_e() const { return std::isinf(p) && p < 0.0; }

  static CriterionSpec D(Index s = 0) { return CriterionSpec{0.0, s}; }
  static CriterionSpec A(Index s = 0) { return CriterionSpec{-1.0, s}; }
  static CriterionSpec E(Index s = 0) {
    return CriterionSpec{-std::numeric_limits<double>::infinity(), s};
  }
};

/// Information matrix together with its numerically positive rank.
struct InfoMatrix {
  Matrix n;
  Index positive_rank = 0;
};

/// phi_p evaluated on a raw spectrum: the positive part of eigs (relative
/// threshold rank_tol) enters the p-mean with normalization 1/s. Returns 0
/// when fewer than s positive eigenvalues remain.
double phi_p_spectrum(const Vector& eigs, Index s, double p, double rank_tol = kRankTol);

double phi_p(const InfoMatrix& n, const CriterionSpec& crit, double rank_tol = kRankTol);

/// Information matrix N_A(xi) = (A^T M^+(xi) A)^{-1} for the full model, with
/// the pseudoinverse taken instead of the inverse when A is rank deficient.
/// Throws InfeasibleDesign when C(A) is not contained in C(M(xi)).
InfoMatrix info_matrix_full(const ModelSpec& spec, const ApproxDesign& xi,
                            const InterestSpec& interest, double rank_tol = kRankTol);

/// N_{Q1}(w) = (Q1^T diag(1/(lambda_i w_i)) Q1)^{-1} in the marginal
/// treatment model; requires w > 0 (throws InfeasibleMarginal otherwise).
InfoMatrix info_matrix_treatment(const ModelSpec& spec, const MarginalTreatmentDesign& w,
                                 const Matrix& q1, double rank_tol = kRankTol);

/// N_K(alpha) = (K^T S^+(alpha) K)^{-1} in the marginal covariate model;
/// requires C(K) within C(S(alpha)) (throws InfeasibleMarginal otherwise).
InfoMatrix info_matrix_covariate(const ModelSpec& spec, const MarginalCovariateDesign& alpha,
                                 const Matrix& k, double rank_tol = kRankTol);

/// Information matrix of the product design w (x) alpha assembled blockwise:
/// diag(N_{Q1}(w), (sum_i lambda_i w_i) N_K(alpha)). Coincides with
/// info_matrix_full(product_design(w, alpha)).
InfoMatrix product_info(const ModelSpec& spec, const MarginalTreatmentDesign& w,
                        const MarginalCovariateDesign& alpha, const InterestSpec& interest,
                        double rank_tol = kRankTol);

/// Efficiency of an exact design against a reference approximate design:
/// phi(N_A(counts/n)) / phi(N_A(reference)). An infeasible exact design has
/// efficiency 0; an infeasible reference throws InfeasibleDesign.
double efficiency(const ModelSpec& spec, const ExactDesign& exact,
                  const ApproxDesign& reference, const InterestSpec& interest,
                  const CriterionSpec& crit);

}  // namespace optdes
