#pragma once

#include "optdes/common.hpp"

#include <string>
#include <utility>
#include <vector>

namespace optdes {

/// Experiment description: v1 treatments with per-treatment efficiency
/// multipliers lambda (error variance sigma^2 / lambda_i), and a finite set of
/// d covariate points with regressors g(k) in R^{v2}. The regressor of a grid
/// point (i, k) is f(i,k) = (e_i^T, 1, g(k)^T)^T.
struct ModelSpec {
  Index v1 = 0;
  Index d = 0;
  Index v2 = 0;
  Vector lambda;      // size v1, all > 0
  Matrix covariates;  // d x v2, row k is g(k)^T
  std::vector<std::string> treatment_labels;  // optional
  std::vector<std::string> covariate_labels;  // optional
  std::vector<Index> onehot_groups;  // group sizes when built one-hot, else empty

  Index param_dim() const { return v1 + 1 + v2; }
  Index grid_size() const { return v1 * d; }
  /// Flat index of grid point (i, k), covariate index fastest.
  Index flat(Index i, Index k) const { return i * d + k; }
};

/// Validates and assembles a ModelSpec. Throws InvalidDesign on bad lambda or
/// covariate table.
ModelSpec make_model(Vector lambda, Matrix covariates);

/// Approximate design: nonnegative weights on the v1 x d grid summing to one.
struct ApproxDesign {
  Vector xi;  // size v1*d, flat layout i*d + k
};

/// Exact design: integer trial counts on the grid summing to n.
struct ExactDesign {
  IntVector counts;
  long n = 0;
};

struct MarginalTreatmentDesign {
  Vector w;  // size v1, nonnegative, sums to one
};

struct MarginalCovariateDesign {
  Vector alpha;  // size d, nonnegative, sums to one
};

ApproxDesign make_approx_design(const ModelSpec& spec, Vector xi);
ExactDesign make_exact_design(const ModelSpec& spec, IntVector counts);

/// Number of grid points carrying weight above kSupportTol.
Index support_size(const Vector& xi, double tol = kSupportTol);

/// f(i, k); indices are zero-based. Throws IndexError when out of range.
Vector regressor(const ModelSpec& spec, Index i, Index k);

/// Moment matrix M(xi) = sum_{i,k} xi(i,k) lambda_i f(i,k) f(i,k)^T.
Matrix moment_matrix(const ModelSpec& spec, const ApproxDesign& xi);

/// Marginal treatment design w_i = sum_k xi(i,k) and marginal covariate
/// design alpha_k = sum_i xi(i,k).
std::pair<MarginalTreatmentDesign, MarginalCovariateDesign> marginals(
    const ModelSpec& spec, const ApproxDesign& xi);

/// Product design xi(i,k) = w_i alpha_k.
ApproxDesign product_design(const MarginalTreatmentDesign& w,
                            const MarginalCovariateDesign& alpha);

/// Moment matrix of the marginal treatment model: diag(lambda_i w_i).
Matrix treatment_moment(const ModelSpec& spec, const MarginalTreatmentDesign& w);

struct CovariateMoment {
  Matrix m2;     // (1+v2) x (1+v2), sum_k alpha_k h(k) h(k)^T with h = (1, g^T)^T
  Matrix schur;  // v2 x v2, sum_k alpha_k g g^T - (sum alpha g)(sum alpha g)^T
};

CovariateMoment covariate_moment(const ModelSpec& spec,
                                 const MarginalCovariateDesign& alpha);

/// Interest in s1 treatment contrasts Q1^T tau and s2 covariate functions
/// K^T beta, assembled into A = diag(Q1, Q2) with Q2^T = (0, K^T).
struct InterestSpec {
  Matrix q1;  // v1 x s1 (s1 may be 0)
  Matrix k;   // v2 x s2 (s2 may be 0)
  Matrix a;   // (v1+1+v2) x (s1+s2)
  bool rank_deficient = false;
  Index rank_q1 = 0;
  Index rank_k = 0;
  Index rank_a = 0;

  Index s1() const { return q1.cols(); }
  Index s2() const { return k.cols(); }
};

/// Validates Q1 (columns are contrasts, no all-zero row) and K, assembles A
/// and detects rank deficiency. Throws NotContrasts / ZeroRowQ1 /
/// DimensionError.
InterestSpec assemble_interest(const ModelSpec& spec, Matrix q1, Matrix k,
                               double rank_tol = kRankTol);

/// Full Cartesian product of the per-dimension level lists, last dimension
/// varying fastest (lexicographic point order). Throws EmptyLevels.
Matrix factorial_covariates(const std::vector<std::vector<double>>& levels);

/// Concatenated one-hot encodings of all factor-level combinations; d is the
/// product of the group sizes and v2 their sum. Sizes must be >= 2.
Matrix onehot_covariates(const std::vector<Index>& group_sizes);

/// Centering matrix I - 11^T/n (columns span the contrast space).
Matrix centering_matrix(Index n);

/// Control contrasts: columns e_i - e_1 for i = 2..v1, i.e. (-1^T; I).
Matrix control_contrasts(Index v1);

}  // namespace optdes
