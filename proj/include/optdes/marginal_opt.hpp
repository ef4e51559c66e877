#pragma once

#include "optdes/common.hpp"
#include "optdes/criteria.hpp"
#include "optdes/model.hpp"

#include <functional>
#include <utility>

namespace optdes {

struct SolverOptions {
  double tol = 1e-12;      // relative improvement threshold
  long max_iter = 100000;  // per stage
  double floor_w = 1e-9;   // interior floor for treatment weights
  double oracle_tol = 1e-4;
};

/// Result of one marginal solve. For the covariate stage phi_star is
/// tr(N_K^p(alpha*)) for finite p and the E-value of N_K(alpha*) for
/// p = -inf; the treatment stage reports the analogous quantity of its own
/// block N_{Q1}(w*). criterion_value is the value of the stage objective at
/// the returned weights under the requested p (including p = -inf).
struct MarginalSolution {
  Vector weights;
  double criterion_value = 0.0;
  double phi_star = 0.0;
  long iterations = 0;
  bool converged = false;
  bool floor_binding = false;
};

/// Maximizes phi_p(N_K(alpha)) over the covariate simplex. Feasibility is
/// checked on the uniform design; throws InfeasibleInterest when even that
/// fails. s2 = 0 yields the uniform design with value 0.
MarginalSolution optimize_covariate(const ModelSpec& spec, const Matrix& k,
                                    const CriterionSpec& crit, const SolverOptions& opts = {});

/// Maximizes phi_p of the product-design information matrix
/// diag(N_{Q1}(w), (sum_i lambda_i w_i) N_K(alpha*)) over the treatment
/// simplex, where cov_spectrum holds the positive eigenvalues of N_K(alpha*)
/// (empty when s2 = 0). crit.s must be the total effective dimension.
MarginalSolution optimize_treatment(const ModelSpec& spec, const Matrix& q1,
                                    const CriterionSpec& crit, const Vector& cov_spectrum,
                                    const SolverOptions& opts = {});

struct ProductSolution {
  MarginalSolution covariate;
  MarginalSolution treatment;
  ApproxDesign xi;
  double phi_product = 0.0;  // criterion value via the blockwise route
  double phi_full = 0.0;     // criterion value via the full moment matrix
};

/// Solves both marginal problems and assembles the optimal product design.
/// forced_alpha, when nonempty, is used instead of solving the covariate
/// stage (the design constraints of a job may pin the covariate marginal;
/// with s2 = 0 any alpha yields an optimal product design).
ProductSolution optimal_product(const ModelSpec& spec, const InterestSpec& interest,
                                const CriterionSpec& crit, const SolverOptions& opts = {},
                                const Vector& forced_alpha = Vector());

/// Exhaustive maximization of f over the rational simplex grid with the given
/// denominator. Points are visited in lexicographically ascending order and
/// ties keep the earliest point. dim > 6 throws OracleTooLarge.
std::pair<Vector, double> simplex_grid_oracle(const std::function<double(const Vector&)>& f,
                                              Index dim, Index resolution);

}  // namespace optdes
