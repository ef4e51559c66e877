#pragma once

#include "optdes/common.hpp"
#include "optdes/criteria.hpp"
#include "optdes/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace optdes {

enum class RowTag {
  MarginalFix,           // w_i = w_i*
  CovariateResistance,   // per-treatment covariate means cancel on the contrasts
  TreatmentResidual,     // per-treatment g-moments match the product design on S^+ K
  CovariateOptimality,   // scaled second moments reproduce K on S^+ K
  Normalization,         // total mass one
  User,
};

std::string to_string(RowTag tag);

/// Linear equality system C x = b on the design grid (plus slack columns for
/// user inequalities), with x >= 0 implied.
struct ConstraintSet {
  Matrix c;
  Vector b;
  std::vector<RowTag> row_tags;
  Index n_design_vars = 0;  // leading columns that are design weights

  Index n_slacks() const { return c.cols() - n_design_vars; }
};

struct UserConstraint {
  enum class Relation { Eq, Le, Ge };
  Vector coeffs;  // length v1*d
  double rhs = 0.0;
  Relation relation = Relation::Eq;
};

/// Linear system whose solutions share the optimal information matrix of the
/// product design w* (x) alpha*: marginal fix rows, covariate-resistance
/// rows, and (when s2 > 0) the treatment-residual and covariate-optimality
/// rows, plus the normalization row.
ConstraintSet transfer_constraints(const ModelSpec& spec, const InterestSpec& interest,
                                   const MarginalTreatmentDesign& w_star,
                                   const MarginalCovariateDesign& alpha_star);

/// Appends user equality/inequality rows; inequalities get slack columns.
void append_user_rows(ConstraintSet& cs, const std::vector<UserConstraint>& rows);

struct VertexSolution {
  Vector x;              // design variables only (slacks dropped)
  Index support_size = 0;
  Index basis_rank = 0;  // rank of C
};

/// Basic feasible (vertex) solution of min c^T x s.t. C x = b, x >= 0 by the
/// two-phase primal simplex method with an anti-cycling fallback to Bland's
/// rule. The vertex has at least (columns - rank C) exact zeros.
VertexSolution lp_vertex_solve(const ConstraintSet& cs, const Vector& objective);

struct SparsifyOptions {
  int restarts = 8;           // random objectives tried; sparsest vertex wins
  bool reduce_support = true; // greedy single-column removal after the LP
  double verify_tol = 1e-8;   // criterion-equality and transfer tolerance
};

struct SparsifyReport {
  Index support_before = 0;
  Index support_after = 0;
  Index rank = 0;
  Index zero_guarantee = 0;   // v1*d - rank
  double phi_before = 0.0;
  double phi_after = 0.0;
  double transfer_residual = 0.0;
  double clamp_drift = 0.0;
  bool verified = false;
  std::vector<Index> restart_supports;
};

struct SparsifyResult {
  ApproxDesign xi;
  SparsifyReport report;
};

/// Finds a small-support design with the same information matrix as the
/// optimal product design xi_star, by solving the linear program over the
/// transfer_constraints system (plus user rows) with seeded random
/// objectives. The sparsest vertex over the restarts is returned after
/// verifying the optimality transfer; throws VerificationFailed if the
/// verification does not hold.
SparsifyResult sparsify(const ModelSpec& spec, const InterestSpec& interest,
                        const ApproxDesign& xi_star,
                        const std::vector<UserConstraint>& user_constraints,
                        std::uint64_t seed, const CriterionSpec& crit,
                        const SparsifyOptions& opts = {});

/// Master transfer condition M(xi) G A = A with
/// G = diag(M_1^{-1}(w*), (sum_i lambda_i w_i*)^{-1} M_2^-(alpha*)), where
/// M_2^- is the block generalized inverse built on S^+(alpha*). With s2 = 0
/// the covariate block of G is zero. Designs satisfying it share the optimal
/// information matrix.
bool verify_transfer(const ModelSpec& spec, const ApproxDesign& xi,
                     const MarginalTreatmentDesign& w_star,
                     const MarginalCovariateDesign& alpha_star, const InterestSpec& interest,
                     double tol = 1e-8, double* residual = nullptr);

}  // namespace optdes
