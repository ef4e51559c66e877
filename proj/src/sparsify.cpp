#include "optdes/sparsify.hpp"

#include "optdes/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace optdes {

std::string to_string(RowTag tag) {
  switch (tag) {
    case RowTag::MarginalFix: return "marginal-fix";
    case RowTag::CovariateResistance: return "covariate-resistance";
    case RowTag::TreatmentResidual: return "treat-res";
    case RowTag::CovariateOptimality: return "cov-opt";
    case RowTag::Normalization: return "normalization";
    case RowTag::User: return "user";
  }
  return "?";
}

ConstraintSet transfer_constraints(const ModelSpec& spec, const InterestSpec& interest,
                                   const MarginalTreatmentDesign& w_star,
                                   const MarginalCovariateDesign& alpha_star) {
  if (w_star.w.size() != spec.v1 || alpha_star.alpha.size() != spec.d) {
    throw DimensionError("transfer_constraints: marginal design sizes do not match the model");
  }
  if (w_star.w.minCoeff() <= 0.0) {
    throw InfeasibleMarginal("transfer_constraints requires w* > 0");
  }
  const Index n = spec.grid_size();
  const Index s1 = interest.s1();
  const Index s2 = interest.s2();
  const Matrix& g = spec.covariates;

  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  std::vector<RowTag> tags;
  const auto add_row = [&](Eigen::RowVectorXd row, double value, RowTag tag) {
    rows.push_back(std::move(row));
    rhs.push_back(value);
    tags.push_back(tag);
  };

  // w_i = w_i*
  for (Index i = 0; i < spec.v1; ++i) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
    row.segment(i * spec.d, spec.d).setOnes();
    add_row(std::move(row), w_star.w[i], RowTag::MarginalFix);
  }

  // [sum_k xi(i,k) g(k) / w_i*]_i Q1 = 0
  for (Index m = 0; m < spec.v2; ++m) {
    for (Index c = 0; c < s1; ++c) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
      for (Index i = 0; i < spec.v1; ++i) {
        const double factor = interest.q1(i, c) / w_star.w[i];
        for (Index k = 0; k < spec.d; ++k) {
          row[spec.flat(i, k)] = factor * g(k, m);
        }
      }
      add_row(std::move(row), 0.0, RowTag::CovariateResistance);
    }
  }

  if (s2 > 0) {
    const Matrix s = covariate_moment(spec, alpha_star).schur;
    const Matrix sk = mp_pinv(s) * interest.k;  // S^+(alpha*) K, v2 x s2
    const Vector gbar = g.transpose() * alpha_star.alpha;
    const double total = spec.lambda.dot(w_star.w);

    // sum_k (xi(i,k) - w_i* alpha_k*) g(k)^T S^+ K = 0, row per (i, c)
    for (Index i = 0; i < spec.v1; ++i) {
      for (Index c = 0; c < s2; ++c) {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
        for (Index k = 0; k < spec.d; ++k) {
          row[spec.flat(i, k)] = g.row(k).dot(sk.col(c));
        }
        add_row(std::move(row), w_star.w[i] * gbar.dot(sk.col(c)), RowTag::TreatmentResidual);
      }
    }

    // (sum lambda w*)^{-1} (sum lambda xi g g^T - (sum lambda xi g) gbar^T) S^+ K = K
    for (Index m = 0; m < spec.v2; ++m) {
      for (Index c = 0; c < s2; ++c) {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
        for (Index i = 0; i < spec.v1; ++i) {
          const double factor = spec.lambda[i] / total;
          for (Index k = 0; k < spec.d; ++k) {
            const double centered = (g.row(k).transpose() - gbar).dot(sk.col(c));
            row[spec.flat(i, k)] = factor * g(k, m) * centered;
          }
        }
        add_row(std::move(row), interest.k(m, c), RowTag::CovariateOptimality);
      }
    }
  }

  {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(n);
    add_row(std::move(row), 1.0, RowTag::Normalization);
  }

  ConstraintSet cs;
  cs.n_design_vars = n;
  cs.c.resize(static_cast<Index>(rows.size()), n);
  cs.b.resize(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    cs.c.row(static_cast<Index>(r)) = rows[r];
    cs.b[static_cast<Index>(r)] = rhs[r];
  }
  cs.row_tags = std::move(tags);
  return cs;
}

void append_user_rows(ConstraintSet& cs, const std::vector<UserConstraint>& rows) {
  if (rows.empty()) return;
  Index n_slacks = 0;
  for (const auto& row : rows) {
    if (row.coeffs.size() != cs.n_design_vars) {
      throw DimensionError("user constraint has wrong length");
    }
    if (!row.coeffs.allFinite() || !std::isfinite(row.rhs)) {
      throw BadConfig("user constraint has non-finite entries");
    }
    if (row.relation != UserConstraint::Relation::Eq) ++n_slacks;
  }
  const Index old_cols = cs.c.cols();
  const Index old_rows = cs.c.rows();
  Matrix c = Matrix::Zero(old_rows + static_cast<Index>(rows.size()), old_cols + n_slacks);
  c.topLeftCorner(old_rows, old_cols) = cs.c;
  Vector b(old_rows + static_cast<Index>(rows.size()));
  b.head(old_rows) = cs.b;
  Index slack = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Index row_idx = old_rows + static_cast<Index>(r);
    c.row(row_idx).head(cs.n_design_vars) = rows[r].coeffs.transpose();
    if (rows[r].relation == UserConstraint::Relation::Le) {
      c(row_idx, old_cols + slack) = 1.0;
      ++slack;
    } else if (rows[r].relation == UserConstraint::Relation::Ge) {
      c(row_idx, old_cols + slack) = -1.0;
      ++slack;
    }
    b[row_idx] = rows[r].rhs;
    cs.row_tags.push_back(RowTag::User);
  }
  cs.c = std::move(c);
  cs.b = std::move(b);
}

namespace {

/// Solves the LP restricted to the allowed design columns (slacks always
/// stay). Returns false when the restricted system is infeasible, else fills
/// the full-length solution.
bool solve_restricted(const ConstraintSet& cs, const Vector& objective,
                      const std::vector<bool>& allowed, VertexSolution* out) {
  std::vector<Index> cols;
  for (Index j = 0; j < cs.c.cols(); ++j) {
    if (j >= cs.n_design_vars || allowed[static_cast<std::size_t>(j)]) cols.push_back(j);
  }
  ConstraintSet restricted;
  restricted.c.resize(cs.c.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    restricted.c.col(static_cast<Index>(j)) = cs.c.col(cols[j]);
  }
  restricted.b = cs.b;
  Index design_cols = 0;
  for (Index j : cols) {
    if (j < cs.n_design_vars) ++design_cols;
  }
  restricted.n_design_vars = design_cols;
  Vector c_restricted(static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) c_restricted[static_cast<Index>(j)] = objective[cols[j]];
  VertexSolution inner;
  try {
    inner = lp_vertex_solve(restricted, c_restricted);
  } catch (const LPInfeasible&) {
    return false;
  } catch (const Error&) {
    return false;
  }
  Vector x = Vector::Zero(cs.n_design_vars);
  Index at = 0;
  for (Index j : cols) {
    if (j < cs.n_design_vars) x[j] = inner.x[at++];
  }
  // A deletion that is feasible only to within loose LP tolerances is not a
  // deletion; require a clean nonnegative solution with a tight residual.
  if (x.minCoeff() < -1e-10) return false;
  for (Index j = 0; j < x.size(); ++j) {
    if (x[j] < 0.0) x[j] = 0.0;
  }
  if (cs.n_slacks() == 0) {
    const Vector resid = cs.c.leftCols(cs.n_design_vars) * x - cs.b;
    if (resid.cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, cs.b.cwiseAbs().maxCoeff())) {
      return false;
    }
  }
  out->x = std::move(x);
  out->basis_rank = inner.basis_rank;
  out->support_size = support_size(out->x);
  return true;
}

/// Support reduction toward the degenerate small-support points that a
/// random objective essentially never selects: grid cells are excluded one at
/// a time whenever the remaining face stays feasible (probed over the whole
/// polytope, not just the current support). The deletion order decides which
/// irreducible support the greedy lands on, so a portfolio of deterministic
/// orders (index sweeps plus seeded shuffles) is tried and the sparsest
/// result kept.
void reduce_support(const ConstraintSet& cs, std::uint64_t seed, VertexSolution* best) {
  const Index n = cs.n_design_vars;
  const Vector uniform_objective = Vector::Ones(cs.c.cols());

  const auto run_order = [&](const std::vector<Index>& order, VertexSolution current) {
    std::vector<bool> allowed(static_cast<std::size_t>(n), true);
    bool improved = true;
    while (improved) {
      improved = false;
      for (Index j : order) {
        if (!allowed[static_cast<std::size_t>(j)]) continue;
        allowed[static_cast<std::size_t>(j)] = false;
        VertexSolution trial;
        if (solve_restricted(cs, uniform_objective, allowed, &trial)) {
          current = std::move(trial);
          improved = true;
          break;
        }
        allowed[static_cast<std::size_t>(j)] = true;
      }
    }
    return current;
  };

  std::vector<std::vector<Index>> orders;
  std::vector<Index> base(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) base[static_cast<std::size_t>(j)] = j;
  orders.push_back(base);                                     // ascending index
  orders.emplace_back(base.rbegin(), base.rend());            // descending index
  {
    std::vector<Index> by_weight = base;                      // heavy cells first
    std::sort(by_weight.begin(), by_weight.end(), [&](Index a, Index b) {
      if (best->x[a] != best->x[b]) return best->x[a] > best->x[b];
      return a < b;
    });
    orders.push_back(std::move(by_weight));
  }
  for (int shuffle = 0; shuffle < 12; ++shuffle) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(shuffle));
    std::vector<Index> order = base;
    for (Index j = n - 1; j > 0; --j) {
      const Index t = static_cast<Index>(rng() % static_cast<std::uint64_t>(j + 1));
      std::swap(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(t)]);
    }
    orders.push_back(std::move(order));
  }

  for (const auto& order : orders) {
    VertexSolution candidate = run_order(order, *best);
    if (candidate.support_size < best->support_size) *best = std::move(candidate);
  }
}

}  // namespace

bool verify_transfer(const ModelSpec& spec, const ApproxDesign& xi,
                     const MarginalTreatmentDesign& w_star,
                     const MarginalCovariateDesign& alpha_star, const InterestSpec& interest,
                     double tol, double* residual) {
  const Index dim = spec.param_dim();
  Matrix ginv = Matrix::Zero(dim, dim);
  ginv.topLeftCorner(spec.v1, spec.v1) =
      (spec.lambda.array() * w_star.w.array()).inverse().matrix().asDiagonal();
  if (interest.s2() > 0) {
    const Matrix m2 = covariate_moment(spec, alpha_star).m2;
    const double total = spec.lambda.dot(w_star.w);
    ginv.bottomRightCorner(1 + spec.v2, 1 + spec.v2) = block_ginverse(m2, 1) / total;
  }
  const Matrix m = moment_matrix(spec, xi);
  const double resid = (m * ginv * interest.a - interest.a).norm();
  if (residual) *residual = resid;
  return resid <= tol * std::max(1.0, interest.a.norm());
}

SparsifyResult sparsify(const ModelSpec& spec, const InterestSpec& interest,
                        const ApproxDesign& xi_star,
                        const std::vector<UserConstraint>& user_constraints,
                        std::uint64_t seed, const CriterionSpec& crit,
                        const SparsifyOptions& opts) {
  const auto [w_star, alpha_star] = marginals(spec, xi_star);
  ConstraintSet cs = transfer_constraints(spec, interest, w_star, alpha_star);
  append_user_rows(cs, user_constraints);

  CriterionSpec eff_crit = crit;
  if (eff_crit.s <= 0) eff_crit.s = interest.rank_a;

  SparsifyResult out;
  out.report.support_before = support_size(xi_star.xi);
  out.report.phi_before = phi_p(info_matrix_full(spec, xi_star, interest), eff_crit);

  // Random objectives break vertex degeneracy differently on every restart;
  // the sparsest vertex found is kept. The generator below is fixed so
  // identical seeds give identical designs on any platform.
  VertexSolution best;
  bool have_best = false;
  Index rank = 0;
  for (int rep = 0; rep < std::max(1, opts.restarts); ++rep) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(rep));
    Vector c = Vector::Zero(cs.c.cols());
    for (Index j = 0; j < cs.n_design_vars; ++j) {
      c[j] = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    }
    VertexSolution v = lp_vertex_solve(cs, c);
    rank = v.basis_rank;
    out.report.restart_supports.push_back(v.support_size);
    if (!have_best || v.support_size < best.support_size) {
      best = std::move(v);
      have_best = true;
    }
  }
  if (opts.reduce_support) {
    reduce_support(cs, seed, &best);
  }
  out.report.rank = rank;
  out.report.zero_guarantee = spec.grid_size() - rank;

  // Clamp solver dust and renormalize.
  Vector x = best.x;
  for (Index j = 0; j < x.size(); ++j) {
    if (x[j] < 0.0) {
      if (x[j] < -1e-9) throw VerificationFailed("vertex solution has a negative weight");
      x[j] = 0.0;
    }
  }
  const double total = x.sum();
  out.report.clamp_drift = std::abs(total - 1.0);
  if (out.report.clamp_drift > 1e-6) {
    throw VerificationFailed("vertex solution mass drifted by " +
                             std::to_string(out.report.clamp_drift));
  }
  x /= total;
  out.xi = make_approx_design(spec, std::move(x));
  out.report.support_after = support_size(out.xi.xi);

  out.report.phi_after = phi_p(info_matrix_full(spec, out.xi, interest), eff_crit);
  const bool transfer = verify_transfer(spec, out.xi, w_star, alpha_star, interest,
                                        opts.verify_tol, &out.report.transfer_residual);
  const double phi_gap = std::abs(out.report.phi_after - out.report.phi_before);
  const bool phi_equal = phi_gap <= opts.verify_tol * std::max(out.report.phi_before, 1e-300);
  out.report.verified = transfer && phi_equal;
  if (!out.report.verified) {
    throw VerificationFailed(
        "sparsified design failed verification: transfer residual = " +
        std::to_string(out.report.transfer_residual) +
        ", criterion gap = " + std::to_string(phi_gap));
  }
  return out;
}

}  // namespace optdes
