#include "optdes/model.hpp"

#include "optdes/linalg.hpp"

#include <cmath>

namespace optdes {

ModelSpec make_model(Vector lambda, Matrix covariates) {
  ModelSpec spec;
  spec.v1 = lambda.size();
  spec.d = covariates.rows();
  spec.v2 = covariates.cols();
  if (spec.v1 < 2) throw InvalidDesign("need at least two treatments");
  if (spec.d < 1) throw InvalidDesign("need at least one covariate point");
  if (spec.v2 < 1) throw InvalidDesign("covariate regressors must have dimension >= 1");
  if (!lambda.allFinite() || lambda.minCoeff() <= 0.0) {
    throw InvalidDesign("efficiency function lambda must be positive and finite");
  }
  if (!covariates.allFinite()) throw InvalidDesign("covariate table has non-finite entries");
  spec.lambda = std::move(lambda);
  spec.covariates = std::move(covariates);
  return spec;
}

ApproxDesign make_approx_design(const ModelSpec& spec, Vector xi) {
  if (xi.size() != spec.grid_size()) {
    throw InvalidDesign("design has " + std::to_string(xi.size()) + " entries, expected " +
                        std::to_string(spec.grid_size()));
  }
  if (!xi.allFinite()) throw InvalidDesign("design has non-finite entries");
  if (xi.minCoeff() < -1e-12) throw InvalidDesign("design has negative weights");
  for (Index j = 0; j < xi.size(); ++j) {
    if (xi[j] < 0.0) xi[j] = 0.0;
  }
  const double total = xi.sum();
  if (std::abs(total - 1.0) > 1e-10) {
    throw InvalidDesign("design weights sum to " + std::to_string(total) + ", expected 1");
  }
  return ApproxDesign{std::move(xi)};
}

ExactDesign make_exact_design(const ModelSpec& spec, IntVector counts) {
  if (counts.size() != spec.grid_size()) {
    throw InvalidDesign("count table has wrong size");
  }
  long n = 0;
  for (Index j = 0; j < counts.size(); ++j) {
    if (counts[j] < 0) throw InvalidDesign("negative trial count");
    n += counts[j];
  }
  return ExactDesign{std::move(counts), n};
}

Index support_size(const Vector& xi, double tol) {
  Index count = 0;
  for (Index j = 0; j < xi.size(); ++j) {
    if (xi[j] > tol) ++count;
  }
  return count;
}

Vector regressor(const ModelSpec& spec, Index i, Index k) {
  if (i < 0 || i >= spec.v1 || k < 0 || k >= spec.d) {
    throw IndexError("grid point (" + std::to_string(i) + ", " + std::to_string(k) +
                     ") out of range");
  }
  Vector f = Vector::Zero(spec.param_dim());
  f[i] = 1.0;
  f[spec.v1] = 1.0;
  f.tail(spec.v2) = spec.covariates.row(k).transpose();
  return f;
}

Matrix moment_matrix(const ModelSpec& spec, const ApproxDesign& xi) {
  const Index dim = spec.param_dim();
  Matrix m = Matrix::Zero(dim, dim);
  for (Index i = 0; i < spec.v1; ++i) {
    for (Index k = 0; k < spec.d; ++k) {
      const double weight = xi.xi[spec.flat(i, k)] * spec.lambda[i];
      if (weight == 0.0) continue;
      const Vector f = regressor(spec, i, k);
      m.selfadjointView<Eigen::Lower>().rankUpdate(f, weight);
    }
  }
  return Matrix(m.selfadjointView<Eigen::Lower>());
}

std::pair<MarginalTreatmentDesign, MarginalCovariateDesign> marginals(
    const ModelSpec& spec, const ApproxDesign& xi) {
  Vector w = Vector::Zero(spec.v1);
  Vector alpha = Vector::Zero(spec.d);
  for (Index i = 0; i < spec.v1; ++i) {
    for (Index k = 0; k < spec.d; ++k) {
      const double value = xi.xi[spec.flat(i, k)];
      w[i] += value;
      alpha[k] += value;
    }
  }
  return {MarginalTreatmentDesign{std::move(w)}, MarginalCovariateDesign{std::move(alpha)}};
}

ApproxDesign product_design(const MarginalTreatmentDesign& w,
                            const MarginalCovariateDesign& alpha) {
  const Index v1 = w.w.size();
  const Index d = alpha.alpha.size();
  Vector xi(v1 * d);
  for (Index i = 0; i < v1; ++i) {
    xi.segment(i * d, d) = w.w[i] * alpha.alpha;
  }
  return ApproxDesign{std::move(xi)};
}

Matrix treatment_moment(const ModelSpec& spec, const MarginalTreatmentDesign& w) {
  if (w.w.size() != spec.v1) throw DimensionError("marginal treatment design has wrong size");
  return Matrix((spec.lambda.array() * w.w.array()).matrix().asDiagonal());
}

CovariateMoment covariate_moment(const ModelSpec& spec,
                                 const MarginalCovariateDesign& alpha) {
  if (alpha.alpha.size() != spec.d) throw DimensionError("marginal covariate design has wrong size");
  CovariateMoment out;
  const Index h = 1 + spec.v2;
  out.m2 = Matrix::Zero(h, h);
  Matrix second = Matrix::Zero(spec.v2, spec.v2);
  Vector mean = Vector::Zero(spec.v2);
  for (Index k = 0; k < spec.d; ++k) {
    const double a = alpha.alpha[k];
    if (a == 0.0) continue;
    const Vector g = spec.covariates.row(k).transpose();
    Vector hk(h);
    hk[0] = 1.0;
    hk.tail(spec.v2) = g;
    out.m2 += a * hk * hk.transpose();
    second += a * g * g.transpose();
    mean += a * g;
  }
  out.schur = second - mean * mean.transpose();
  return out;
}

InterestSpec assemble_interest(const ModelSpec& spec, Matrix q1, Matrix k,
                               double rank_tol) {
  InterestSpec interest;
  if (q1.size() > 0 && q1.rows() != spec.v1) {
    throw DimensionError("Q1 must have v1 rows");
  }
  if (q1.size() == 0) q1.resize(spec.v1, 0);
  if (k.size() > 0 && k.rows() != spec.v2) {
    throw DimensionError("K must have v2 rows");
  }
  if (k.size() == 0) k.resize(spec.v2, 0);
  if (q1.cols() == 0 && k.cols() == 0) {
    throw DimensionError("interest system is empty (s1 = s2 = 0)");
  }
  if (!q1.allFinite() || !k.allFinite()) {
    throw InvalidMatrix("interest matrices have non-finite entries");
  }
  const Index s1 = q1.cols();
  const Index s2 = k.cols();
  if (s1 > 0) {
    const double scale = std::max(1.0, q1.cwiseAbs().maxCoeff());
    const Vector colsum = q1.transpose() * Vector::Ones(spec.v1);
    if (colsum.cwiseAbs().maxCoeff() > 1e-9 * scale) {
      throw NotContrasts("columns of Q1 do not sum to zero");
    }
    for (Index i = 0; i < spec.v1; ++i) {
      if (q1.row(i).cwiseAbs().maxCoeff() <= 1e-14 * scale) {
        throw ZeroRowQ1("row " + std::to_string(i + 1) + " of Q1 is all zeros");
      }
    }
  }

  interest.a = Matrix::Zero(spec.param_dim(), s1 + s2);
  interest.a.topLeftCorner(spec.v1, s1) = q1;
  // Q2^T = (0, K^T): first row of Q2 (the constant-term row) is zero.
  interest.a.bottomRightCorner(spec.v2, s2) = k;
  interest.q1 = std::move(q1);
  interest.k = std::move(k);
  interest.rank_q1 = rank_of(interest.q1, rank_tol);
  interest.rank_k = rank_of(interest.k, rank_tol);
  interest.rank_a = rank_of(interest.a, rank_tol);
  interest.rank_deficient = interest.rank_a < s1 + s2;
  return interest;
}

Matrix factorial_covariates(const std::vector<std::vector<double>>& levels) {
  if (levels.empty()) throw EmptyLevels("no covariate dimensions given");
  Index d = 1;
  for (const auto& dim : levels) {
    if (dim.empty()) throw EmptyLevels("covariate dimension with no levels");
    d *= static_cast<Index>(dim.size());
  }
  const Index v2 = static_cast<Index>(levels.size());
  Matrix g(d, v2);
  std::vector<Index> idx(levels.size(), 0);
  for (Index row = 0; row < d; ++row) {
    for (Index j = 0; j < v2; ++j) g(row, j) = levels[j][idx[j]];
    // odometer, last dimension fastest
    for (Index j = v2 - 1; j >= 0; --j) {
      if (++idx[j] < static_cast<Index>(levels[j].size())) break;
      idx[j] = 0;
    }
  }
  return g;
}

Matrix onehot_covariates(const std::vector<Index>& group_sizes) {
  if (group_sizes.empty()) throw EmptyLevels("no covariate groups given");
  Index d = 1;
  Index v2 = 0;
  for (Index size : group_sizes) {
    if (size < 2) throw InvalidDesign("one-hot group sizes must be >= 2");
    d *= size;
    v2 += size;
  }
  Matrix g = Matrix::Zero(d, v2);
  std::vector<Index> idx(group_sizes.size(), 0);
  for (Index row = 0; row < d; ++row) {
    Index offset = 0;
    for (std::size_t j = 0; j < group_sizes.size(); ++j) {
      g(row, offset + idx[j]) = 1.0;
      offset += group_sizes[j];
    }
    for (Index j = static_cast<Index>(group_sizes.size()) - 1; j >= 0; --j) {
      if (++idx[j] < group_sizes[j]) break;
      idx[j] = 0;
    }
  }
  return g;
}

Matrix centering_matrix(Index n) {
  return Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
}

Matrix control_contrasts(Index v1) {
  Matrix q = Matrix::Zero(v1, v1 - 1);
  q.row(0).setConstant(-1.0);
  q.bottomRows(v1 - 1) = Matrix::Identity(v1 - 1, v1 - 1);
  return q;
}

}  // namespace optdes
