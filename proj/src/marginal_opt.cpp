#include "optdes/marginal_opt.hpp"

#include "optdes/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

namespace optdes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Concave objective on a probability simplex, evaluated through the positive
/// spectrum of an information matrix.
class SimplexObjective {
 public:
  virtual ~SimplexObjective() = default;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
};

/// d phi_p / d gamma_j for the p-mean over a positive spectrum.
Vector phi_weights(const std::vector<double>& gammas, Index s, double p, double phi) {
  Vector w(static_cast<Index>(gammas.size()));
  for (std::size_t j = 0; j < gammas.size(); ++j) {
    if (p == 0.0) {
      w[static_cast<Index>(j)] = phi / (static_cast<double>(s) * gammas[j]);
    } else {
      // phi^{1-p} gamma^{p-1} / s, computed in the log domain
      const double lw = (1.0 - p) * std::log(phi) + (p - 1.0) * std::log(gammas[j]) -
                        std::log(static_cast<double>(s));
      w[static_cast<Index>(j)] = std::exp(lw);
    }
  }
  return w;
}

/// phi_p(N_K(alpha)) on the covariate simplex.
class CovariateObjective : public SimplexObjective {
 public:
  CovariateObjective(const ModelSpec& spec, const Matrix& k, double p, Index s,
                     double rank_tol)
      : spec_(spec), k_(k), p_(p), s_(s), rank_tol_(rank_tol) {}

  double value(const Vector& alpha) const override {
    State st;
    return eval(alpha, st, false) ? st.phi : 0.0;
  }

  Vector gradient(const Vector& alpha) const override {
    State st;
    if (!eval(alpha, st, true)) return Vector::Zero(alpha.size());
    const Vector dphi = phi_weights(st.gammas, s_, p_, st.phi);
    Vector grad = Vector::Zero(alpha.size());
    // u_j = S^+ K v_j; d gamma_j / d alpha_k =
    //   gamma_j^2 ((u_j.(g_k - gbar))^2 - (u_j.gbar)^2)
    for (std::size_t j = 0; j < st.gammas.size(); ++j) {
      const Vector u = st.s_pinv * (k_ * st.vectors.col(static_cast<Index>(j)));
      const double ubar = u.dot(st.gbar);
      const double gj2 = st.gammas[j] * st.gammas[j];
      for (Index k = 0; k < spec_.d; ++k) {
        const double uk = u.dot(spec_.covariates.row(k).transpose() - st.gbar);
        grad[k] += dphi[static_cast<Index>(j)] * gj2 * (uk * uk - ubar * ubar);
      }
    }
    return grad;
  }

 private:
  struct State {
    double phi = 0.0;
    std::vector<double> gammas;  // positive eigenvalues of N_K
    Matrix vectors;              // matching eigenvectors (columns)
    Matrix s_pinv;
    Vector gbar;
  };

  bool eval(const Vector& alpha, State& st, bool want_gradient) const {
    Matrix s = Matrix::Zero(spec_.v2, spec_.v2);
    Vector gbar = Vector::Zero(spec_.v2);
    for (Index k = 0; k < spec_.d; ++k) {
      if (alpha[k] == 0.0) continue;
      const Vector g = spec_.covariates.row(k).transpose();
      s.selfadjointView<Eigen::Lower>().rankUpdate(g, alpha[k]);
      gbar += alpha[k] * g;
    }
    s = Matrix(s.selfadjointView<Eigen::Lower>());
    s -= gbar * gbar.transpose();

    const EigenDecomposition es = sym_eig(s);
    const double gmax = std::max(0.0, es.eigenvalues.maxCoeff());
    const double thr = rank_tol_ * std::max(gmax, 1e-300);
    // Feasibility: K must lie in the span of the numerically positive part.
    Vector inv = Vector::Zero(es.eigenvalues.size());
    for (Index t = 0; t < es.eigenvalues.size(); ++t) {
      if (es.eigenvalues[t] > thr) inv[t] = 1.0 / es.eigenvalues[t];
    }
    for (Index t = 0; t < es.eigenvalues.size(); ++t) {
      if (es.eigenvalues[t] <= thr) {
        const double overlap = (es.basis.col(t).transpose() * k_).cwiseAbs().maxCoeff();
        if (overlap > kFeasTol * std::max(1.0, k_.cwiseAbs().maxCoeff())) return false;
      }
    }
    const Matrix s_pinv = es.basis * inv.asDiagonal() * es.basis.transpose();
    const Matrix j = require_symmetric(Matrix(k_.transpose() * s_pinv * k_));
    const EigenDecomposition ej = sym_eig(j);
    const double jmax = std::max(0.0, ej.eigenvalues.maxCoeff());
    const double jthr = rank_tol_ * std::max(jmax, 1e-300);
    std::vector<double> gammas;
    std::vector<Index> cols;
    for (Index t = 0; t < ej.eigenvalues.size(); ++t) {
      if (ej.eigenvalues[t] > jthr) {
        gammas.push_back(1.0 / ej.eigenvalues[t]);
        cols.push_back(t);
      }
    }
    if (static_cast<Index>(gammas.size()) < s_) return false;
    Vector spectrum(static_cast<Index>(gammas.size()));
    for (std::size_t t = 0; t < gammas.size(); ++t) spectrum[static_cast<Index>(t)] = gammas[t];
    st.phi = phi_p_spectrum(spectrum, s_, p_, rank_tol_);
    if (!(st.phi > 0.0)) return false;
    st.gammas = std::move(gammas);
    if (want_gradient) {
      st.vectors.resize(k_.cols(), static_cast<Index>(st.gammas.size()));
      for (std::size_t t = 0; t < st.gammas.size(); ++t) {
        st.vectors.col(static_cast<Index>(t)) = ej.basis.col(cols[t]);
      }
      st.s_pinv = s_pinv;
      st.gbar = std::move(gbar);
    }
    return true;
  }

  const ModelSpec& spec_;
  const Matrix& k_;
  double p_;
  Index s_;
  double rank_tol_;
};

/// phi_p of the combined product spectrum
/// { eigs of N_{Q1}(w) } + { (sum lambda w) * delta_j } over the treatment
/// simplex; delta is the fixed positive spectrum of the covariate stage.
class TreatmentObjective : public SimplexObjective {
 public:
  TreatmentObjective(const ModelSpec& spec, const Matrix& q1, double p, Index s_total,
                     Vector delta, double rank_tol)
      : spec_(spec), q1_(q1), p_(p), s_(s_total), delta_(std::move(delta)),
        rank_tol_(rank_tol) {}

  double value(const Vector& w) const override {
    State st;
    return eval(w, st, false) ? st.phi : 0.0;
  }

  Vector gradient(const Vector& w) const override {
    State st;
    if (!eval(w, st, true)) return Vector::Zero(w.size());
    const Index nq = static_cast<Index>(st.gamma_q.size());
    std::vector<double> all(st.gamma_q);
    const double total = spec_.lambda.dot(w);
    for (Index j = 0; j < delta_.size(); ++j) all.push_back(total * delta_[j]);
    const Vector dphi = phi_weights(all, s_, p_, st.phi);
    Vector grad = Vector::Zero(w.size());
    for (Index j = 0; j < nq; ++j) {
      // d gamma_j / d w_i = gamma_j^2 (v_j . q1_row_i)^2 / (lambda_i w_i^2)
      const Vector qv = q1_ * st.vectors.col(j);  // length v1, entry i = q_i . v_j
      const double gj2 = st.gamma_q[j] * st.gamma_q[j];
      for (Index i = 0; i < spec_.v1; ++i) {
        grad[i] += dphi[j] * gj2 * qv[i] * qv[i] / (spec_.lambda[i] * w[i] * w[i]);
      }
    }
    for (Index j = 0; j < delta_.size(); ++j) {
      for (Index i = 0; i < spec_.v1; ++i) {
        grad[i] += dphi[nq + j] * spec_.lambda[i] * delta_[j];
      }
    }
    return grad;
  }

 private:
  struct State {
    double phi = 0.0;
    std::vector<double> gamma_q;  // positive eigenvalues of N_{Q1}(w)
    Matrix vectors;
  };

  bool eval(const Vector& w, State& st, bool want_gradient) const {
    if (w.minCoeff() <= 0.0) return false;
    std::vector<double> all;
    Index rank_q = 0;
    if (q1_.cols() > 0) {
      const Vector inv_mw = (spec_.lambda.array() * w.array()).inverse().matrix();
      const Matrix j = require_symmetric(Matrix(q1_.transpose() * inv_mw.asDiagonal() * q1_));
      const EigenDecomposition ej = sym_eig(j);
      const double jmax = std::max(0.0, ej.eigenvalues.maxCoeff());
      const double jthr = rank_tol_ * std::max(jmax, 1e-300);
      std::vector<Index> cols;
      for (Index t = 0; t < ej.eigenvalues.size(); ++t) {
        if (ej.eigenvalues[t] > jthr) {
          st.gamma_q.push_back(1.0 / ej.eigenvalues[t]);
          cols.push_back(t);
        }
      }
      rank_q = static_cast<Index>(st.gamma_q.size());
      if (want_gradient) {
        st.vectors.resize(q1_.cols(), rank_q);
        for (Index t = 0; t < rank_q; ++t) st.vectors.col(t) = ej.basis.col(cols[t]);
      }
      all = st.gamma_q;
    }
    const double total = spec_.lambda.dot(w);
    for (Index j = 0; j < delta_.size(); ++j) all.push_back(total * delta_[j]);
    if (static_cast<Index>(all.size()) < s_) return false;
    Vector spectrum(static_cast<Index>(all.size()));
    for (std::size_t t = 0; t < all.size(); ++t) spectrum[static_cast<Index>(t)] = all[t];
    st.phi = phi_p_spectrum(spectrum, s_, p_, rank_tol_);
    return st.phi > 0.0;
  }

  const ModelSpec& spec_;
  const Matrix& q1_;
  double p_;
  Index s_;
  Vector delta_;
  double rank_tol_;
};

struct SimplexMaxResult {
  Vector x;
  double value = 0.0;
  long iterations = 0;
  bool converged = false;
};

/// Golden-section maximization of a unimodal function on [0, hi].
double golden_max(const std::function<double(double)>& f, double hi, double* fbest) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = 0.0, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 90; ++it) {
    if (f1 < f2) {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    } else {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    }
  }
  double t = (f1 > f2) ? x1 : x2;
  double ft = std::max(f1, f2);
  // the maximum may sit exactly on either end
  const double f0 = f(0.0), fh = f(hi);
  if (f0 > ft) { t = 0.0; ft = f0; }
  if (fh >= ft) { t = hi; ft = fh; }
  *fbest = ft;
  return t;
}

void newton_polish(const SimplexObjective& f, Vector& x, double floor_x, double& fx);

/// Vertex-direction exchange on the probability simplex: move mass from the
/// support point with the smallest gradient toward the point with the largest
/// one, step length by line search. Stops on a small Frank-Wolfe gap or when
/// the best exchange no longer improves the (concave) objective.
SimplexMaxResult maximize_on_simplex(const SimplexObjective& f, Vector x0, double floor_x,
                                     const SolverOptions& opts) {
  SimplexMaxResult res;
  res.x = std::move(x0);
  res.value = f.value(res.x);
  if (!(res.value > 0.0)) {
    res.converged = false;
    return res;
  }
  int stall = 0;
  for (long iter = 0; iter < opts.max_iter; ++iter) {
    const Vector g = f.gradient(res.x);
    Index jp = 0;
    for (Index j = 1; j < g.size(); ++j) {
      if (g[j] > g[jp]) jp = j;
    }
    Index jm = -1;
    for (Index j = 0; j < g.size(); ++j) {
      if (res.x[j] > floor_x && (jm < 0 || g[j] < g[jm])) jm = j;
    }
    const double gap = g[jp] - res.x.dot(g);  // Frank-Wolfe certificate
    if (gap <= 1e-11 * std::abs(res.value)) {
      res.converged = true;
      break;
    }
    if (jm < 0 || jm == jp || g[jp] - g[jm] <= 0.0) {
      res.converged = true;
      break;
    }
    const double tmax = res.x[jm] - floor_x;
    if (!(tmax > 0.0)) {
      res.converged = true;
      break;
    }
    Vector xt = res.x;
    const auto line = [&](double t) {
      xt[jp] = res.x[jp] + t;
      xt[jm] = res.x[jm] - t;
      return f.value(xt);
    };
    double ft = 0.0;
    const double t = golden_max(line, tmax, &ft);
    ++res.iterations;
    if (ft - res.value <= opts.tol * std::abs(res.value)) {
      if (++stall >= 3) {
        res.converged = true;
        break;
      }
      continue;
    }
    stall = 0;
    res.x[jp] += t;
    res.x[jm] -= t;
    if (t == tmax) res.x[jm] = floor_x;  // exact landing on the boundary
    res.value = ft;
  }
  newton_polish(f, res.x, floor_x, res.value);
  return res;
}

/// Newton refinement on the face spanned by the current support: the
/// exchange method leaves coordinate errors of order sqrt(gap), which is too
/// coarse for the sparsification step (the small-support faces of the
/// transfer polytope are exactly consistent only at the exact optimum, e.g.
/// symmetric weights for symmetric models). A few Newton steps with a
/// finite-difference Hessian of the analytic gradient restore stationarity
/// to machine precision.
void newton_polish(const SimplexObjective& f, Vector& x, double floor_x, double& fx) {
  const Index n = x.size();
  std::vector<Index> support;
  for (Index j = 0; j < n; ++j) {
    if (x[j] > std::max(floor_x * 10.0, 1e-10)) support.push_back(j);
  }
  const Index m = static_cast<Index>(support.size());
  if (m < 2) return;
  const Index base = support[0];

  for (int iter = 0; iter < 8; ++iter) {
    const Vector g = f.gradient(x);
    Vector gr(m - 1);
    for (Index k = 1; k < m; ++k) gr[k - 1] = g[support[k]] - g[base];
    // central-difference Hessian of the reduced gradient along the face
    // directions (stiff surrogates near p = -inf need the h^2 accuracy)
    const double h = 1e-5;
    Matrix hess(m - 1, m - 1);
    for (Index k = 1; k < m; ++k) {
      Vector xp = x, xm = x;
      xp[support[k]] += h;
      xp[base] -= h;
      xm[support[k]] -= h;
      xm[base] += h;
      const Vector gp = f.gradient(xp);
      const Vector gm = f.gradient(xm);
      for (Index l = 1; l < m; ++l) {
        hess(l - 1, k - 1) =
            ((gp[support[l]] - gp[base]) - (gm[support[l]] - gm[base])) / (2.0 * h);
      }
    }
    hess = 0.5 * (hess + hess.transpose());
    const Vector step_r = hess.ldlt().solve(-gr);
    if (!step_r.allFinite()) return;
    Vector step = Vector::Zero(n);
    for (Index k = 1; k < m; ++k) {
      step[support[k]] += step_r[k - 1];
      step[base] -= step_r[k - 1];
    }
    const double step_norm = step.cwiseAbs().maxCoeff();
    if (!(step_norm > 0.0)) return;
    // keep iterates strictly inside the face
    double t = 1.0;
    for (Index j : support) {
      if (step[j] < 0.0) {
        t = std::min(t, 0.9 * (x[j] - floor_x) / -step[j]);
      }
    }
    if (!(t > 0.0)) return;
    double ft = f.value(x + t * step);
    int backtracks = 0;
    while (ft < fx && backtracks++ < 30) {
      t *= 0.5;
      ft = f.value(x + t * step);
    }
    if (ft < fx) return;
    x += t * step;
    fx = ft;
    if (t * step_norm <= 1e-15) return;
  }
}

/// Homotopy stages used to approach the E-criterion with smooth surrogates.
const std::vector<double>& e_homotopy_stages() {
  static const std::vector<double> stages = {-8,   -16,  -32,   -64,  -128,
                                             -256, -512, -1024, -2048};
  return stages;
}

Vector clamp_to_simplex(Vector x, double floor_x) {
  for (Index j = 0; j < x.size(); ++j) x[j] = std::max(x[j], floor_x);
  const double total = x.sum();
  if (total > 0.0) x /= total;
  return x;
}

/// Solves max phi_p for p = -inf by a decreasing-p homotopy with warm starts.
/// The stage solutions behave like x* + a/p + b/p^2 + ... as p -> -inf, so a
/// Richardson table over the last stages (p doubling) removes the leading
/// error terms; the best candidate under the true E-objective is returned.
/// The deepest extrapolation reaches the E-optimal weights to ~1e-12, which
/// the sparsification step needs (its most degenerate faces are consistent
/// only at the exact optimum).
SimplexMaxResult maximize_e_homotopy(
    const std::function<std::unique_ptr<SimplexObjective>(double)>& make_objective,
    const SimplexObjective& exact_e, Vector x0, double floor_x, const SolverOptions& opts) {
  SimplexMaxResult last;
  last.x = std::move(x0);
  long total_iters = 0;
  bool all_converged = true;
  std::vector<Vector> trail;  // most recent stage solutions, oldest first
  for (double p : e_homotopy_stages()) {
    const auto obj = make_objective(p);
    last = maximize_on_simplex(*obj, last.x, floor_x, opts);
    total_iters += last.iterations;
    all_converged = all_converged && last.converged;
    trail.push_back(last.x);
    if (trail.size() > 4) trail.erase(trail.begin());
  }

  SimplexMaxResult res;
  res.x = last.x;
  res.value = exact_e.value(last.x);
  res.iterations = total_iters;
  res.converged = all_converged;

  // Richardson table: column j removes error terms up to 1/p^j; the entry
  // built from the newest stages is the candidate at each level.
  std::vector<Vector> table = trail;
  for (std::size_t level = 1; level < trail.size(); ++level) {
    const double factor = std::pow(2.0, static_cast<double>(level));
    for (std::size_t i = 0; i + level < trail.size(); ++i) {
      table[i] = (factor * table[i + 1] - table[i]) / (factor - 1.0);
    }
    const Vector candidate = clamp_to_simplex(table[trail.size() - 1 - level], floor_x);
    const double value = exact_e.value(candidate);
    if (value > res.value) {
      res.x = candidate;
      res.value = value;
    }
  }
  return res;
}

double trace_power(const Vector& spectrum, double p, Index s, double rank_tol) {
  // tr(N^p) over the positive spectrum; for p = -inf the E-value instead.
  if (std::isinf(p) && p < 0.0) {
    return phi_p_spectrum(spectrum, s, kNegInf, rank_tol);
  }
  double gmax = 0.0;
  for (Index j = 0; j < spectrum.size(); ++j) gmax = std::max(gmax, spectrum[j]);
  const double thr = kRankTol * std::max(gmax, 1e-300);
  double acc = 0.0;
  for (Index j = 0; j < spectrum.size(); ++j) {
    if (spectrum[j] > thr) acc += std::pow(spectrum[j], p);
  }
  return acc;
}

Vector positive_spectrum(const Matrix& n, double rank_tol) {
  const EigenDecomposition eig = sym_eig(n);
  const double gmax = std::max(0.0, eig.eigenvalues.maxCoeff());
  const double thr = rank_tol * std::max(gmax, 1e-300);
  std::vector<double> pos;
  for (Index j = 0; j < eig.eigenvalues.size(); ++j) {
    if (eig.eigenvalues[j] > thr) pos.push_back(eig.eigenvalues[j]);
  }
  std::sort(pos.begin(), pos.end(), std::greater<double>());
  Vector out(static_cast<Index>(pos.size()));
  for (std::size_t j = 0; j < pos.size(); ++j) out[static_cast<Index>(j)] = pos[j];
  return out;
}

}  // namespace

MarginalSolution optimize_covariate(const ModelSpec& spec, const Matrix& k,
                                    const CriterionSpec& crit, const SolverOptions& opts) {
  MarginalSolution sol;
  const Index d = spec.d;
  if (k.cols() == 0) {
    sol.weights = Vector::Constant(d, 1.0 / static_cast<double>(d));
    sol.converged = true;
    return sol;
  }
  const Index s = crit.s > 0 ? crit.s : rank_of(k);
  const Vector uniform = Vector::Constant(d, 1.0 / static_cast<double>(d));
  {
    CovariateObjective probe(spec, k, std::isinf(crit.p) ? -1.0 : crit.p, s, kRankTol);
    if (!(probe.value(uniform) > 0.0)) {
      throw InfeasibleInterest(
          "no feasible covariate design: column space of K exceeds the column space "
          "of S(alpha) even for the uniform design");
    }
  }
  SimplexMaxResult res;
  if (crit.is_e()) {
    const auto make = [&](double p) {
      return std::make_unique<CovariateObjective>(spec, k, p, s, kRankTol);
    };
    const CovariateObjective exact_e(spec, k, kNegInf, s, kRankTol);
    res = maximize_e_homotopy(make, exact_e, uniform, 0.0, opts);
  } else {
    const CovariateObjective obj(spec, k, crit.p, s, kRankTol);
    res = maximize_on_simplex(obj, uniform, 0.0, opts);
  }
  sol.weights = res.x;
  sol.criterion_value = res.value;
  sol.iterations = res.iterations;
  sol.converged = res.converged;
  const InfoMatrix nk = info_matrix_covariate(spec, MarginalCovariateDesign{res.x}, k);
  sol.phi_star = trace_power(positive_spectrum(nk.n, kRankTol), crit.p, s, kRankTol);
  return sol;
}

MarginalSolution optimize_treatment(const ModelSpec& spec, const Matrix& q1,
                                    const CriterionSpec& crit, const Vector& cov_spectrum,
                                    const SolverOptions& opts) {
  const Index rank_q1 = q1.cols() > 0 ? rank_of(q1) : 0;
  const Index s = crit.s > 0 ? crit.s : rank_q1 + cov_spectrum.size();
  const Vector uniform = Vector::Constant(spec.v1, 1.0 / static_cast<double>(spec.v1));
  SimplexMaxResult res;
  if (crit.is_e()) {
    const auto make = [&](double p) {
      return std::make_unique<TreatmentObjective>(spec, q1, p, s, cov_spectrum, kRankTol);
    };
    const TreatmentObjective exact_e(spec, q1, kNegInf, s, cov_spectrum, kRankTol);
    res = maximize_e_homotopy(make, exact_e, uniform, opts.floor_w, opts);
  } else {
    const TreatmentObjective obj(spec, q1, crit.p, s, cov_spectrum, kRankTol);
    res = maximize_on_simplex(obj, uniform, opts.floor_w, opts);
  }
  if (!(res.value > 0.0)) {
    throw NotConverged("treatment stage failed to find a design with positive criterion value");
  }
  MarginalSolution sol;
  sol.weights = res.x;
  sol.criterion_value = res.value;
  sol.iterations = res.iterations;
  sol.converged = res.converged;
  sol.floor_binding = res.x.minCoeff() <= 10.0 * opts.floor_w;
  if (q1.cols() > 0) {
    const InfoMatrix nq = info_matrix_treatment(spec, MarginalTreatmentDesign{res.x}, q1);
    sol.phi_star = trace_power(positive_spectrum(nq.n, kRankTol), crit.p, rank_q1, kRankTol);
  }
  return sol;
}

ProductSolution optimal_product(const ModelSpec& spec, const InterestSpec& interest,
                                const CriterionSpec& crit, const SolverOptions& opts,
                                const Vector& forced_alpha) {
  ProductSolution out;
  const Index s_total = interest.rank_q1 + interest.rank_k;
  CriterionSpec cov_crit = crit;
  cov_crit.s = interest.rank_k;
  if (forced_alpha.size() > 0) {
    if (forced_alpha.size() != spec.d) throw DimensionError("forced alpha has wrong size");
    out.covariate.weights = forced_alpha;
    out.covariate.converged = true;
    if (interest.s2() > 0) {
      const InfoMatrix nk =
          info_matrix_covariate(spec, MarginalCovariateDesign{forced_alpha}, interest.k);
      out.covariate.criterion_value =
          phi_p_spectrum(positive_spectrum(nk.n, kRankTol), cov_crit.s, crit.p);
    }
  } else if (interest.s2() > 0) {
    out.covariate = optimize_covariate(spec, interest.k, cov_crit, opts);
  } else {
    out.covariate.weights = Vector::Constant(spec.d, 1.0 / static_cast<double>(spec.d));
    out.covariate.converged = true;
  }

  Vector delta;
  if (interest.s2() > 0) {
    const InfoMatrix nk = info_matrix_covariate(
        spec, MarginalCovariateDesign{out.covariate.weights}, interest.k);
    delta = positive_spectrum(nk.n, kRankTol);
  }
  CriterionSpec treat_crit = crit;
  treat_crit.s = s_total;
  out.treatment = optimize_treatment(spec, interest.q1, treat_crit, delta, opts);

  out.xi = product_design(MarginalTreatmentDesign{out.treatment.weights},
                          MarginalCovariateDesign{out.covariate.weights});
  out.phi_product = out.treatment.criterion_value;
  out.phi_full = phi_p(info_matrix_full(spec, out.xi, interest), treat_crit);
  return out;
}

std::pair<Vector, double> simplex_grid_oracle(const std::function<double(const Vector&)>& f,
                                              Index dim, Index resolution) {
  if (dim < 1) throw DimensionError("oracle dimension must be >= 1");
  if (dim > 6) {
    throw OracleTooLarge("oracle dimension " + std::to_string(dim) + " exceeds 6");
  }
  if (resolution < 10) throw Error("oracle resolution must be >= 10");

  Vector best_x;
  double best_value = kNegInf;
  Vector point(dim);
  std::vector<Index> counts(static_cast<std::size_t>(dim), 0);
  const double res = static_cast<double>(resolution);

  // Lexicographically ascending enumeration of all count vectors summing to
  // resolution; the first visited point is (0, ..., 0, resolution).
  const std::function<void(Index, Index)> visit = [&](Index pos, Index remaining) {
    if (pos == dim - 1) {
      counts[static_cast<std::size_t>(pos)] = remaining;
      for (Index j = 0; j < dim; ++j) {
        point[j] = static_cast<double>(counts[static_cast<std::size_t>(j)]) / res;
      }
      const double value = f(point);
      if (value > best_value) {
        best_value = value;
        best_x = point;
      }
      return;
    }
    for (Index c = 0; c <= remaining; ++c) {
      counts[static_cast<std::size_t>(pos)] = c;
      visit(pos + 1, remaining - c);
    }
  };
  visit(0, resolution);
  return {best_x, best_value};
}

}  // namespace optdes
