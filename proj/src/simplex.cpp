// Dense two-phase primal simplex used by the sparsification step. Problem
// sizes here are tiny (tens of rows and columns), so a plain tableau is the
// simplest reliable way to obtain basic feasible (vertex) solutions. The
// tableau is refactorized from the original data between pivoting rounds,
// which keeps degenerate basic values exact.

#include "optdes/sparsify.hpp"

#include <cmath>
#include <vector>

namespace optdes {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;

struct Tableau {
  Matrix t;                  // rows x (cols + 1); last column is the rhs
  std::vector<Index> basis;  // basic column per row
  Index rows = 0;
  Index cols = 0;
};

/// Minimizes the cost row in place. Dantzig pricing with a permanent switch
/// to Bland's rule if the objective stalls (anti-cycling). Returns the number
/// of pivots performed.
long run_simplex(Tableau& tab, Vector& cost, double& objective) {
  const Index m = tab.rows;
  const Index n = tab.cols;
  bool bland = false;
  int stall = 0;
  long pivots = 0;
  double last_objective = objective;
  const long max_iter = 2000 + 200 * static_cast<long>(m) * static_cast<long>(n);
  for (long iter = 0; iter < max_iter; ++iter) {
    Index enter = -1;
    if (bland) {
      for (Index j = 0; j < n; ++j) {
        if (cost[j] < -kCostTol) {
          enter = j;
          break;
        }
      }
    } else {
      double best = -kCostTol;
      for (Index j = 0; j < n; ++j) {
        if (cost[j] < best) {
          best = cost[j];
          enter = j;
        }
      }
    }
    if (enter < 0) return pivots;  // optimal

    Index leave = -1;
    double best_ratio = 0.0;
    for (Index r = 0; r < m; ++r) {
      const double a = tab.t(r, enter);
      if (a > kPivotTol) {
        const double ratio = std::max(tab.t(r, n), 0.0) / a;
        if (leave < 0 || ratio < best_ratio - 1e-12 ||
            (ratio <= best_ratio + 1e-12 && tab.basis[r] < tab.basis[leave])) {
          leave = r;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0) {
      throw Error("linear program is unbounded");
    }

    const double pivot = tab.t(leave, enter);
    tab.t.row(leave) /= pivot;
    for (Index r = 0; r < m; ++r) {
      if (r == leave) continue;
      const double factor = tab.t(r, enter);
      if (factor != 0.0) tab.t.row(r) -= factor * tab.t.row(leave);
    }
    const double cfac = cost[enter];
    if (cfac != 0.0) {
      cost -= cfac * tab.t.row(leave).head(n).transpose();
      objective -= cfac * tab.t(leave, n);
    }
    tab.basis[leave] = enter;
    ++pivots;

    if (objective < last_objective - 1e-13 * std::max(1.0, std::abs(last_objective))) {
      stall = 0;
      last_objective = objective;
    } else if (++stall > 50) {
      bland = true;
    }
  }
  throw Error("simplex iteration limit exceeded");
}

}  // namespace

VertexSolution lp_vertex_solve(const ConstraintSet& cs, const Vector& objective) {
  const Index m0 = cs.c.rows();
  const Index n = cs.c.cols();
  if (cs.b.size() != m0 || objective.size() != n) {
    throw DimensionError("lp_vertex_solve: inconsistent system dimensions");
  }

  // Keep a maximal well-conditioned independent subset of the rows
  // (equilibrated to unit max-abs), selected by a rank-revealing QR of the
  // row space. Dropped rows are verified against the final solution.
  Matrix scaled(m0, n);
  Vector b_scaled(m0);
  for (Index r = 0; r < m0; ++r) {
    const double scale = cs.c.row(r).cwiseAbs().maxCoeff();
    if (scale <= 0.0) {
      if (std::abs(cs.b[r]) > 1e-8) {
        throw LPInfeasible("zero constraint row with nonzero right-hand side");
      }
      scaled.row(r).setZero();
      b_scaled[r] = 0.0;
      continue;
    }
    scaled.row(r) = cs.c.row(r) / scale;
    b_scaled[r] = cs.b[r] / scale;
  }
  Eigen::ColPivHouseholderQR<Matrix> row_qr(scaled.transpose());
  row_qr.setThreshold(1e-10);
  const Index rank = row_qr.rank();
  if (rank == 0) throw LPInfeasible("constraint system has no usable rows");
  Matrix a_rows(rank, n);
  Vector b_rows(rank);
  const auto& permutation = row_qr.colsPermutation().indices();
  for (Index t = 0; t < rank; ++t) {
    const Index r = permutation[t];
    a_rows.row(t) = scaled.row(r);
    b_rows[t] = b_scaled[r];
  }

  // Phase 1 over the kept rows, signs normalized so b >= 0.
  for (Index t = 0; t < rank; ++t) {
    if (b_rows[t] < 0.0) {
      a_rows.row(t) = -a_rows.row(t);
      b_rows[t] = -b_rows[t];
    }
  }
  Tableau tab;
  tab.rows = rank;
  tab.cols = n + rank;
  tab.t = Matrix::Zero(rank, tab.cols + 1);
  tab.t.leftCols(n) = a_rows;
  tab.t.block(0, n, rank, rank) = Matrix::Identity(rank, rank);
  tab.t.col(tab.cols) = b_rows;
  for (Index t = 0; t < rank; ++t) tab.basis.push_back(n + t);
  Vector cost1 = Vector::Zero(tab.cols);
  double obj1 = 0.0;
  for (Index t = 0; t < rank; ++t) {
    cost1.head(n) -= tab.t.row(t).head(n).transpose();
    obj1 -= tab.t(t, tab.cols);
  }
  run_simplex(tab, cost1, obj1);
  double artificial_mass = 0.0;  // recomputed; the tracked objective drifts
  for (Index t = 0; t < rank; ++t) {
    if (tab.basis[t] >= n) artificial_mass += std::max(tab.t(t, tab.cols), 0.0);
  }
  if (artificial_mass > 1e-7 * std::max(1.0, b_rows.cwiseAbs().maxCoeff())) {
    throw LPInfeasible("phase 1 ended with residual " + std::to_string(artificial_mass) +
                       "; the constraint assembly admits no design");
  }

  // Drive leftover artificial variables out of the basis. Kept rows are
  // independent, so a pivot column always exists.
  for (Index t = 0; t < rank; ++t) {
    if (tab.basis[t] < n) continue;
    Index enter = -1;
    for (Index j = 0; j < n; ++j) {
      if (std::abs(tab.t(t, j)) > kPivotTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) continue;
    const double pivot = tab.t(t, enter);
    tab.t.row(t) /= pivot;
    for (Index r = 0; r < rank; ++r) {
      if (r == t) continue;
      const double factor = tab.t(r, enter);
      if (factor != 0.0) tab.t.row(r) -= factor * tab.t.row(t);
    }
    tab.basis[t] = enter;
  }

  // Phase 2: repeated rounds of (exact refactorization from the original
  // data, then pivoting) until a freshly factorized tableau is optimal.
  std::vector<Index> basis = tab.basis;
  Vector xb;
  for (int round = 0; round < 50; ++round) {
    Matrix basis_matrix(rank, rank);
    for (Index t = 0; t < rank; ++t) {
      for (Index j = 0; j < rank; ++j) {
        basis_matrix(j, t) = basis[static_cast<std::size_t>(t)] < n
                                 ? a_rows(j, basis[static_cast<std::size_t>(t)])
                                 : (j == basis[static_cast<std::size_t>(t)] - n ? 1.0 : 0.0);
      }
    }
    const auto lu = basis_matrix.partialPivLu();
    Tableau tab2;
    tab2.rows = rank;
    tab2.cols = n;
    tab2.t = Matrix::Zero(rank, n + 1);
    tab2.t.leftCols(n) = lu.solve(a_rows);
    xb = lu.solve(b_rows);
    for (Index t = 0; t < rank; ++t) {
      if (xb[t] < -1e-7) {
        throw LPInfeasible("basis lost primal feasibility during refactorization");
      }
    }
    tab2.t.col(n) = xb;
    tab2.basis = basis;
    Vector cost2 = objective;
    double obj2 = 0.0;
    for (Index t = 0; t < rank; ++t) {
      if (basis[static_cast<std::size_t>(t)] >= n) continue;
      const double c = objective[basis[static_cast<std::size_t>(t)]];
      if (c != 0.0) {
        cost2 -= c * tab2.t.row(t).head(n).transpose();
        obj2 += c * xb[t];
      }
    }
    // keep leftover zero-valued artificials out of pricing
    const long pivots = run_simplex(tab2, cost2, obj2);
    basis = tab2.basis;
    if (pivots == 0) break;
  }

  // Exact basic solution for the final basis.
  Matrix basis_matrix(rank, rank);
  for (Index t = 0; t < rank; ++t) {
    for (Index j = 0; j < rank; ++j) {
      basis_matrix(j, t) = basis[static_cast<std::size_t>(t)] < n
                               ? a_rows(j, basis[static_cast<std::size_t>(t)])
                               : (j == basis[static_cast<std::size_t>(t)] - n ? 1.0 : 0.0);
    }
  }
  xb = basis_matrix.partialPivLu().solve(b_rows);
  Vector full = Vector::Zero(n);
  for (Index t = 0; t < rank; ++t) {
    if (basis[static_cast<std::size_t>(t)] < n) {
      full[basis[static_cast<std::size_t>(t)]] = xb[t];
    }
  }
  // degenerate basics carry only factorization noise; do not count them
  for (Index j = 0; j < n; ++j) {
    if (std::abs(full[j]) <= 1e-11) full[j] = 0.0;
  }

  // Rows dropped as dependent must be consistent with the solution (checked
  // per row at unit scale).
  for (Index r = 0; r < m0; ++r) {
    const double scale = cs.c.row(r).cwiseAbs().maxCoeff();
    const double resid = scale <= 0.0 ? std::abs(cs.b[r])
                                      : std::abs(cs.c.row(r).dot(full) - cs.b[r]) / scale;
    if (resid > 1e-7) {
      throw LPInfeasible("constraint row " + std::to_string(r) +
                         " is inconsistent with the solved system (residual " +
                         std::to_string(resid) + ")");
    }
  }

  VertexSolution out;
  out.x = full.head(cs.n_design_vars);
  out.basis_rank = rank;
  out.support_size = support_size(out.x);
  return out;
}

}  // namespace optdes
