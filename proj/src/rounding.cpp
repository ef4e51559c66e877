#include "optdes/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace optdes {

namespace {

/// Index of the best candidate: maximal ratio first; among ratio ties (1e-9
/// relative) the largest tie score, then the lowest index.
Index pick_candidate(const std::vector<Index>& cells, const std::vector<double>& ratios,
                     const TieScorer& tie_scorer, const IntVector& counts, long n,
                     int direction) {
  double best_ratio = ratios[0];
  for (double r : ratios) best_ratio = std::max(best_ratio, r);
  const double tol = 1e-9 * std::max(1.0, std::abs(best_ratio));
  std::vector<Index> tied;
  for (std::size_t t = 0; t < cells.size(); ++t) {
    if (ratios[t] >= best_ratio - tol) tied.push_back(cells[t]);
  }
  if (tied.size() == 1 || !tie_scorer) return tied.front();
  Index best = tied.front();
  double best_score = 0.0;
  bool have_score = false;
  for (Index j : tied) {
    IntVector candidate = counts;
    candidate[j] += direction;
    const double score = tie_scorer(candidate, n);
    if (!have_score || score > best_score + 1e-12 * std::max(1.0, std::abs(best_score))) {
      have_score = true;
      best_score = score;
      best = j;
    }
  }
  return best;
}

}  // namespace

ExactDesign efficient_round(const ApproxDesign& xi, long n, const TieScorer& tie_scorer,
                            double support_tol) {
  const Index size = xi.xi.size();
  std::vector<Index> support;
  for (Index j = 0; j < size; ++j) {
    if (xi.xi[j] > support_tol) support.push_back(j);
  }
  const Index ell = static_cast<Index>(support.size());
  if (ell == 0) throw InvalidDesign("design has empty support");
  if (n < ell) {
    throw TooFewTrials("n = " + std::to_string(n) + " is below the support size " +
                       std::to_string(ell));
  }

  IntVector counts = IntVector::Zero(size);
  const double mult = static_cast<double>(n) - static_cast<double>(ell) / 2.0;
  long total = 0;
  for (Index j : support) {
    counts[j] = static_cast<int>(std::ceil(mult * xi.xi[j]));
    total += counts[j];
  }

  while (total > n) {
    std::vector<double> ratios;
    ratios.reserve(support.size());
    for (Index j : support) {
      ratios.push_back((static_cast<double>(counts[j]) - 1.0) / xi.xi[j]);
    }
    const Index j = pick_candidate(support, ratios, tie_scorer, counts, n, -1);
    --counts[j];
    --total;
  }
  while (total < n) {
    std::vector<double> ratios;
    ratios.reserve(support.size());
    for (Index j : support) {
      ratios.push_back(-static_cast<double>(counts[j]) / xi.xi[j]);  // maximize -n_j/xi_j
    }
    const Index j = pick_candidate(support, ratios, tie_scorer, counts, n, +1);
    ++counts[j];
    ++total;
  }
  return ExactDesign{std::move(counts), n};
}

ExactDesign stratum_argmax_round(const ApproxDesign& xi,
                                 const std::vector<std::vector<Index>>& strata) {
  const Index size = xi.xi.size();
  std::vector<bool> seen(static_cast<std::size_t>(size), false);
  for (const auto& stratum : strata) {
    if (stratum.empty()) throw BadStrata("empty stratum");
    for (Index j : stratum) {
      if (j < 0 || j >= size) throw BadStrata("stratum cell out of range");
      if (seen[static_cast<std::size_t>(j)]) throw BadStrata("strata overlap");
      seen[static_cast<std::size_t>(j)] = true;
    }
  }
  for (bool s : seen) {
    if (!s) throw BadStrata("strata do not cover the design grid");
  }

  IntVector counts = IntVector::Zero(size);
  for (const auto& stratum : strata) {
    Index best = stratum.front();
    for (Index j : stratum) {
      if (xi.xi[j] > xi.xi[best]) best = j;
    }
    counts[best] = 1;
  }
  return ExactDesign{std::move(counts), static_cast<long>(strata.size())};
}

std::vector<std::vector<Index>> covariate_strata(const ModelSpec& spec) {
  std::vector<std::vector<Index>> strata(static_cast<std::size_t>(spec.d));
  for (Index k = 0; k < spec.d; ++k) {
    auto& stratum = strata[static_cast<std::size_t>(k)];
    stratum.reserve(static_cast<std::size_t>(spec.v1));
    for (Index i = 0; i < spec.v1; ++i) stratum.push_back(spec.flat(i, k));
  }
  return strata;
}

}  // namespace optdes
