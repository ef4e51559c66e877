#pragma once

#include "optdes/common.hpp"
#include "optdes/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace optdes {

struct RoundingReport {
  std::string method;
  long n = 0;
  Index support_used = 0;
  double efficiency = 0.0;
};

/// Scores a candidate count vector during tie-breaking; larger is better.
/// When absent, ties fall to the lowest flat index.
using TieScorer = std::function<double(const IntVector& counts, long n)>;

/// Multiplier-based apportionment of an approximate design into n integer
/// counts. The support of xi is preserved exactly: counts are positive
/// precisely on the grid points with weight above support_tol. Requires
/// n >= support size (throws TooFewTrials otherwise).
///
/// Increment/decrement candidates that tie in the multiplier rule are
/// resolved by tie_scorer when given (then lowest index), else by lowest
/// index alone.
ExactDesign efficient_round(const ApproxDesign& xi, long n,
                            const TieScorer& tie_scorer = nullptr,
                            double support_tol = kSupportTol);

/// One trial per stratum, placed at the cell with the largest design weight
/// (ties to the lowest flat index, hence the lowest treatment). The strata
/// must partition the grid; throws BadStrata otherwise.
ExactDesign stratum_argmax_round(const ApproxDesign& xi,
                                 const std::vector<std::vector<Index>>& strata);

/// Strata given by the covariate index: stratum k holds cells (i, k) for all i.
std::vector<std::vector<Index>> covariate_strata(const ModelSpec& spec);

}  // namespace optdes
