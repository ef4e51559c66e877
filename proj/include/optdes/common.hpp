#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace optdes {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;
using Index = Eigen::Index;

/// Relative eigenvalue cutoff for rank decisions.
inline constexpr double kRankTol = 1e-9;
/// Column-space inclusion tolerance used by feasibility checks.
inline constexpr double kFeasTol = 1e-8;
/// Design weights at or below this value are treated as zero support.
inline constexpr double kSupportTol = 1e-12;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define OPTDES_ERROR_TYPE(NAME) \
  class NAME : public Error {   \
   public:                      \
    using Error::Error;         \
  }

// linalg
OPTDES_ERROR_TYPE(InvalidMatrix);
OPTDES_ERROR_TYPE(DimensionError);
OPTDES_ERROR_TYPE(IllDefinedSchur);
OPTDES_ERROR_TYPE(SingularTopBlock);

// model
OPTDES_ERROR_TYPE(IndexError);
OPTDES_ERROR_TYPE(NotContrasts);
OPTDES_ERROR_TYPE(ZeroRowQ1);
OPTDES_ERROR_TYPE(EmptyLevels);
OPTDES_ERROR_TYPE(InvalidDesign);

// criteria / solvers
OPTDES_ERROR_TYPE(InfeasibleDesign);
OPTDES_ERROR_TYPE(InfeasibleMarginal);
OPTDES_ERROR_TYPE(InfeasibleInterest);
OPTDES_ERROR_TYPE(NotConverged);
OPTDES_ERROR_TYPE(OracleTooLarge);

// sparsify
OPTDES_ERROR_TYPE(LPInfeasible);
OPTDES_ERROR_TYPE(VerificationFailed);

// rounding
OPTDES_ERROR_TYPE(TooFewTrials);
OPTDES_ERROR_TYPE(BadStrata);

// io / cli
OPTDES_ERROR_TYPE(BadConfig);
OPTDES_ERROR_TYPE(IoError);

#undef OPTDES_ERROR_TYPE

}  // namespace optdes
