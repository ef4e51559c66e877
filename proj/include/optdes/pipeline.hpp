#pragma once

#include "optdes/io.hpp"
#include "optdes/marginal_opt.hpp"
#include "optdes/rounding.hpp"
#include "optdes/sparsify.hpp"

#include <optional>
#include <string>
#include <vector>

namespace optdes {

/// Forced covariate marginal for s2 = 0 jobs: the stratum constraint pins the
/// uniform design; without constraints any alpha yields an optimal product
/// design and the uniform one is used.
Vector resolved_alpha(const JobConfig& config);

struct SolveArtifacts {
  ProductSolution solution;
  std::string design_path;
  std::string report_path;
};

/// solve: optimal product design, marginal solutions and criterion report.
SolveArtifacts run_solve(const JobConfig& config, const std::string& out_dir,
                         bool write_files = true);

struct SparsifyArtifacts {
  SparsifyResult result;
  ProductSolution reference;
  std::string design_path;
  std::string report_path;
};

/// sparsify: small-support optimal design via the vertex LP. When design_path
/// is empty the freshly solved product design is sparsified, otherwise the
/// loaded design is used as the product reference.
SparsifyArtifacts run_sparsify(const JobConfig& config, const std::string& design_path,
                               const std::string& out_dir, bool write_files = true);

struct RoundArtifacts {
  ExactDesign exact;
  RoundingReport report;
  std::string design_path;
};

/// round: exact design for n trials plus its efficiency against the optimal
/// product design. An n below the support size is reported as efficiency 0.
RoundArtifacts run_round(const JobConfig& config, const std::string& design_path, long n,
                         const std::string& out_dir, bool write_files = true);

struct Fig1Row {
  Index v2 = 0;
  double w1_star = 0.0;
};
struct Fig2Row {
  long n = 0;
  double eff_product = 0.0;
  double eff_sparse = 0.0;
};
struct FigureArtifacts {
  std::vector<Fig1Row> fig1;
  std::vector<Fig2Row> fig2;
  std::string fig1_path;
  std::string fig2_path;
};

FigureArtifacts run_figures(const JobConfig& config, const std::string& out_dir,
                            bool write_files = true);

struct VerifyResult {
  bool transfer_ok = false;
  bool criterion_ok = false;
  double transfer_residual = 0.0;
  double phi_reference = 0.0;
  double phi_design = 0.0;
  double criterion_gap_rel = 0.0;
};

/// verify: checks that a loaded design inherits the optimal information
/// matrix of the config's product design. Tolerances default to values loose
/// enough for tables published with four decimals.
VerifyResult run_verify(const JobConfig& config, const std::string& design_path,
                        double transfer_tol = 1e-2, double criterion_tol = 1e-3);

/// Criterion-gain tie scorer for the apportionment: candidates tied in the
/// multiplier rule are ranked by the criterion value of the rounded design.
TieScorer criterion_tie_scorer(const ModelSpec& spec, const InterestSpec& interest,
                               const CriterionSpec& crit);

}  // namespace optdes
