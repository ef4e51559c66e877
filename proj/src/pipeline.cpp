#include "optdes/pipeline.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

namespace optdes {

using nlohmann::json;

namespace {

void ensure_dir(const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir);
}

void write_json(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << doc.dump(2) << "\n";
}

json marginal_json(const MarginalSolution& sol) {
  json j;
  j["weights"] = std::vector<double>(sol.weights.begin(), sol.weights.end());
  j["criterion_value"] = sol.criterion_value;
  j["phi_star"] = sol.phi_star;
  j["iterations"] = sol.iterations;
  j["converged"] = sol.converged;
  return j;
}

ApproxDesign load_weights(const JobConfig& config, const std::string& path) {
  return to_approx_design(config.model, read_design_csv(path));
}

}  // namespace

Vector resolved_alpha(const JobConfig& config) {
  if (config.interest.s2() > 0) return Vector();
  return Vector::Constant(config.model.d, 1.0 / static_cast<double>(config.model.d));
}

TieScorer criterion_tie_scorer(const ModelSpec& spec, const InterestSpec& interest,
                               const CriterionSpec& crit) {
  return [&spec, &interest, crit](const IntVector& counts, long n) {
    try {
      Vector xi = counts.cast<double>() / static_cast<double>(n);
      return phi_p(info_matrix_full(spec, make_approx_design(spec, xi), interest), crit);
    } catch (const Error&) {
      return 0.0;
    }
  };
}

SolveArtifacts run_solve(const JobConfig& config, const std::string& out_dir,
                         bool write_files) {
  SolveArtifacts art;
  art.solution = optimal_product(config.model, config.interest, config.criterion, {},
                                 resolved_alpha(config));
  if (write_files) {
    ensure_dir(out_dir);
    art.design_path = out_dir + "/xi_star.csv";
    write_design_csv(art.design_path, config.model, art.solution.xi.xi, false);
    json report;
    report["covariate"] = marginal_json(art.solution.covariate);
    report["treatment"] = marginal_json(art.solution.treatment);
    report["phi_product"] = art.solution.phi_product;
    report["phi_full"] = art.solution.phi_full;
    report["criterion_p"] = std::isinf(config.criterion.p) ? json("-inf")
                                                           : json(config.criterion.p);
    report["effective_dimension"] = config.criterion.s;
    report["rank_deficient_interest"] = config.interest.rank_deficient;
    report["support"] = support_size(art.solution.xi.xi);
    art.report_path = out_dir + "/solve_report.json";
    write_json(art.report_path, report);
  }
  return art;
}

SparsifyArtifacts run_sparsify(const JobConfig& config, const std::string& design_path,
                               const std::string& out_dir, bool write_files) {
  SparsifyArtifacts art;
  art.reference = optimal_product(config.model, config.interest, config.criterion, {},
                                  resolved_alpha(config));
  const ApproxDesign xi_star =
      design_path.empty() ? art.reference.xi : load_weights(config, design_path);
  art.result = sparsify(config.model, config.interest, xi_star, config.constraints,
                        config.seed, config.criterion, config.sparsify_opts);
  if (write_files) {
    ensure_dir(out_dir);
    art.design_path = out_dir + "/xi_sparse.csv";
    write_design_csv(art.design_path, config.model, art.result.xi.xi, false);
    const SparsifyReport& rep = art.result.report;
    json report;
    report["support_before"] = rep.support_before;
    report["support_after"] = rep.support_after;
    report["rank"] = rep.rank;
    report["zero_guarantee"] = rep.zero_guarantee;
    report["phi_before"] = rep.phi_before;
    report["phi_after"] = rep.phi_after;
    report["transfer_residual"] = rep.transfer_residual;
    report["clamp_drift"] = rep.clamp_drift;
    report["verified"] = rep.verified;
    report["restart_supports"] = rep.restart_supports;
    art.report_path = out_dir + "/sparsify_report.json";
    write_json(art.report_path, report);
  }
  return art;
}

RoundArtifacts run_round(const JobConfig& config, const std::string& design_path, long n,
                         const std::string& out_dir, bool write_files) {
  RoundArtifacts art;
  const SolveArtifacts reference = run_solve(config, out_dir, false);
  const ApproxDesign input =
      design_path.empty() ? reference.solution.xi : load_weights(config, design_path);

  art.report.n = n;
  art.report.method = config.rounding_method;
  art.report.support_used = support_size(input.xi);
  bool rounded = false;
  if (config.rounding_method == "stratum-argmax") {
    art.exact = stratum_argmax_round(input, covariate_strata(config.model));
    rounded = true;
  } else {
    try {
      art.exact = efficient_round(
          input, n, criterion_tie_scorer(config.model, config.interest, config.criterion));
      rounded = true;
    } catch (const TooFewTrials&) {
      // reported as efficiency zero below
      art.exact.counts = IntVector::Zero(config.model.grid_size());
      art.exact.n = 0;
    }
  }
  art.report.efficiency =
      rounded ? efficiency(config.model, art.exact, reference.solution.xi, config.interest,
                           config.criterion)
              : 0.0;
  if (write_files) {
    ensure_dir(out_dir);
    if (rounded) {
      art.design_path = out_dir + "/exact_n" + std::to_string(art.exact.n) + ".csv";
      write_design_csv(art.design_path, config.model, art.exact.counts.cast<double>(), true);
    }
    json report;
    report["method"] = art.report.method;
    report["n"] = art.report.n;
    report["support_used"] = art.report.support_used;
    report["efficiency"] = art.report.efficiency;
    report["rounded"] = rounded;
    write_json(out_dir + "/round_report_n" + std::to_string(n) + ".json", report);
  }
  return art;
}

FigureArtifacts run_figures(const JobConfig& config, const std::string& out_dir,
                            bool write_files) {
  FigureArtifacts art;
  if (config.figures.fig1) {
    if (config.k_preset != "identity") {
      throw BadConfig("fig1 sweeps the covariate dimension and needs K preset 'identity'");
    }
    if (config.q1_preset.empty()) {
      throw BadConfig("fig1 rebuilds the interest system and needs a Q1 preset");
    }
    for (Index v2 = config.figures.fig1_v2_min; v2 <= config.figures.fig1_v2_max; ++v2) {
      std::vector<std::vector<double>> levels(static_cast<std::size_t>(v2), {-1.0, 1.0});
      ModelSpec model = make_model(config.model.lambda, factorial_covariates(levels));
      Matrix q1 = config.q1_preset == "centered" ? centering_matrix(model.v1)
                                                 : control_contrasts(model.v1);
      InterestSpec interest =
          assemble_interest(model, std::move(q1), Matrix::Identity(v2, v2));
      CriterionSpec crit = config.criterion;
      crit.s = interest.rank_a;
      const ProductSolution sol = optimal_product(model, interest, crit);
      art.fig1.push_back(Fig1Row{v2, sol.treatment.weights[0]});
    }
  }
  if (config.figures.fig2) {
    const SolveArtifacts solved = run_solve(config, out_dir, false);
    ApproxDesign sparse;
    if (!config.figures.fig2_design.empty()) {
      sparse = load_weights(config, config.figures.fig2_design);
    } else {
      sparse = sparsify(config.model, config.interest, solved.solution.xi, config.constraints,
                        config.seed, config.criterion, config.sparsify_opts)
                   .xi;
    }
    const TieScorer scorer =
        criterion_tie_scorer(config.model, config.interest, config.criterion);
    const auto eff_of = [&](const ApproxDesign& xi, long n) {
      try {
        const ExactDesign exact = efficient_round(xi, n, scorer);
        return efficiency(config.model, exact, solved.solution.xi, config.interest,
                          config.criterion);
      } catch (const TooFewTrials&) {
        return 0.0;
      }
    };
    for (long n = config.figures.fig2_n_min; n <= config.figures.fig2_n_max; ++n) {
      art.fig2.push_back(Fig2Row{n, eff_of(solved.solution.xi, n), eff_of(sparse, n)});
    }
  }

  if (write_files) {
    ensure_dir(out_dir);
    if (config.figures.fig1) {
      art.fig1_path = out_dir + "/fig1.csv";
      std::ofstream out(art.fig1_path);
      if (!out) throw IoError("cannot open " + art.fig1_path);
      out << "v2,w1_star\n";
      for (const auto& row : art.fig1) {
        out << row.v2 << "," << format_full(row.w1_star) << "\n";
      }
    }
    if (config.figures.fig2) {
      art.fig2_path = out_dir + "/fig2.csv";
      std::ofstream out(art.fig2_path);
      if (!out) throw IoError("cannot open " + art.fig2_path);
      out << "n,eff_product,eff_sparse\n";
      for (const auto& row : art.fig2) {
        out << row.n << "," << format_full(row.eff_product) << ","
            << format_full(row.eff_sparse) << "\n";
      }
    }
  }
  return art;
}

VerifyResult run_verify(const JobConfig& config, const std::string& design_path,
                        double transfer_tol, double criterion_tol) {
  VerifyResult res;
  const SolveArtifacts reference = run_solve(config, "", false);
  const ApproxDesign design = load_weights(config, design_path);
  const auto [w_star, alpha_star] = marginals(config.model, reference.solution.xi);
  res.transfer_ok = verify_transfer(config.model, design, w_star, alpha_star, config.interest,
                                    transfer_tol, &res.transfer_residual);
  res.phi_reference = reference.solution.phi_full;
  res.phi_design =
      phi_p(info_matrix_full(config.model, design, config.interest), config.criterion);
  res.criterion_gap_rel = std::abs(res.phi_design - res.phi_reference) /
                          std::max(1e-300, std::abs(res.phi_reference));
  res.criterion_ok = res.criterion_gap_rel <= criterion_tol;
  return res;
}

}  // namespace optdes
