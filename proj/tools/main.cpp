// Command-line front end: solve -> sparsify -> round -> figures / verify.

#include "optdes/pipeline.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <iostream>

namespace {

using namespace optdes;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitVerification = 3;
constexpr int kExitBadConfig = 4;

struct CommonArgs {
  std::string config_path;
  std::string design_path;
  std::string out_dir = "out";
  std::int64_t seed = -1;
};

JobConfig load(const CommonArgs& args) {
  JobConfig config = load_config(args.config_path);
  if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
  return config;
}

void print_weights(const std::string& name, const Vector& w) {
  std::cout << "  " << name << " = (";
  for (Index j = 0; j < w.size(); ++j) {
    std::cout << (j ? ", " : "") << format_human(w[j]);
  }
  std::cout << ")\n";
}

int do_solve(const CommonArgs& args) {
  const JobConfig config = load(args);
  const SolveArtifacts art = run_solve(config, args.out_dir);
  std::cout << "solve: optimal product design written to " << art.design_path << "\n";
  print_weights("w*", art.solution.treatment.weights);
  if (config.interest.s2() > 0) {
    std::cout << "  covariate stage value = "
              << format_human(art.solution.covariate.criterion_value)
              << ", phi* = " << format_human(art.solution.covariate.phi_star) << "\n";
  }
  std::cout << "  phi(product route) = " << format_human(art.solution.phi_product)
            << ", phi(full route) = " << format_human(art.solution.phi_full) << "\n";
  if (config.criterion.s > 0 && art.solution.phi_full == 0.0) {
    std::cout << "  warning: criterion value 0 (information lost for the interest system)\n";
  }
  if (art.solution.treatment.floor_binding) {
    std::cout << "  warning: a treatment weight sits at the interior floor\n";
  }
  if (!art.solution.treatment.converged || !art.solution.covariate.converged) {
    std::cout << "  warning: a marginal solve stopped before its convergence certificate\n";
  }
  std::cout << "  support = " << support_size(art.solution.xi.xi) << " of "
            << config.model.grid_size() << "\n";
  return kExitOk;
}

int do_sparsify(const CommonArgs& args) {
  const JobConfig config = load(args);
  const SparsifyArtifacts art = run_sparsify(config, args.design_path, args.out_dir);
  const SparsifyReport& rep = art.result.report;
  std::cout << "sparsify: design written to " << art.design_path << "\n";
  std::cout << "  support " << rep.support_before << " -> " << rep.support_after
            << " (rank " << rep.rank << ", guaranteed zeros " << rep.zero_guarantee << ")\n";
  std::cout << "  criterion " << format_human(rep.phi_before) << " -> "
            << format_human(rep.phi_after) << ", transfer residual "
            << format_human(rep.transfer_residual) << "\n";
  std::cout << "  verified = " << (rep.verified ? "yes" : "no") << "\n";
  return kExitOk;
}

int do_round(const CommonArgs& args, const std::vector<long>& n_values) {
  const JobConfig config = load(args);
  std::vector<long> ns = n_values.empty() ? config.rounding_n : n_values;
  if (ns.empty()) {
    std::cerr << "round: no trial counts given (flag --n or config rounding.n)\n";
    return kExitBadConfig;
  }
  for (long n : ns) {
    const RoundArtifacts art = run_round(config, args.design_path, n, args.out_dir);
    std::cout << "round: n = " << n << ", method = " << art.report.method
              << ", efficiency = " << format_human(art.report.efficiency);
    if (!art.design_path.empty()) std::cout << " -> " << art.design_path;
    std::cout << "\n";
  }
  return kExitOk;
}

int do_figures(const CommonArgs& args) {
  const JobConfig config = load(args);
  const FigureArtifacts art = run_figures(config, args.out_dir);
  if (!art.fig1_path.empty()) {
    std::cout << "figures: " << art.fig1_path << " (" << art.fig1.size() << " rows)\n";
  }
  if (!art.fig2_path.empty()) {
    std::cout << "figures: " << art.fig2_path << " (" << art.fig2.size() << " rows)\n";
  }
  return kExitOk;
}

int do_verify(const CommonArgs& args, double tol) {
  const JobConfig config = load(args);
  const VerifyResult res = run_verify(config, args.design_path, tol);
  std::cout << "verify: transfer residual = " << format_human(res.transfer_residual)
            << " (tol " << format_human(tol) << "), criterion "
            << format_human(res.phi_design) << " vs " << format_human(res.phi_reference)
            << " (rel gap " << format_human(res.criterion_gap_rel) << ")\n";
  if (res.transfer_ok && res.criterion_ok) {
    std::cout << "verify: PASS\n";
    return kExitOk;
  }
  std::cout << "verify: FAIL\n";
  return kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phi_p-optimal designs for treatment-plus-covariate models: "
               "product solve, LP sparsification, rounding and figure data"};
  app.require_subcommand(1);

  CommonArgs args;
  std::vector<long> n_values;
  double verify_tol = 1e-2;

  const auto add_common = [&](CLI::App* cmd, bool needs_design) {
    cmd->add_option("--config", args.config_path, "job configuration (JSON)")->required();
    auto* design = cmd->add_option("--design", args.design_path, "design table (CSV)");
    if (needs_design) design->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "override the config seed");
  };

  add_common(app.add_subcommand("solve", "compute the optimal product design"), false);
  add_common(app.add_subcommand("sparsify", "small-support optimal design via LP"), false);
  auto* round_cmd = app.add_subcommand("round", "exact design for n trials");
  add_common(round_cmd, false);
  round_cmd->add_option("--n", n_values, "trial counts");
  add_common(app.add_subcommand("figures", "write figure data files"), false);
  auto* verify_cmd = app.add_subcommand("verify", "check optimality transfer of a design");
  add_common(verify_cmd, true);
  verify_cmd->add_option("--tol", verify_tol, "transfer residual tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitBadConfig;
  }

  try {
    if (app.got_subcommand("solve")) return do_solve(args);
    if (app.got_subcommand("sparsify")) return do_sparsify(args);
    if (app.got_subcommand("round")) return do_round(args, n_values);
    if (app.got_subcommand("figures")) return do_figures(args);
    if (app.got_subcommand("verify")) return do_verify(args, verify_tol);
  } catch (const BadConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const InfeasibleDesign& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const InfeasibleMarginal& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const InfeasibleInterest& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const LPInfeasible& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const VerificationFailed& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return kExitVerification;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitBadConfig;
}
