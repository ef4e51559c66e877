// Acceptance suite: one pass/fail line per criterion, executed against the
// shipped example configurations and reference designs. Returns the number of
// failed criteria.

#include "optdes/linalg.hpp"
#include "optdes/pipeline.hpp"
#include "test_util.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

using namespace optdes;

namespace {

std::string g_source_dir = OPTDES_SOURCE_DIR;
int g_failures = 0;

struct Criterion {
  std::string id;
  std::vector<std::string> details;
  bool ok = true;

  explicit Criterion(std::string name) : id(std::move(name)) {}

  void check(bool condition, const std::string& what) {
    details.push_back(std::string(condition ? "ok: " : "FAILED: ") + what);
    ok = ok && condition;
  }

  void finish(const std::string& summary) {
    std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", id.c_str(), summary.c_str());
    for (const auto& line : details) std::printf("        %s\n", line.c_str());
    if (!ok) ++g_failures;
  }
};

bool within(double value, double target, double tol) {
  return std::abs(value - target) <= tol;
}

std::string fmt(double value) { return format_human(value); }

JobConfig example(int index) {
  return load_config(g_source_dir + "/configs/example" + std::to_string(index) + ".json");
}

void criterion_1() {
  Criterion crit("1 example1 marginal solve");
  const SolveArtifacts art = run_solve(example(1), "", false);
  const Vector& w = art.solution.treatment.weights;
  crit.check(within(w[0], 0.236, 1e-3) && within(w[1], 0.382, 1e-3) &&
                 within(w[2], 0.382, 1e-3),
             "w* = (" + fmt(w[0]) + ", " + fmt(w[1]) + ", " + fmt(w[2]) +
                 ") vs (0.236, 0.382, 0.382) within 1e-3");
  const Vector& alpha = art.solution.covariate.weights;
  const double alpha_err = (alpha - Vector::Constant(8, 0.125)).cwiseAbs().maxCoeff();
  crit.check(alpha_err <= 1e-4, "alpha* uniform within 1e-4 (max dev " + fmt(alpha_err) + ")");
  crit.finish("treatment weights and uniform covariate design");
}

void criterion_2() {
  Criterion crit("2 example1 product design");
  const SolveArtifacts art = run_solve(example(1), "", false);
  const double low = art.solution.xi.xi[0];
  const double high = art.solution.xi.xi[8];
  crit.check(within(low, 0.0295, 5e-4), "control cell weight " + fmt(low) + " vs 0.0295");
  crit.check(within(high, 0.0477, 5e-4), "test cell weight " + fmt(high) + " vs 0.0477");
  crit.finish("product design entries within 5e-4");
}

void criterion_3() {
  Criterion crit("3 example1 sparsification");
  const JobConfig config = example(1);
  const SparsifyArtifacts art = run_sparsify(config, "", "", false);
  const SparsifyReport& rep = art.result.report;
  crit.check(rep.support_after <= 10,
             "support " + std::to_string(rep.support_after) + " <= 10");
  const double rel = std::abs(rep.phi_after - rep.phi_before) / rep.phi_before;
  crit.check(rel <= 1e-8, "criterion equality (relative gap " + fmt(rel) + " <= 1e-8)");
  const auto [w, alpha] = marginals(config.model, art.reference.xi);
  crit.check(verify_transfer(config.model, art.result.xi, w, alpha, config.interest),
             "verify_transfer true");
  crit.finish("small-support design with equal information");
}

void criterion_4() {
  Criterion crit("4 example1 rounding efficiencies");
  const JobConfig config = example(1);
  const RoundArtifacts sparse =
      run_round(config, g_source_dir + "/data/example1_sparse10.csv", 48, "", false);
  IntVector expected(24);
  expected << 2, 0, 1, 3, 1, 3, 2, 0, 0, 9, 0, 0, 0, 0, 9, 0, 9, 0, 0, 0, 0, 0, 0, 9;
  crit.check((sparse.exact.counts - expected).cwiseAbs().maxCoeff() == 0,
             "published sparse design rounds to the published counts at n = 48");
  crit.check(within(sparse.report.efficiency, 0.9991, 1e-3),
             "its efficiency " + fmt(sparse.report.efficiency) + " vs 0.9991 within 1e-3");
  const RoundArtifacts product = run_round(config, "", 48, "", false);
  bool all_two = true;
  for (Index j = 0; j < product.exact.counts.size(); ++j) {
    all_two = all_two && product.exact.counts[j] == 2;
  }
  crit.check(all_two, "product design rounds to two trials per cell at n = 48");
  crit.check(within(product.report.efficiency, 0.9641, 1e-3),
             "its efficiency " + fmt(product.report.efficiency) + " vs 0.9641 within 1e-3");
  crit.finish("apportionment counts and efficiencies");
}

void criterion_5() {
  Criterion crit("5 example2 E-optimality (rank-deficient)");
  const JobConfig config = example(2);
  const SolveArtifacts art = run_solve(config, "", false);
  crit.check(within(art.solution.covariate.criterion_value, 0.2, 1e-3),
             "covariate-stage E-value " + fmt(art.solution.covariate.criterion_value) +
                 " vs 0.2 within 1e-3");
  const Vector& w = art.solution.treatment.weights;
  crit.check(within(w[0], 0.273, 1e-3) && within(w[1], 0.364, 1e-3) &&
                 within(w[2], 0.364, 1e-3),
             "w* = (" + fmt(w[0]) + ", " + fmt(w[1]) + ", " + fmt(w[2]) +
                 ") vs (0.273, 0.364, 0.364) within 1e-3");
  crit.check(within(art.solution.xi.xi[0], 0.0182, 5e-4) &&
                 within(art.solution.xi.xi[15], 0.0242, 5e-4),
             "product values " + fmt(art.solution.xi.xi[0]) + " / " +
                 fmt(art.solution.xi.xi[15]) + " vs 0.0182 / 0.0242 within 5e-4");
  const SparsifyArtifacts sparse = run_sparsify(config, "", "", false);
  crit.check(sparse.result.report.support_after <= 28,
             "sparsified support " + std::to_string(sparse.result.report.support_after) +
                 " <= 28");
  const double rel = std::abs(sparse.result.report.phi_after - sparse.result.report.phi_before) /
                     sparse.result.report.phi_before;
  crit.check(rel <= 1e-6, "E-criterion equality (relative gap " + fmt(rel) + " <= 1e-6)");
  const RoundArtifacts rounded =
      run_round(config, g_source_dir + "/data/example2_sparse28.csv", 40, "", false);
  crit.check(within(rounded.report.efficiency, 0.8493, 1e-3),
             "published design rounded at n = 40: efficiency " +
                 fmt(rounded.report.efficiency) + " vs 0.8493 within 1e-3");
  crit.finish("marginal values, sparsification and rounding");
}

void criterion_6() {
  Criterion crit("6 example3 constrained design (s2 = 0)");
  const JobConfig config = example(3);
  const SolveArtifacts art = run_solve(config, "", false);
  const Vector& w = art.solution.treatment.weights;
  crit.check(within(w[0], 0.431, 1e-3) && within(w[1], 0.249, 1e-3) &&
                 within(w[2], 0.176, 1e-3) && within(w[3], 0.144, 1e-3),
             "w* = (" + fmt(w[0]) + ", " + fmt(w[1]) + ", " + fmt(w[2]) + ", " + fmt(w[3]) +
                 ") vs (0.431, 0.249, 0.176, 0.144) within 1e-3");
  const SparsifyArtifacts sparse = run_sparsify(config, "", "", false);
  crit.check(sparse.result.report.support_after <= 12,
             "sparsified support " + std::to_string(sparse.result.report.support_after) +
                 " <= 12 under the one-trial-per-time constraint");
  const double rel = std::abs(sparse.result.report.phi_after - sparse.result.report.phi_before) /
                     sparse.result.report.phi_before;
  crit.check(rel <= 1e-8, "A-criterion equality (relative gap " + fmt(rel) + ")");
  const RoundArtifacts rounded =
      run_round(config, g_source_dir + "/data/example3_sparse12.csv", 6, "", false);
  const Index schedule[6] = {0, 0, 3, 2, 1, 0};
  bool exact_schedule = true;
  for (Index k = 0; k < 6; ++k) {
    for (Index i = 0; i < 4; ++i) {
      exact_schedule = exact_schedule &&
                       rounded.exact.counts[config.model.flat(i, k)] ==
                           (i == schedule[k] ? 1 : 0);
    }
  }
  crit.check(exact_schedule, "argmax rounding reproduces the published schedule exactly");
  crit.check(within(rounded.report.efficiency, 0.8871, 1e-3),
             "its efficiency " + fmt(rounded.report.efficiency) + " vs 0.8871 within 1e-3");
  crit.finish("covariate-resistant solve, sparsification and argmax rounding");
}

void criterion_7() {
  Criterion crit("7 figure data");
  JobConfig config = example(1);
  const FigureArtifacts art = run_figures(config, "", false);
  bool v2_3_ok = false;
  for (const auto& row : art.fig1) {
    if (row.v2 == 3) v2_3_ok = within(row.w1_star, 0.236, 1e-3);
  }
  crit.check(v2_3_ok, "fig1 sweep gives w1* = 0.236 within 1e-3 at v2 = 3");
  bool product_zero = true, sparse_positive = true;
  for (const auto& row : art.fig2) {
    if (row.n <= 23 && row.eff_product != 0.0) product_zero = false;
    if (row.n >= 10 && row.eff_sparse <= 0.0) sparse_positive = false;
  }
  crit.check(product_zero, "fig2 product-rounding efficiency is 0 for all n <= 23");
  crit.check(sparse_positive, "fig2 sparse-rounding efficiency is positive for n >= 10");
  crit.finish("figure sweeps");
}

void criterion_8() {
  Criterion crit("8 property suites");
  // (a) dominance of the product of the marginals, random models as specified
  {
    auto gen = test::rng(801);
    int models = 0, violations = 0, checked = 0;
    double worst = 0.0;
    std::string worst_detail;
    while (models < 10) {
      const ModelSpec spec = test::random_model(gen);
      const InterestSpec interest = assemble_interest(
          spec, control_contrasts(spec.v1), Matrix::Identity(spec.v2, spec.v2));
      const CriterionSpec pcrit{-1.0, interest.rank_a};
      int designs = 0;
      int tries = 0;
      while (designs < 20 && tries++ < 200) {
        const ApproxDesign xi{test::random_simplex(gen, spec.grid_size())};
        const auto [w, alpha] = marginals(spec, xi);
        double phi_full = 0.0, phi_prod = 0.0;
        try {
          phi_full = phi_p(info_matrix_full(spec, xi, interest), pcrit);
          phi_prod = phi_p(product_info(spec, w, alpha, interest), pcrit);
        } catch (const Error&) {
          continue;
        }
        ++designs;
        ++checked;
        if (phi_full > phi_prod + 1e-9 * std::max(1.0, phi_prod)) {
          ++violations;
          if (phi_full - phi_prod > worst) {
            worst = phi_full - phi_prod;
            worst_detail = "phi(full) = " + fmt(phi_full) + " > phi(product of marginals) = " +
                           fmt(phi_prod) + " (v1 = " + std::to_string(spec.v1) +
                           ", d = " + std::to_string(spec.d) + ")";
          }
        }
      }
      ++models;
    }
    crit.check(violations == 0,
               "(a) marginal-product dominance on " + std::to_string(checked) +
                   " random feasible designs: " + std::to_string(violations) +
                   " violations" + (violations ? "; worst " + worst_detail : ""));
    if (violations > 0) {
      crit.details.push_back(
          "    note: the dominance claim is provably false for non-constant efficiency "
          "functions (see the heteroscedastic regression case in the unit suite); with "
          "lambda held constant the same suite passes below");
    }
    // supplementary homoscedastic run (the classical result)
    auto gen2 = test::rng(802);
    int hom_violations = 0, hom_checked = 0;
    for (int m = 0; m < 10; ++m) {
      ModelSpec spec = test::random_model(gen2);
      spec.lambda = Vector::Ones(spec.v1);
      const InterestSpec interest = assemble_interest(
          spec, control_contrasts(spec.v1), Matrix::Identity(spec.v2, spec.v2));
      const CriterionSpec pcrit{-1.0, interest.rank_a};
      int designs = 0, tries = 0;
      while (designs < 20 && tries++ < 200) {
        const ApproxDesign xi{test::random_simplex(gen2, spec.grid_size())};
        const auto [w, alpha] = marginals(spec, xi);
        double phi_full = 0.0, phi_prod = 0.0;
        try {
          phi_full = phi_p(info_matrix_full(spec, xi, interest), pcrit);
          phi_prod = phi_p(product_info(spec, w, alpha, interest), pcrit);
        } catch (const Error&) {
          continue;
        }
        ++designs;
        ++hom_checked;
        if (phi_full > phi_prod + 1e-9 * std::max(1.0, phi_prod)) ++hom_violations;
      }
    }
    crit.details.push_back("    supplementary (constant lambda): " +
                           std::to_string(hom_violations) + " violations on " +
                           std::to_string(hom_checked) + " designs");
  }
  // (b) homogeneity and orthogonal invariance
  {
    auto gen = test::rng(803);
    bool ok = true;
    for (int trial = 0; trial < 500; ++trial) {
      const Index order = 2 + static_cast<Index>(gen() % 5);
      const Matrix n = test::random_psd(gen, order) + 0.05 * Matrix::Identity(order, order);
      const double c = test::uniform(gen, 0.1, 10.0);
      const Matrix u = test::random_orthogonal(gen, order);
      const double p = (trial % 3 == 0) ? 0.0
                       : (trial % 3 == 1) ? -1.0
                                          : -std::numeric_limits<double>::infinity();
      const Vector eigs = sym_eig(n).eigenvalues;
      const double base = phi_p_spectrum(eigs, order, p);
      const double scaled = phi_p_spectrum(Vector(c * eigs), order, p);
      const double rotated =
          phi_p_spectrum(sym_eig(Matrix(u.transpose() * n * u)).eigenvalues, order, p);
      ok = ok && std::abs(scaled - c * base) <= 1e-10 * std::max(1.0, c * base) &&
           std::abs(rotated - base) <= 1e-9 * std::max(1.0, base);
    }
    crit.check(ok, "(b) phi_p homogeneity and orthogonal invariance on 500 random matrices");
  }
  // (c) B G B = B
  {
    auto gen = test::rng(804);
    bool ok = true;
    for (int trial = 0; trial < 200; ++trial) {
      const Index order = 3 + static_cast<Index>(gen() % 6);
      const Index split = 1 + static_cast<Index>(gen() % static_cast<std::uint64_t>(order - 1));
      Matrix b = test::random_psd(gen, order);
      b.topLeftCorner(split, split) += 0.1 * Matrix::Identity(split, split);
      const Matrix g = block_ginverse(b, split);
      ok = ok && (b * g * b - b).norm() <= 1e-8 * std::max(1.0, b.norm());
    }
    crit.check(ok, "(c) B G B = B for 200 random PSD block matrices");
  }
  // (d) zero guarantee on every sparsify run
  {
    bool ok = true;
    for (int index = 1; index <= 3 && ok; ++index) {
      JobConfig config = example(index);
      config.sparsify_opts.reduce_support = false;
      for (std::uint64_t seed = 0; seed < 3 && ok; ++seed) {
        config.seed = seed;
        const SparsifyArtifacts art = run_sparsify(config, "", "", false);
        ok = art.result.report.support_after <=
             static_cast<Index>(art.result.report.rank);
      }
    }
    crit.check(ok, "(d) vertex support <= rank(C) on every sparsify run (3 examples x 3 seeds)");
  }
  // (e) marginal solver versus the simplex grid oracle
  {
    auto gen = test::rng(805);
    bool ok = true;
    int done = 0;
    double worst = 0.0;
    while (done < 20) {
      const ModelSpec spec = test::random_model(gen, 4, 5);
      const InterestSpec interest = assemble_interest(
          spec, control_contrasts(spec.v1), Matrix::Identity(spec.v2, spec.v2));
      CriterionSpec pcrit = (gen() % 3 == 0) ? CriterionSpec::E(interest.rank_a)
                                             : CriterionSpec::A(interest.rank_a);
      ProductSolution sol;
      try {
        sol = optimal_product(spec, interest, pcrit);
      } catch (const Error&) {
        continue;
      }
      const InfoMatrix nk = info_matrix_covariate(
          spec, MarginalCovariateDesign{sol.covariate.weights}, interest.k);
      const Vector delta_all = sym_eig(nk.n).eigenvalues;
      const Vector delta = delta_all.head(interest.rank_k);
      const auto objective = [&](const Vector& w) {
        Vector padded = w.cwiseMax(1e-12);
        padded /= padded.sum();
        InfoMatrix nq;
        try {
          nq = info_matrix_treatment(spec, MarginalTreatmentDesign{padded}, interest.q1);
        } catch (const Error&) {
          return 0.0;
        }
        const Vector gq = sym_eig(nq.n).eigenvalues;
        Vector all(interest.rank_q1 + delta.size());
        for (Index j = 0; j < interest.rank_q1; ++j) all[j] = gq[j];
        const double total = spec.lambda.dot(padded);
        for (Index j = 0; j < delta.size(); ++j) all[interest.rank_q1 + j] = total * delta[j];
        return phi_p_spectrum(all, pcrit.s, pcrit.p);
      };
      const auto [w_grid, grid_value] = simplex_grid_oracle(objective, spec.v1, 200);
      const double gap = (grid_value - sol.phi_product) / std::max(1.0, grid_value);
      worst = std::max(worst, gap);
      ok = ok && gap <= 1e-3;
      ++done;
    }
    crit.check(ok, "(e) solver never beaten by the resolution-200 grid oracle beyond 1e-3 "
                   "on 20 random instances (worst gap " + fmt(worst) + ")");
  }
  crit.finish("randomized property suites");
}

void criterion_9() {
  Criterion crit("9 published designs verify as inputs");
  const struct {
    int example;
    const char* file;
  } cases[] = {
      {1, "/data/example1_sparse10.csv"},
      {2, "/data/example2_sparse28.csv"},
      {3, "/data/example3_sparse12.csv"},
  };
  for (const auto& c : cases) {
    const JobConfig config = example(c.example);
    const VerifyResult res = run_verify(config, g_source_dir + c.file);
    crit.check(res.transfer_ok && res.criterion_ok,
               std::string("example") + std::to_string(c.example) +
                   " reference design: transfer residual " + fmt(res.transfer_residual) +
                   ", criterion gap " + fmt(res.criterion_gap_rel));
  }
  crit.finish("four-decimal reference designs pass the transfer and criterion checks");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_source_dir = argv[1];
  try {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
  } catch (const Error& e) {
    std::cerr << "acceptance suite aborted: " << e.what() << "\n";
    return 99;
  }
  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
  } else {
    std::printf("%d acceptance criterion(s) failed\n", g_failures);
  }
  return g_failures;
}
