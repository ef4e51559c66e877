#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "optdes/criteria.hpp"
#include "optdes/marginal_opt.hpp"
#include "optdes/rounding.hpp"
#include "test_util.hpp"

using namespace optdes;

namespace {

ApproxDesign cube_sparse_published() {
  Vector t2(24);
  t2 << 0.0378, 0, 0.0212, 0.0591, 0.0212, 0.0591, 0.0378, 0,  //
      0, 0.1909, 0, 0, 0, 0, 0.1909, 0,                        //
      0.1909, 0, 0, 0, 0, 0, 0, 0.1909;
  t2 /= t2.sum();
  return ApproxDesign{t2};
}

ApproxDesign trend_sparse_published() {
  Vector t7(24);
  t7 << 0.0880, 0.1667, 0.0552, 0.0166, 0, 0.1048,  //
      0.0787, 0, 0, 0, 0.1667, 0.0036,              //
      0, 0, 0, 0.1501, 0, 0.0260,                   //
      0, 0, 0.1115, 0, 0, 0.0323;
  t7 /= t7.sum();
  return ApproxDesign{t7};
}

}  // namespace

TEST_CASE("efficient_round gives the balanced apportionment on the cube example") {
  const auto ex = test::cube_example();
  const ProductSolution sol = optimal_product(ex.model, ex.interest, ex.crit);
  const ExactDesign exact = efficient_round(sol.xi, 48);
  CHECK(exact.n == 48);
  for (Index j = 0; j < 24; ++j) CHECK(exact.counts[j] == 2);
}

TEST_CASE("efficient_round on a single-point design") {
  Vector xi = Vector::Zero(4);
  xi[2] = 1.0;
  const ExactDesign exact = efficient_round(ApproxDesign{xi}, 5);
  CHECK(exact.counts[2] == 5);
  CHECK(exact.n == 5);
}

TEST_CASE("efficient_round reproduces the published counts at n = 48") {
  const ApproxDesign sparse = cube_sparse_published();
  const ExactDesign exact = efficient_round(sparse, 48);
  IntVector expected(24);
  expected << 2, 0, 1, 3, 1, 3, 2, 0,  //
      0, 9, 0, 0, 0, 0, 9, 0,          //
      9, 0, 0, 0, 0, 0, 0, 9;
  CHECK((exact.counts - expected).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("efficient_round refuses too few trials") {
  const ApproxDesign sparse = cube_sparse_published();
  CHECK_THROWS_AS(efficient_round(sparse, 9), TooFewTrials);  // support is 10
  CHECK(efficient_round(sparse, 10).n == 10);
}

TEST_CASE("apportionment multiplier optimality on random designs") {
  auto gen = test::rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const Index size = 4 + static_cast<Index>(gen() % 10);
    Vector xi = test::random_simplex(gen, size);
    const long n = size + static_cast<long>(gen() % 40);
    const ExactDesign exact = efficient_round(ApproxDesign{xi}, n);
    long total = 0;
    for (Index j = 0; j < size; ++j) {
      CHECK(exact.counts[j] > 0);  // support preserved
      total += exact.counts[j];
    }
    CHECK(total == n);
    // no single-unit transfer raises the minimum of n_j / xi_j
    double min_ratio = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < size; ++j) {
      min_ratio = std::min(min_ratio, exact.counts[j] / xi[j]);
    }
    for (Index from = 0; from < size; ++from) {
      if (exact.counts[from] <= 1) continue;
      for (Index to = 0; to < size; ++to) {
        if (to == from) continue;
        double moved_min = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < size; ++j) {
          const double count = exact.counts[j] + (j == to ? 1 : 0) - (j == from ? 1 : 0);
          moved_min = std::min(moved_min, count / xi[j]);
        }
        CHECK(moved_min <= min_ratio + 1e-12);
      }
    }
  }
}

TEST_CASE("efficient_round determinism") {
  auto gen = test::rng(42);
  const Vector xi = test::random_simplex(gen, 12);
  const ExactDesign a = efficient_round(ApproxDesign{xi}, 17);
  const ExactDesign b = efficient_round(ApproxDesign{xi}, 17);
  CHECK((a.counts - b.counts).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("stratum_argmax_round reproduces the published schedule") {
  const auto ex = test::trend_example();
  const ApproxDesign sparse = trend_sparse_published();
  const ExactDesign exact = stratum_argmax_round(sparse, covariate_strata(ex.model));
  CHECK(exact.n == 6);
  const Index chosen_treatment[6] = {0, 0, 3, 2, 1, 0};  // one trial per time point
  for (Index k = 0; k < 6; ++k) {
    for (Index i = 0; i < 4; ++i) {
      CHECK(exact.counts[ex.model.flat(i, k)] == (i == chosen_treatment[k] ? 1 : 0));
    }
  }
  // its efficiency against the optimal product design
  const ProductSolution sol = optimal_product(ex.model, ex.interest, ex.crit);
  const double eff = efficiency(ex.model, exact, sol.xi, ex.interest, ex.crit);
  CHECK(eff == doctest::Approx(0.8871).epsilon(1e-3 / 0.8871));
}

TEST_CASE("stratum_argmax_round tie-break and singular outcome") {
  const auto ex = test::trend_example();
  // uniform design: lowest treatment wins every stratum
  const ApproxDesign uniform{Vector::Constant(24, 1.0 / 24)};
  const ExactDesign exact = stratum_argmax_round(uniform, covariate_strata(ex.model));
  for (Index k = 0; k < 6; ++k) CHECK(exact.counts[ex.model.flat(0, k)] == 1);

  // the optimal product design concentrates on treatment 1 and the result is
  // singular: efficiency 0
  const ProductSolution sol = optimal_product(ex.model, ex.interest, ex.crit);
  const ExactDesign from_product = stratum_argmax_round(sol.xi, covariate_strata(ex.model));
  for (Index k = 0; k < 6; ++k) CHECK(from_product.counts[ex.model.flat(0, k)] == 1);
  const double eff = efficiency(ex.model, from_product, sol.xi, ex.interest, ex.crit);
  CHECK(eff == 0.0);
}

TEST_CASE("stratum_argmax_round validates strata") {
  const auto ex = test::trend_example();
  const ApproxDesign uniform{Vector::Constant(24, 1.0 / 24)};
  std::vector<std::vector<Index>> empty_stratum = covariate_strata(ex.model);
  empty_stratum.push_back({});
  CHECK_THROWS_AS(stratum_argmax_round(uniform, empty_stratum), BadStrata);

  std::vector<std::vector<Index>> overlapping = covariate_strata(ex.model);
  overlapping[1].push_back(overlapping[0][0]);
  CHECK_THROWS_AS(stratum_argmax_round(uniform, overlapping), BadStrata);

  std::vector<std::vector<Index>> incomplete = covariate_strata(ex.model);
  incomplete.pop_back();
  CHECK_THROWS_AS(stratum_argmax_round(uniform, incomplete), BadStrata);
}

TEST_CASE("criterion-gain tie scorer picks the best tied increment") {
  // two equal weights but only one increment choice balances the counts
  Vector xi(4);
  xi << 0.4, 0.4, 0.1, 0.1;
  // n = 5: initial counts ceil(3.5 * xi) = (2, 2, 1, 1) sum 6 -> one decrement
  // among the tied (2,2) cells; a scorer preferring the second cell flips the
  // default lowest-index choice
  const TieScorer prefer_high_index = [](const IntVector& counts, long) {
    return static_cast<double>(counts[1]);
  };
  const ExactDesign plain = efficient_round(ApproxDesign{xi}, 5);
  const ExactDesign scored = efficient_round(ApproxDesign{xi}, 5, prefer_high_index);
  CHECK(plain.counts[0] + plain.counts[1] == scored.counts[0] + scored.counts[1]);
  CHECK(plain.counts[0] == 1);   // lowest index decremented
  CHECK(scored.counts[0] == 1 + (scored.counts[1] - plain.counts[1]));
  CHECK(scored.counts[1] == 2);  // scorer protects the second cell
}
