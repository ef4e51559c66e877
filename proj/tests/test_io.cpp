#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "optdes/io.hpp"
#include "optdes/pipeline.hpp"
#include "test_util.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace optdes;

namespace {

const std::string kSourceDir = OPTDES_SOURCE_DIR;

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("design file round trip is lossless and idempotent") {
  auto gen = test::rng(51);
  const ModelSpec spec = test::random_model(gen);
  const Vector xi = test::random_simplex(gen, spec.grid_size());
  const std::string first = temp_path("optdes_roundtrip1.csv");
  const std::string second = temp_path("optdes_roundtrip2.csv");
  write_design_csv(first, spec, xi, false);
  const DesignTable read1 = read_design_csv(first);
  CHECK(read1.v1 == spec.v1);
  CHECK(read1.d == spec.d);
  CHECK(read1.v2 == spec.v2);
  CHECK_FALSE(read1.counts);
  CHECK((read1.values - xi).cwiseAbs().maxCoeff() == 0.0);  // 17 digits round-trip
  write_design_csv(second, spec, read1.values, false);
  CHECK(slurp(first) == slurp(second));
}

TEST_CASE("count tables round trip") {
  auto gen = test::rng(52);
  const ModelSpec spec = test::random_model(gen);
  Vector counts(spec.grid_size());
  for (Index j = 0; j < counts.size(); ++j) counts[j] = static_cast<double>(gen() % 7);
  const std::string path = temp_path("optdes_counts.csv");
  write_design_csv(path, spec, counts, true);
  const DesignTable read = read_design_csv(path);
  CHECK(read.counts);
  const ExactDesign exact = to_exact_design(spec, read);
  for (Index j = 0; j < counts.size(); ++j) {
    CHECK(exact.counts[j] == static_cast<int>(counts[j]));
  }
}

TEST_CASE("published tables load with renormalization") {
  const auto ex = test::cube_example();
  const DesignTable table = read_design_csv(kSourceDir + "/data/example1_sparse10.csv");
  double drift = 0.0;
  const ApproxDesign xi = to_approx_design(ex.model, table, &drift);
  CHECK(drift > 0.0);          // four-decimal table does not sum to one exactly
  CHECK(drift < 1e-3);
  CHECK(xi.xi.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(support_size(xi.xi) == 10);
}

TEST_CASE("malformed design files are rejected") {
  const std::string path = temp_path("optdes_bad.csv");
  {
    std::ofstream out(path);
    out << "not a design file\n";
  }
  CHECK_THROWS_AS(read_design_csv(path), IoError);
  {
    std::ofstream out(path);
    out << "# design v1=2 d=2 v2=1 ordering=k-fastest kind=weights\n";
    out << "i,k,value\n";
    out << "1,1,0.5\n";  // missing cells
  }
  CHECK_THROWS_AS(read_design_csv(path), IoError);
  CHECK_THROWS_AS(read_design_csv(temp_path("optdes_missing.csv")), IoError);
}

TEST_CASE("example configs parse to the expected jobs") {
  {
    const JobConfig config = load_config(kSourceDir + "/configs/example1.json");
    CHECK(config.model.v1 == 3);
    CHECK(config.model.d == 8);
    CHECK(config.model.v2 == 3);
    CHECK(config.criterion.p == -1.0);
    CHECK(config.criterion.s == 5);
    CHECK(config.interest.s1() == 2);
    CHECK(config.interest.s2() == 3);
    CHECK(config.figures.fig1);
    CHECK(config.figures.fig2);
    CHECK(config.rounding_n == std::vector<long>{48});
  }
  {
    const JobConfig config = load_config(kSourceDir + "/configs/example2.json");
    CHECK(config.model.d == 15);
    CHECK(config.model.v2 == 8);
    CHECK(config.criterion.is_e());
    CHECK(config.interest.rank_deficient);
    CHECK(config.criterion.s == 8);
  }
  {
    const JobConfig config = load_config(kSourceDir + "/configs/example3.json");
    CHECK(config.model.v1 == 4);
    CHECK(config.interest.s2() == 0);
    CHECK(config.stratum_uniform);
    CHECK(config.constraints.size() == 6);
    CHECK(config.rounding_method == "stratum-argmax");
    const Vector alpha = resolved_alpha(config);
    CHECK((alpha - Vector::Constant(6, 1.0 / 6)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("criterion aliases") {
  const std::string path = temp_path("optdes_alias.json");
  const auto write_with_p = [&](const std::string& p) {
    std::ofstream out(path);
    out << R"({"model":{"lambda":[1,1],"covariates":{"type":"factorial","levels":[[-1,1]]}},)"
        << R"("interest":{"Q1":"control","K":"identity"},"criterion":{"p":)" << p << "}}";
  };
  write_with_p("\"D\"");
  CHECK(load_config(path).criterion.p == 0.0);
  write_with_p("\"A\"");
  CHECK(load_config(path).criterion.p == -1.0);
  write_with_p("\"E\"");
  CHECK(load_config(path).criterion.is_e());
  write_with_p("\"-inf\"");
  CHECK(load_config(path).criterion.is_e());
  write_with_p("-2.5");
  CHECK(load_config(path).criterion.p == -2.5);
  write_with_p("0.5");
  CHECK_THROWS_AS(load_config(path), BadConfig);
  write_with_p("\"Z\"");
  CHECK_THROWS_AS(load_config(path), BadConfig);
}

TEST_CASE("bad configs are rejected with BadConfig") {
  const std::string path = temp_path("optdes_badcfg.json");
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_config(path), BadConfig);
  {
    std::ofstream out(path);
    out << R"({"model":{"lambda":[1,1],"covariates":{"type":"mystery"}},)"
        << R"("interest":{"Q1":"control","K":"none"},"criterion":{"p":"A"}})";
  }
  CHECK_THROWS_AS(load_config(path), BadConfig);
  CHECK_THROWS_AS(load_config(temp_path("optdes_nothere.json")), BadConfig);
}

TEST_CASE("formatting helpers") {
  CHECK(format_human(0.123456789) == "0.123457");
  const double value = 0.12345678901234567;
  CHECK(std::stod(format_full(value)) == value);
}

TEST_CASE("pipeline outputs are byte-identical across reruns") {
  const JobConfig config = load_config(kSourceDir + "/configs/example1.json");
  const std::string dir_a = temp_path("optdes_det_a");
  const std::string dir_b = temp_path("optdes_det_b");
  run_solve(config, dir_a);
  run_solve(config, dir_b);
  CHECK(slurp(dir_a + "/xi_star.csv") == slurp(dir_b + "/xi_star.csv"));
  CHECK(slurp(dir_a + "/solve_report.json") == slurp(dir_b + "/solve_report.json"));
  run_sparsify(config, "", dir_a);
  run_sparsify(config, "", dir_b);
  CHECK(slurp(dir_a + "/xi_sparse.csv") == slurp(dir_b + "/xi_sparse.csv"));
}

TEST_CASE("verify rejects a non-transferring design") {
  const JobConfig config = load_config(kSourceDir + "/configs/example1.json");
  const std::string path = temp_path("optdes_uniform.csv");
  write_design_csv(path, config.model, Vector::Constant(24, 1.0 / 24), false);
  const VerifyResult res = run_verify(config, path);
  CHECK_FALSE(res.transfer_ok);
  CHECK_FALSE(res.criterion_ok);
}
