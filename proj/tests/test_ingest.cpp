#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "distcause/errors.hpp"
#include "distcause/ingest.hpp"
#include "distcause/synthetic.hpp"
#include "oracles.hpp"

using namespace distcause;

namespace {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("binning rule: boundary goes to the upper bin") {
  BinningRule rule;
  rule.column = "credit_line";
  rule.breakpoints = {9000.0, 15000.0};
  rule.labels = {"Low", "Middle", "High"};
  rule.validate();
  CHECK(rule.label_for(0.0) == "Low");
  CHECK(rule.label_for(8999.99) == "Low");
  CHECK(rule.label_for(9000.0) == "Middle");
  CHECK(rule.label_for(14999.0) == "Middle");
  CHECK(rule.label_for(15000.0) == "High");
  CHECK(rule.label_for(1e9) == "High");

  BinningRule bad = rule;
  bad.breakpoints = {15000.0, 9000.0};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = rule;
  bad.labels = {"Low", "Low", "High"};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("ingest: small join") {
  TempDir dir("distcause_ingest_small");
  write_file(dir.file("units.csv"),
             "unit_id,treatment,age,income\n"
             "u1,a,30,1.5\n"
             "u2,b,40,2.5\n"
             "u3,a,50,3.5\n");
  write_file(dir.file("obs.csv"),
             "unit_id,value\n"
             "u1,10\nu1,11\nu2,20\nu2,21\nu3,30\nu3,31\n");
  const IngestResult result = ingest(dir.file("units.csv"), dir.file("obs.csv"),
                                     std::nullopt, 1);
  REQUIRE(result.units.size() == 3u);
  CHECK(result.covariate_names == std::vector<std::string>{"age", "income"});
  CHECK(result.treatment_order == std::vector<std::string>{"a", "b"});
  CHECK(result.units[0].observations == std::vector<double>{10.0, 11.0});
  CHECK(result.units[1].covariates(1) == 2.5);
}

TEST_CASE("ingest: binning on a numeric column") {
  TempDir dir("distcause_ingest_bin");
  write_file(dir.file("units.csv"),
             "unit_id,credit_line,age\n"
             "u1,8000,30\n"
             "u2,9000,40\n"
             "u3,20000,50\n");
  write_file(dir.file("obs.csv"), "unit_id,value\nu1,1\nu2,2\nu3,3\n");
  BinningRule rule;
  rule.column = "credit_line";
  rule.breakpoints = {9000.0, 15000.0};
  rule.labels = {"Low", "Middle", "High"};
  const IngestResult result =
      ingest(dir.file("units.csv"), dir.file("obs.csv"), rule, 1);
  CHECK(result.units[0].treatment == "Low");
  CHECK(result.units[1].treatment == "Middle");
  CHECK(result.units[2].treatment == "High");
  CHECK(result.treatment_order == std::vector<std::string>{"Low", "Middle", "High"});
  // The binned column is not a covariate.
  CHECK(result.covariate_names == std::vector<std::string>{"age"});
}

TEST_CASE("ingest: errors carry actionable detail") {
  TempDir dir("distcause_ingest_err");
  write_file(dir.file("units.csv"), "id,treatment,x\nu1,a,1\n");
  write_file(dir.file("obs.csv"), "unit_id,value\nu1,1\n");
  CHECK_THROWS_WITH_AS(ingest(dir.file("units.csv"), dir.file("obs.csv"), std::nullopt, 1),
                       "missing columns: unit_id", ValidationError);

  write_file(dir.file("units2.csv"), "unit_id,treatment,x\nu1,a,1\n");
  write_file(dir.file("obs2.csv"), "unit_id,value\nu1,1\nu9,2\nu8,3\n");
  CHECK_THROWS_WITH_AS(ingest(dir.file("units2.csv"), dir.file("obs2.csv"), std::nullopt, 1),
                       "orphan observation rows: 3 4", ValidationError);

  write_file(dir.file("units3.csv"), "unit_id,treatment,x\nu1,a,1\nu2,b,bad\n");
  CHECK_THROWS_AS(ingest(dir.file("units3.csv"), dir.file("obs2.csv"), std::nullopt, 1),
                  ValidationError);
}

TEST_CASE("ingest: min_obs drops units with a warning") {
  TempDir dir("distcause_ingest_drop");
  write_file(dir.file("units.csv"),
             "unit_id,treatment,x\nu1,a,1\nu2,b,2\nu3,a,3\n");
  write_file(dir.file("obs.csv"),
             "unit_id,value\nu1,1\nu1,2\nu1,3\nu2,4\nu3,5\nu3,6\nu3,7\n");
  const IngestResult result =
      ingest(dir.file("units.csv"), dir.file("obs.csv"), std::nullopt, 3);
  CHECK(result.units.size() == 2u);
  REQUIRE(result.warnings.size() == 1u);
  CHECK(result.warnings[0].find("u2") != std::string::npos);

  CHECK_THROWS_AS(ingest(dir.file("units.csv"), dir.file("obs.csv"), std::nullopt, 100),
                  ValidationError);
}

TEST_CASE("ingest: synthetic export round trip is bit exact") {
  TempDir dir("distcause_ingest_roundtrip");
  DgpConfig config = default_dgp_config();
  config.n_units = 25;
  config.seed = 99;
  const SyntheticDataset data = generate(config);
  export_units_csv(data.units, default_covariate_names(10), dir.file("units.csv"));
  export_observations_csv(data.units, dir.file("obs.csv"));

  const IngestResult result =
      ingest(dir.file("units.csv"), dir.file("obs.csv"), std::nullopt, 1);
  REQUIRE(result.units.size() == data.units.size());
  for (std::size_t i = 0; i < data.units.size(); ++i) {
    REQUIRE(result.units[i].id == data.units[i].id);
    REQUIRE(result.units[i].treatment == data.units[i].treatment);
    REQUIRE(result.units[i].observations == data.units[i].observations);
    REQUIRE(result.units[i].covariates == data.units[i].covariates);
  }

  // Ingest -> export -> ingest is idempotent.
  export_units_csv(result.units, result.covariate_names, dir.file("units2.csv"));
  export_observations_csv(result.units, dir.file("obs2.csv"));
  std::ifstream a(dir.file("units.csv")), b(dir.file("units2.csv"));
  const std::string ta((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  const std::string tb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(ta == tb);
}

TEST_CASE("bootstrap_ci: degenerate data gives zero-width intervals") {
  // Two treatments, each with several identical copies of one unit: every
  // replicate that retains both treatments reproduces the same IPW maps.
  const GridPtr grid = make_midpoint_grid(20);
  std::vector<Unit> units;
  Rng rng(5);
  std::vector<double> obs_a, obs_b;
  for (int o = 0; o < 30; ++o) {
    obs_a.push_back(rng.normal(1.0, 0.3));
    obs_b.push_back(rng.normal(2.0, 0.3));
  }
  for (int i = 0; i < 6; ++i) {
    Unit a;
    a.id = "a" + std::to_string(i);
    a.treatment = "low";
    a.covariates = Eigen::Vector2d(0.5, -0.5);
    a.observations = obs_a;
    units.push_back(std::move(a));
    Unit b;
    b.id = "b" + std::to_string(i);
    b.treatment = "high";
    b.covariates = Eigen::Vector2d(-0.5, 0.5);
    b.observations = obs_b;
    units.push_back(std::move(b));
  }
  BootstrapOptions options;
  options.kind = EstimatorKind::IPW;
  options.k = 2;
  options.b_reps = 2;
  options.seed = 12;
  options.levels = {0.3, 0.5, 0.7};
  const QuantileReport report = bootstrap_ci(units, {"high", "low"}, grid, options);
  for (std::size_t t = 0; t < report.treatments.size(); ++t) {
    for (std::size_t l = 0; l < report.levels.size(); ++l) {
      // Width zero up to summation rounding: fold compositions of the
      // identical units differ across replicates by a few ulps.
      CHECK(std::abs(report.ci_lo[t][l] - report.point[t][l]) <=
            1e-12 * std::abs(report.point[t][l]));
      CHECK(std::abs(report.ci_hi[t][l] - report.ci_lo[t][l]) <=
            1e-12 * std::abs(report.point[t][l]));
    }
  }
}

TEST_CASE("bootstrap_ci: interval ordering holds on mixed synthetic data") {
  DgpConfig config = default_dgp_config();
  config.n_units = 60;
  config.seed = 14;
  const SyntheticDataset data = generate(config);
  const GridPtr grid = make_midpoint_grid(50);
  BootstrapOptions options;
  options.kind = EstimatorKind::IPW;
  options.k = 2;
  options.b_reps = 30;
  options.seed = 15;
  options.levels = {0.1, 0.5, 0.9};
  std::vector<std::string> order;
  for (int d = 0; d < 5; ++d) order.push_back(config.treatment_label(d));
  const QuantileReport report = bootstrap_ci(data.units, order, grid, options);
  for (std::size_t t = 0; t < report.treatments.size(); ++t) {
    for (std::size_t l = 0; l < report.levels.size(); ++l) {
      REQUIRE(report.ci_lo[t][l] <= report.point[t][l]);
      REQUIRE(report.point[t][l] <= report.ci_hi[t][l]);
    }
  }
  // Percent changes are measured against the first treatment.
  for (std::size_t l = 0; l < report.levels.size(); ++l) {
    CHECK(report.pct_change[0][l] == 0.0);
  }

  const std::string path = "quantile_report_test.csv";
  write_quantile_report_csv(report, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header.find("1_value") != std::string::npos);
  CHECK(header.find("pct_1_to_5") != std::string::npos);
  std::remove(path.c_str());
}
