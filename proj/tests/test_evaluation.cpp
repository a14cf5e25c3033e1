#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "distcause/errors.hpp"
#include "distcause/evaluation.hpp"
#include "oracles.hpp"

using namespace distcause;

namespace {

std::map<std::string, QuantileCurve> fake_maps(const GridPtr& grid, double shift,
                                               int shifted_index) {
  std::map<std::string, QuantileCurve> maps;
  for (int d = 0; d < 5; ++d) {
    std::vector<double> values(grid->size());
    for (int i = 0; i < grid->size(); ++i) {
      values[i] = d + grid->level(i) + (d == shifted_index ? shift : 0.0);
    }
    maps.emplace(std::to_string(d + 1), QuantileCurve(grid, std::move(values)));
  }
  return maps;
}

CausalMapEstimate as_estimate(const std::map<std::string, QuantileCurve>& maps) {
  CausalMapEstimate est;
  for (const auto& [label, curve] : maps) {
    est.treatments.push_back(label);
    est.maps.emplace(label, curve);
  }
  return est;
}

}  // namespace

TEST_CASE("mae_at_quantiles: identities") {
  const GridPtr grid = make_midpoint_grid(50);
  const std::map<std::string, QuantileCurve> truth = fake_maps(grid, 0.0, -1);
  const std::vector<double> levels = {0.1, 0.3, 0.5, 0.7, 0.9};

  // Estimate equals the truth: zero error.
  for (double v : mae_at_quantiles(truth, as_estimate(truth), levels)) CHECK(v == 0.0);

  // A common shift of every map cancels in pairwise differences.
  std::map<std::string, QuantileCurve> shifted;
  for (const auto& [label, curve] : truth) {
    std::vector<double> values = curve.values();
    for (double& v : values) v += 2.5;
    shifted.emplace(label, QuantileCurve(grid, std::move(values)));
  }
  for (double v : mae_at_quantiles(truth, as_estimate(shifted), levels)) {
    CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("mae_at_quantiles: one shifted map contributes 2 delta / r") {
  const GridPtr grid = make_midpoint_grid(50);
  const double delta = 0.3;
  const std::map<std::string, QuantileCurve> truth = fake_maps(grid, 0.0, -1);
  const std::map<std::string, QuantileCurve> est = fake_maps(grid, delta, 2);
  const std::vector<double> mae =
      mae_at_quantiles(truth, as_estimate(est), {0.1, 0.3, 0.5, 0.7, 0.9});
  for (double v : mae) {
    CHECK(v == doctest::Approx(2.0 * delta / 5.0).epsilon(1e-12));
  }
}

TEST_CASE("mae_at_quantiles: treatment mismatch is an error") {
  const GridPtr grid = make_midpoint_grid(10);
  const std::map<std::string, QuantileCurve> truth = fake_maps(grid, 0.0, -1);
  CausalMapEstimate est = as_estimate(truth);
  est.maps.erase("5");
  est.treatments.pop_back();
  CHECK_THROWS_AS(mae_at_quantiles(truth, est, {0.5}), ValidationError);
}

TEST_CASE("run_experiment: null effect and reproducibility") {
  DgpConfig config = default_dgp_config();
  config.c = 1.0;
  config.n_units = 2500;
  const GridPtr grid = make_midpoint_grid(100);
  ExperimentOptions options;
  options.kinds = {EstimatorKind::IPW};
  options.nuisance.outcome = NuisanceMode::Outcome::ZERO;
  options.nuisance.propensity = NuisanceMode::Propensity::ORACLE;
  options.trials = 2;
  options.seed = 5150;
  options.oracle_mc_draws = 50000;
  const ExperimentResult a = run_experiment(config, grid, options);
  // c = 1: the oracle effect maps vanish, so only sampling noise remains.
  CHECK(a.reports.at(EstimatorKind::IPW).average <= 0.02);

  const ExperimentResult b = run_experiment(config, grid, options);
  CHECK(a.reports.at(EstimatorKind::IPW).per_trial_average ==
        b.reports.at(EstimatorKind::IPW).per_trial_average);
  CHECK(a.trial_seeds == b.trial_seeds);
}

TEST_CASE("run_experiment: report averages recompute from the stored entries") {
  DgpConfig config = default_dgp_config();
  config.n_units = 200;
  const GridPtr grid = make_midpoint_grid(100);
  ExperimentOptions options;
  options.kinds = {EstimatorKind::DML};
  options.nuisance.outcome = NuisanceMode::Outcome::ORACLE;
  options.nuisance.propensity = NuisanceMode::Propensity::ORACLE;
  options.trials = 3;
  options.seed = 6;
  options.oracle_mc_draws = 50000;
  const MaeReport report =
      run_experiment(config, grid, options).reports.at(EstimatorKind::DML);
  double mean = 0.0;
  for (double v : report.per_quantile) mean += v;
  mean /= report.per_quantile.size();
  CHECK(report.average == mean);
  CHECK(report.trials == 3);
  CHECK(static_cast<int>(report.per_trial_average.size()) == 3);
}

TEST_CASE("convergence_study: shapes and the flat null case") {
  DgpConfig config = default_dgp_config();
  const GridPtr grid = make_midpoint_grid(100);
  ExperimentOptions options;
  options.kinds = {EstimatorKind::DML};
  options.nuisance.outcome = NuisanceMode::Outcome::ORACLE;
  options.nuisance.propensity = NuisanceMode::Propensity::ORACLE;
  options.trials = 3;
  options.seed = 7;
  options.oracle_mc_draws = 50000;

  const auto single = convergence_study(config, grid, {300}, options);
  REQUIRE(single.size() == 1u);
  CHECK(single[0].first == 300);

  DgpConfig null_config = config;
  null_config.c = 1.0;
  const auto flat = convergence_study(null_config, grid, {1000, 3000}, options);
  for (const auto& [size, median] : flat) CHECK(median <= 0.035);

  CHECK_THROWS_AS(convergence_study(config, grid, {}, options), ValidationError);
}

TEST_CASE("convergence_study: error shrinks with more units") {
  DgpConfig config = default_dgp_config();
  const GridPtr grid = make_midpoint_grid(100);
  ExperimentOptions options;
  options.kinds = {EstimatorKind::DML};
  options.nuisance.outcome = NuisanceMode::Outcome::ORACLE;
  options.nuisance.propensity = NuisanceMode::Propensity::ORACLE;
  options.trials = 6;
  options.seed = 11;
  options.oracle_mc_draws = 100000;
  const auto medians = convergence_study(config, grid, {300, 1500}, options);
  CHECK(medians[1].second < medians[0].second);
}

TEST_CASE("write_mae_table_csv: shape") {
  MaeReport report;
  report.per_quantile = {0.01, 0.02, 0.03, 0.04, 0.05};
  report.average = 0.03;
  report.average_std = 0.004;
  report.trials = 5;
  report.estimator = "dml";
  report.regressor = "nfr";
  const std::string path = "mae_table_test.csv";
  write_mae_table_csv({report}, path);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "estimator,regressor,q10,q30,q50,q70,q90,average,average_std,trials");
  CHECK(row.substr(0, 8) == "dml,nfr,");
  std::remove(path.c_str());
}
