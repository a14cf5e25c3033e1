#include "distcause/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "distcause/csv.hpp"
#include "distcause/errors.hpp"
#include "distcause/threads.hpp"

namespace distcause {

std::vector<double> mae_at_quantiles(const std::map<std::string, QuantileCurve>& true_maps,
                                     const CausalMapEstimate& estimate,
                                     const std::vector<double>& levels) {
  if (true_maps.size() != estimate.maps.size()) {
    throw ValidationError("treatment set mismatch between oracle and estimate");
  }
  for (const std::string& t : estimate.treatments) {
    if (!true_maps.count(t)) {
      throw ValidationError("treatment set mismatch between oracle and estimate");
    }
  }
  std::vector<double> result;
  result.reserve(levels.size());
  const std::vector<std::string>& ts = estimate.treatments;
  for (double tau : levels) {
    double total = 0.0;
    int count = 0;
    for (const std::string& ti : ts) {
      for (const std::string& tj : ts) {
        if (ti == tj) continue;
        const double est = estimate.map_for(ti).value_at(tau) -
                           estimate.map_for(tj).value_at(tau);
        const double truth = true_maps.at(ti).value_at(tau) -
                             true_maps.at(tj).value_at(tau);
        total += std::abs(est - truth);
        ++count;
      }
    }
    result.push_back(count > 0 ? total / count : 0.0);
  }
  return result;
}

std::map<std::string, QuantileCurve> oracle_causal_maps(const DgpConfig& config_in,
                                                        const GridPtr& grid,
                                                        long n_mc) {
  DgpConfig config = config_in;
  finalize(config);
  std::map<std::string, QuantileCurve> maps;
  for (int d = 0; d < config.n_treatments(); ++d) {
    maps.emplace(config.treatment_label(d),
                 true_causal_map(config, config.treatment_values[d], n_mc, grid));
  }
  return maps;
}

namespace {

OutcomeFitter outcome_fitter_for(const ExperimentOptions& options, const DgpConfig& config) {
  switch (options.nuisance.outcome) {
    case NuisanceMode::Outcome::FIT:
      return make_outcome_fitter(options.regressor, options.models);
    case NuisanceMode::Outcome::ORACLE:
      return make_oracle_outcome_fitter(config);
    case NuisanceMode::Outcome::ZERO:
      return make_zero_outcome_fitter();
  }
  throw ValidationError("unknown outcome nuisance mode");
}

PropensityFitter propensity_fitter_for(const ExperimentOptions& options,
                                       const DgpConfig& config) {
  switch (options.nuisance.propensity) {
    case NuisanceMode::Propensity::FIT:
      return make_logistic_fitter(options.models);
    case NuisanceMode::Propensity::ORACLE:
      return make_oracle_propensity_fitter(config);
    case NuisanceMode::Propensity::UNIFORM:
      return make_uniform_propensity_fitter();
  }
  throw ValidationError("unknown propensity nuisance mode");
}

}  // namespace

ExperimentResult run_experiment(const DgpConfig& config_in, const GridPtr& grid,
                                const ExperimentOptions& options) {
  if (options.trials < 1) throw ValidationError("trials must be >= 1");
  DgpConfig config = config_in;
  finalize(config);

  const std::map<std::string, QuantileCurve> oracle =
      oracle_causal_maps(config, grid, options.oracle_mc_draws);

  std::vector<std::string> labels;
  for (int d = 0; d < config.n_treatments(); ++d) labels.push_back(config.treatment_label(d));

  const OutcomeFitter outcome_fitter = outcome_fitter_for(options, config);
  const PropensityFitter propensity_fitter = propensity_fitter_for(options, config);

  ExperimentResult result;
  result.trial_seeds.resize(options.trials);
  std::map<EstimatorKind, std::vector<std::vector<double>>> per_trial_levels;
  for (EstimatorKind kind : options.kinds) {
    per_trial_levels[kind].resize(options.trials);
  }

  parallel_for(options.trials, options.threads, [&](int trial) {
    DgpConfig trial_config = config;
    trial_config.seed = derive_seed(options.seed, static_cast<std::uint64_t>(trial));
    result.trial_seeds[trial] = trial_config.seed;
    const SyntheticDataset data = generate(trial_config, 1);

    EstimateOptions est_options;
    est_options.k = options.k;
    est_options.seed = derive_seed(options.seed, 0x7a1a15ULL + trial);
    est_options.epsilon = options.epsilon;
    est_options.threads = 1;
    est_options.expected_treatments = labels;
    const std::map<EstimatorKind, CausalMapEstimate> estimates = estimate_all(
        data.units, grid, options.kinds, est_options, outcome_fitter, propensity_fitter);
    for (const auto& [kind, est] : estimates) {
      per_trial_levels[kind][trial] = mae_at_quantiles(oracle, est, options.levels);
    }
  });

  for (EstimatorKind kind : options.kinds) {
    MaeReport report;
    report.levels = options.levels;
    report.trials = options.trials;
    report.estimator = to_string(kind);
    report.regressor = options.nuisance.outcome == NuisanceMode::Outcome::FIT
                           ? to_string(options.regressor)
                           : (options.nuisance.outcome == NuisanceMode::Outcome::ORACLE
                                  ? "oracle"
                                  : "zero");
    const auto& trials = per_trial_levels[kind];
    report.per_quantile.assign(options.levels.size(), 0.0);
    for (const std::vector<double>& levels : trials) {
      for (std::size_t i = 0; i < levels.size(); ++i) report.per_quantile[i] += levels[i];
    }
    for (double& v : report.per_quantile) v /= options.trials;
    for (const std::vector<double>& levels : trials) {
      double avg = 0.0;
      for (double v : levels) avg += v;
      report.per_trial_average.push_back(avg / levels.size());
    }
    double mean = 0.0;
    for (double v : report.per_quantile) mean += v;
    report.average = mean / report.per_quantile.size();
    const double trial_mean =
        std::accumulate(report.per_trial_average.begin(),
                        report.per_trial_average.end(), 0.0) /
        report.per_trial_average.size();
    double var = 0.0;
    for (double v : report.per_trial_average) {
      var += (v - trial_mean) * (v - trial_mean);
    }
    report.average_std =
        options.trials > 1 ? std::sqrt(var / (options.trials - 1)) : 0.0;
    result.reports.emplace(kind, std::move(report));
  }
  return result;
}

std::vector<std::pair<int, double>> convergence_study(const DgpConfig& config,
                                                      const GridPtr& grid,
                                                      const std::vector<int>& sizes,
                                                      const ExperimentOptions& options) {
  if (sizes.empty()) throw ValidationError("convergence study needs at least one size");
  std::vector<std::pair<int, double>> medians;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    DgpConfig sized = config;
    sized.n_units = sizes[i];
    ExperimentOptions opts = options;
    opts.seed = derive_seed(options.seed, 0x515e00ULL + i);
    const ExperimentResult result = run_experiment(sized, grid, opts);
    // Median over per-trial averages of the first requested kind.
    const MaeReport& report = result.reports.begin()->second;
    std::vector<double> averages = report.per_trial_average;
    std::sort(averages.begin(), averages.end());
    const std::size_t n = averages.size();
    const double median = n % 2 == 1 ? averages[n / 2]
                                     : 0.5 * (averages[n / 2 - 1] + averages[n / 2]);
    medians.emplace_back(sizes[i], median);
  }
  return medians;
}

void write_mae_table_csv(const std::vector<MaeReport>& reports, const std::string& path) {
  CsvWriter out(path);
  std::vector<std::string> header = {"estimator", "regressor"};
  if (!reports.empty()) {
    for (double level : reports.front().levels) {
      header.push_back("q" + format_double(level * 100));
    }
  }
  header.push_back("average");
  header.push_back("average_std");
  header.push_back("trials");
  out.write_row(header);
  for (const MaeReport& r : reports) {
    std::vector<std::string> row = {r.estimator, r.regressor};
    for (double v : r.per_quantile) row.push_back(format_double(v));
    row.push_back(format_double(r.average));
    row.push_back(format_double(r.average_std));
    row.push_back(std::to_string(r.trials));
    out.write_row(row);
  }
}

}  // namespace distcause
