#ifndef DISTCAUSE_EVALUATION_HPP
#define DISTCAUSE_EVALUATION_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "distcause/estimators.hpp"
#include "distcause/nuisance.hpp"
#include "distcause/synthetic.hpp"

namespace distcause {

// Per-quantile MAE between estimated and oracle causal effect maps,
// aggregated over trials.
struct MaeReport {
  std::vector<double> levels = {0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> per_quantile;      // mean across trials per level
  double average = 0.0;                  // mean of the per-quantile entries
  double average_std = 0.0;              // std of per-trial averages
  int trials = 0;
  std::string estimator;
  std::string regressor;
  std::vector<double> per_trial_average; // kept for pairing and medians
};

// For each level: mean over ordered treatment pairs (i != j) of the absolute
// difference between estimated and true effect maps at that level.
std::vector<double> mae_at_quantiles(const std::map<std::string, QuantileCurve>& true_maps,
                                     const CausalMapEstimate& estimate,
                                     const std::vector<double>& levels);

// How nuisances are obtained inside an experiment.
struct NuisanceMode {
  enum class Outcome { FIT, ORACLE, ZERO } outcome = Outcome::FIT;
  enum class Propensity { FIT, ORACLE, UNIFORM } propensity = Propensity::FIT;
};

struct ExperimentOptions {
  std::set<EstimatorKind> kinds = {EstimatorKind::DR, EstimatorKind::IPW, EstimatorKind::DML};
  RegressorKind regressor = RegressorKind::NFR;
  NuisanceMode nuisance;
  NuisanceConfig models;
  int trials = 50;
  std::uint64_t seed = 0;
  int k = 5;
  double epsilon = 0.01;
  int threads = 0;
  long oracle_mc_draws = 1000000;
  std::vector<double> levels = {0.1, 0.3, 0.5, 0.7, 0.9};
};

struct ExperimentResult {
  std::map<EstimatorKind, MaeReport> reports;
  std::vector<std::uint64_t> trial_seeds;
};

// Per trial: fresh dataset from the config (derived seed), one cross-fitting
// pass shared by all requested estimator kinds, MAE against the oracle maps
// (computed once per config). Deterministic and resumable per trial.
ExperimentResult run_experiment(const DgpConfig& config, const GridPtr& grid,
                                const ExperimentOptions& options);

// Median of per-trial average MAE per dataset size.
std::vector<std::pair<int, double>> convergence_study(const DgpConfig& config,
                                                      const GridPtr& grid,
                                                      const std::vector<int>& sizes,
                                                      const ExperimentOptions& options);

// Table-shaped CSV: one row per (estimator, regressor) block.
void write_mae_table_csv(const std::vector<MaeReport>& reports, const std::string& path);

// Oracle causal maps for every treatment of the config.
std::map<std::string, QuantileCurve> oracle_causal_maps(const DgpConfig& config,
                                                        const GridPtr& grid,
                                                        long n_mc);

}  // namespace distcause

#endif  // DISTCAUSE_EVALUATION_HPP
