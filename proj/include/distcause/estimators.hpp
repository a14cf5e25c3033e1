#ifndef DISTCAUSE_ESTIMATORS_HPP
#define DISTCAUSE_ESTIMATORS_HPP

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "distcause/quantile_space.hpp"
#include "distcause/unit.hpp"

namespace distcause {

enum class EstimatorKind { DR, IPW, DML };

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(const std::string& name);

// Fold membership for cross-fitting; sizes differ by at most one.
struct FoldAssignment {
  std::vector<int> fold_of_unit;
  int k = 0;
};

FoldAssignment split_folds(int n_units, int k, std::uint64_t seed);

// Outcome regression m_d(X): predicted quantile curve per treatment slot.
class OutcomeModel {
 public:
  virtual ~OutcomeModel() = default;
  virtual QuantileCurve predict(int treatment, const Eigen::VectorXd& covariates) const = 0;
  // Batched override point; rows of `covariates` are units, rows of the
  // result are predicted curve values (already monotone).
  virtual Eigen::MatrixXd predict_batch(int treatment,
                                        const Eigen::MatrixXd& covariates) const;
};

// Propensity model pi(X): unclipped class probabilities.
class PropensityModel {
 public:
  virtual ~PropensityModel() = default;
  virtual Eigen::VectorXd probabilities(const Eigen::VectorXd& covariates) const = 0;
};

// Nuisance factories invoked once per fold on the fold's complement. Units
// arrive in canonical (id-sorted) order.
using OutcomeFitter = std::function<std::unique_ptr<OutcomeModel>(
    const std::vector<const Unit*>& train, const std::vector<std::string>& treatments,
    const GridPtr& grid, std::uint64_t seed)>;
using PropensityFitter = std::function<std::unique_ptr<PropensityModel>(
    const std::vector<const Unit*>& train, const std::vector<std::string>& treatments,
    std::uint64_t seed)>;

struct EstimateDiagnostics {
  // fold -> treatment slot -> number of treated units in the fold
  std::vector<std::vector<int>> fold_treated_counts;
  double min_clipped_propensity = 1.0;
  std::vector<std::string> warnings;
};

// Per-treatment estimated causal map plus estimator metadata.
struct CausalMapEstimate {
  EstimatorKind kind = EstimatorKind::DML;
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> treatments;
  std::map<std::string, QuantileCurve> maps;
  EstimateDiagnostics diagnostics;

  const QuantileCurve& map_for(const std::string& treatment) const;
};

// Pairwise difference of causal maps with per-quantile readouts.
struct EffectReport {
  std::string treatment_i;
  std::string treatment_j;
  EffectCurve difference;
  std::vector<double> levels;
  std::vector<double> readouts;
};

struct EstimateOptions {
  int k = 5;
  std::uint64_t seed = 0;
  double epsilon = 0.01;
  int threads = 0;
  // When set, every listed treatment must appear in the data.
  std::vector<std::string> expected_treatments;
};

// Fold-level estimators. `fold` holds the held-out units with their derived
// curves; predictions come from nuisances fitted on the complement. The
// weighted terms are self-normalized: weight sums divide instead of the fold
// size, keeping the estimators scale-stable (see README notes).
struct FoldData {
  std::vector<const Unit*> units;
  std::vector<QuantileCurve> curves;          // empirical quantile per unit
  std::vector<int> treatment_slots;           // index into treatments
  Eigen::MatrixXd covariates;                 // units x n
};

std::vector<Eigen::VectorXd> estimate_fold_dr(const FoldData& fold,
                                              const OutcomeModel& outcome,
                                              int n_treatments);
std::vector<Eigen::VectorXd> estimate_fold_ipw(const FoldData& fold,
                                               const Eigen::MatrixXd& clipped_propensities,
                                               int n_treatments,
                                               std::vector<std::string>* warnings);
std::vector<Eigen::VectorXd> estimate_fold_dml(const FoldData& fold,
                                               const OutcomeModel& outcome,
                                               const Eigen::MatrixXd& clipped_propensities,
                                               int n_treatments,
                                               std::vector<std::string>* warnings);

// Full cross-fitting run: canonicalize unit order by id, split folds, derive
// empirical curves, fit nuisances per complement, combine fold contributions
// with weights N_k/N, and project DR/DML curves by monotone rearrangement.
CausalMapEstimate estimate(const std::vector<Unit>& units, const GridPtr& grid,
                           EstimatorKind kind, const EstimateOptions& options,
                           const OutcomeFitter& outcome_fitter,
                           const PropensityFitter& propensity_fitter);

// Same cross-fitting pass evaluated for several estimator kinds at once;
// nuisances are fitted once per fold and shared.
std::map<EstimatorKind, CausalMapEstimate> estimate_all(
    const std::vector<Unit>& units, const GridPtr& grid,
    const std::set<EstimatorKind>& kinds, const EstimateOptions& options,
    const OutcomeFitter& outcome_fitter, const PropensityFitter& propensity_fitter);

EffectReport effect(const CausalMapEstimate& estimate, const std::string& treatment_i,
                    const std::string& treatment_j, const std::vector<double>& levels);

// JSON / CSV emission of estimates and effect reports.
std::string causal_maps_to_json(const CausalMapEstimate& estimate);
void write_causal_maps_csv(const CausalMapEstimate& estimate, const std::string& path);
void write_effects_csv(const std::vector<EffectReport>& reports, const std::string& path);

}  // namespace distcause

#endif  // DISTCAUSE_ESTIMATORS_HPP
