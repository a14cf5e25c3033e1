#include "distcause/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "distcause/csv.hpp"
#include "distcause/errors.hpp"
#include "distcause/propensity.hpp"
#include "distcause/rng.hpp"
#include "distcause/threads.hpp"

namespace distcause {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::DR: return "dr";
    case EstimatorKind::IPW: return "ipw";
    case EstimatorKind::DML: return "dml";
  }
  return "?";
}

EstimatorKind estimator_kind_from_string(const std::string& name) {
  if (name == "dr") return EstimatorKind::DR;
  if (name == "ipw") return EstimatorKind::IPW;
  if (name == "dml") return EstimatorKind::DML;
  throw ValidationError("unknown estimator kind: " + name);
}

FoldAssignment split_folds(int n_units, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("fold count must be >= 2");
  if (n_units < k) throw ValidationError("need at least k units");
  FoldAssignment folds;
  folds.k = k;
  folds.fold_of_unit.resize(n_units);
  for (int i = 0; i < n_units; ++i) folds.fold_of_unit[i] = i % k;
  Rng rng(derive_seed(seed, 0x0f01d5ULL));
  rng.shuffle(folds.fold_of_unit);
  return folds;
}

Eigen::MatrixXd OutcomeModel::predict_batch(int treatment,
                                            const Eigen::MatrixXd& covariates) const {
  Eigen::MatrixXd out;
  for (Eigen::Index i = 0; i < covariates.rows(); ++i) {
    const QuantileCurve curve = predict(treatment, covariates.row(i).transpose());
    if (out.size() == 0) out.resize(covariates.rows(), curve.size());
    for (int m = 0; m < curve.size(); ++m) out(i, m) = curve.values()[m];
  }
  return out;
}

const QuantileCurve& CausalMapEstimate::map_for(const std::string& treatment) const {
  const auto it = maps.find(treatment);
  if (it == maps.end()) throw ValidationError("unknown treatment label: " + treatment);
  return it->second;
}

std::vector<Eigen::VectorXd> estimate_fold_dr(const FoldData& fold,
                                              const OutcomeModel& outcome,
                                              int n_treatments) {
  const int n = static_cast<int>(fold.units.size());
  if (n == 0) throw ValidationError("empty fold");
  std::vector<Eigen::VectorXd> result(n_treatments);
  for (int d = 0; d < n_treatments; ++d) {
    const Eigen::MatrixXd preds = outcome.predict_batch(d, fold.covariates);
    result[d] = preds.colwise().sum().transpose() / static_cast<double>(n);
  }
  return result;
}

std::vector<Eigen::VectorXd> estimate_fold_ipw(const FoldData& fold,
                                               const Eigen::MatrixXd& clipped_propensities,
                                               int n_treatments,
                                               std::vector<std::string>* warnings) {
  const int n = static_cast<int>(fold.units.size());
  if (n == 0) throw ValidationError("empty fold");
  const int m = fold.curves.front().size();
  std::vector<Eigen::VectorXd> result(n_treatments);
  for (int d = 0; d < n_treatments; ++d) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(m);
    double weight_sum = 0.0;
    for (int s = 0; s < n; ++s) {
      if (fold.treatment_slots[s] != d) continue;
      const double w = 1.0 / clipped_propensities(s, d);
      weight_sum += w;
      const std::vector<double>& y = fold.curves[s].values();
      for (int i = 0; i < m; ++i) acc(i) += w * y[i];
    }
    if (weight_sum > 0.0) {
      result[d] = acc / weight_sum;
    } else {
      result[d] = Eigen::VectorXd::Zero(m);
      if (warnings) {
        warnings->push_back("no treated units for treatment slot " + std::to_string(d) +
                            " in fold; contribution is the zero curve");
      }
    }
  }
  return result;
}

std::vector<Eigen::VectorXd> estimate_fold_dml(const FoldData& fold,
                                               const OutcomeModel& outcome,
                                               const Eigen::MatrixXd& clipped_propensities,
                                               int n_treatments,
                                               std::vector<std::string>* warnings) {
  const int n = static_cast<int>(fold.units.size());
  if (n == 0) throw ValidationError("empty fold");
  const int m = fold.curves.front().size();
  std::vector<Eigen::VectorXd> result(n_treatments);
  for (int d = 0; d < n_treatments; ++d) {
    const Eigen::MatrixXd preds = outcome.predict_batch(d, fold.covariates);
    Eigen::VectorXd regression = preds.colwise().sum().transpose() / static_cast<double>(n);
    Eigen::VectorXd residual = Eigen::VectorXd::Zero(m);
    double weight_sum = 0.0;
    for (int s = 0; s < n; ++s) {
      if (fold.treatment_slots[s] != d) continue;
      const double w = 1.0 / clipped_propensities(s, d);
      weight_sum += w;
      const std::vector<double>& y = fold.curves[s].values();
      for (int i = 0; i < m; ++i) residual(i) += w * (y[i] - preds(s, i));
    }
    if (weight_sum > 0.0) {
      result[d] = regression + residual / weight_sum;
    } else {
      result[d] = std::move(regression);
      if (warnings) {
        warnings->push_back("no treated units for treatment slot " + std::to_string(d) +
                            " in fold; residual correction dropped");
      }
    }
  }
  return result;
}

namespace {

struct FoldOutputs {
  std::map<EstimatorKind, std::vector<Eigen::VectorXd>> contributions;
  std::vector<int> treated_counts;
  double min_clipped = 1.0;
  std::vector<std::string> warnings;
  int size = 0;
};

}  // namespace

std::map<EstimatorKind, CausalMapEstimate> estimate_all(
    const std::vector<Unit>& units, const GridPtr& grid,
    const std::set<EstimatorKind>& kinds, const EstimateOptions& options,
    const OutcomeFitter& outcome_fitter, const PropensityFitter& propensity_fitter) {
  if (kinds.empty()) throw ValidationError("no estimator kinds requested");
  const int n = static_cast<int>(units.size());
  if (n < options.k) throw ValidationError("need at least k units");
  if (!(options.epsilon > 0.0 && options.epsilon < 0.5)) {
    throw ValidationError("epsilon must lie in (0, 0.5)");
  }

  // Canonical processing order: sort by unit id. Makes every estimate
  // invariant to the order units arrive in.
  std::vector<const Unit*> ordered(n);
  for (int i = 0; i < n; ++i) ordered[i] = &units[i];
  std::sort(ordered.begin(), ordered.end(),
            [](const Unit* a, const Unit* b) { return a->id < b->id; });
  for (int i = 1; i < n; ++i) {
    if (ordered[i]->id == ordered[i - 1]->id) {
      throw ValidationError("duplicate unit id: " + ordered[i]->id);
    }
  }

  std::vector<std::string> treatments;
  {
    std::set<std::string> present;
    for (const Unit* u : ordered) present.insert(u->treatment);
    if (!options.expected_treatments.empty()) {
      for (const std::string& t : options.expected_treatments) {
        if (!present.count(t)) throw ValidationError("treatment without support");
      }
      treatments = options.expected_treatments;
      std::sort(treatments.begin(), treatments.end());
    } else {
      treatments.assign(present.begin(), present.end());
    }
  }
  const int r = static_cast<int>(treatments.size());
  auto slot_of = [&](const std::string& label) {
    const auto it = std::lower_bound(treatments.begin(), treatments.end(), label);
    if (it == treatments.end() || *it != label) {
      throw ValidationError("treatment without support");
    }
    return static_cast<int>(it - treatments.begin());
  };

  const bool needs_outcome =
      kinds.count(EstimatorKind::DR) || kinds.count(EstimatorKind::DML);
  const bool needs_propensity =
      kinds.count(EstimatorKind::IPW) || kinds.count(EstimatorKind::DML);
  if (needs_outcome && !outcome_fitter) throw ValidationError("outcome fitter required");
  if (needs_propensity && !propensity_fitter) throw ValidationError("propensity fitter required");

  const FoldAssignment folds = split_folds(n, options.k, options.seed);

  std::vector<FoldOutputs> outputs(options.k);
  parallel_for(options.k, options.threads, [&](int k) {
    FoldOutputs& out = outputs[k];
    std::vector<const Unit*> train;
    FoldData fold;
    for (int i = 0; i < n; ++i) {
      if (folds.fold_of_unit[i] == k) {
        fold.units.push_back(ordered[i]);
      } else {
        train.push_back(ordered[i]);
      }
    }
    out.size = static_cast<int>(fold.units.size());
    const int nk = out.size;
    fold.curves.reserve(nk);
    fold.treatment_slots.reserve(nk);
    fold.covariates.resize(nk, ordered[0]->covariates.size());
    for (int s = 0; s < nk; ++s) {
      const Unit* u = fold.units[s];
      fold.curves.push_back(empirical_quantile(Sample(u->observations), grid));
      fold.treatment_slots.push_back(slot_of(u->treatment));
      fold.covariates.row(s) = u->covariates;
    }

    std::unique_ptr<OutcomeModel> outcome;
    if (needs_outcome) {
      outcome = outcome_fitter(train, treatments, grid,
                               derive_seed(options.seed, 2 * k + 1));
    }
    Eigen::MatrixXd clipped(nk, r);
    out.treated_counts.assign(r, 0);
    for (int s = 0; s < nk; ++s) ++out.treated_counts[fold.treatment_slots[s]];
    if (needs_propensity) {
      const std::unique_ptr<PropensityModel> propensity =
          propensity_fitter(train, treatments, derive_seed(options.seed, 2 * k + 2));
      for (int s = 0; s < nk; ++s) {
        const Eigen::VectorXd probs = clip_probabilities(
            propensity->probabilities(fold.units[s]->covariates), options.epsilon);
        clipped.row(s) = probs;
        out.min_clipped = std::min(out.min_clipped, probs.minCoeff());
      }
    }

    for (EstimatorKind kind : kinds) {
      switch (kind) {
        case EstimatorKind::DR:
          out.contributions[kind] = estimate_fold_dr(fold, *outcome, r);
          break;
        case EstimatorKind::IPW:
          out.contributions[kind] =
              estimate_fold_ipw(fold, clipped, r, &out.warnings);
          break;
        case EstimatorKind::DML:
          out.contributions[kind] =
              estimate_fold_dml(fold, *outcome, clipped, r, &out.warnings);
          break;
      }
    }
  });

  // Deterministic merge in fold order with weights N_k / N.
  std::map<EstimatorKind, CausalMapEstimate> results;
  for (EstimatorKind kind : kinds) {
    CausalMapEstimate est;
    est.kind = kind;
    est.k = options.k;
    est.seed = options.seed;
    est.treatments = treatments;
    std::vector<Eigen::VectorXd> combined(r, Eigen::VectorXd::Zero(grid->size()));
    for (int k = 0; k < options.k; ++k) {
      const double weight = static_cast<double>(outputs[k].size) / n;
      for (int d = 0; d < r; ++d) {
        combined[d] += weight * outputs[k].contributions[kind][d];
      }
    }
    for (int d = 0; d < r; ++d) {
      std::vector<double> values(combined[d].data(), combined[d].data() + combined[d].size());
      if (kind == EstimatorKind::IPW) {
        est.maps.emplace(treatments[d], QuantileCurve(grid, std::move(values)));
      } else {
        est.maps.emplace(treatments[d], rearrange_monotone(std::move(values), grid));
      }
    }
    for (int k = 0; k < options.k; ++k) {
      est.diagnostics.fold_treated_counts.push_back(outputs[k].treated_counts);
      est.diagnostics.min_clipped_propensity =
          std::min(est.diagnostics.min_clipped_propensity, outputs[k].min_clipped);
      for (const std::string& w : outputs[k].warnings) {
        est.diagnostics.warnings.push_back("fold " + std::to_string(k) + ": " + w);
      }
    }
    results.emplace(kind, std::move(est));
  }
  return results;
}

CausalMapEstimate estimate(const std::vector<Unit>& units, const GridPtr& grid,
                           EstimatorKind kind, const EstimateOptions& options,
                           const OutcomeFitter& outcome_fitter,
                           const PropensityFitter& propensity_fitter) {
  auto all = estimate_all(units, grid, {kind}, options, outcome_fitter, propensity_fitter);
  return std::move(all.at(kind));
}

EffectReport effect(const CausalMapEstimate& estimate, const std::string& treatment_i,
                    const std::string& treatment_j, const std::vector<double>& levels) {
  const QuantileCurve& a = estimate.map_for(treatment_i);
  const QuantileCurve& b = estimate.map_for(treatment_j);
  EffectReport report;
  report.treatment_i = treatment_i;
  report.treatment_j = treatment_j;
  report.difference = effect_map(a, b);
  report.levels = levels;
  const GridPtr& grid = a.grid();
  for (double tau : levels) {
    if (!(tau >= grid->levels().front() && tau <= grid->levels().back())) {
      throw ValidationError("readout level outside grid span");
    }
    report.readouts.push_back(report.difference.value_at(tau));
  }
  return report;
}

std::string causal_maps_to_json(const CausalMapEstimate& estimate) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["estimator"] = to_string(estimate.kind);
  j["k"] = estimate.k;
  j["seed"] = estimate.seed;
  const GridPtr& grid = estimate.maps.begin()->second.grid();
  j["grid_levels"] = grid->levels();
  nlohmann::json maps = nlohmann::json::object();
  for (const std::string& t : estimate.treatments) {
    maps[t] = estimate.map_for(t).values();
  }
  j["causal_maps"] = maps;
  nlohmann::json diag;
  diag["fold_treated_counts"] = estimate.diagnostics.fold_treated_counts;
  diag["min_clipped_propensity"] = estimate.diagnostics.min_clipped_propensity;
  diag["warnings"] = estimate.diagnostics.warnings;
  j["diagnostics"] = diag;
  return j.dump(2) + "\n";
}

void write_causal_maps_csv(const CausalMapEstimate& estimate, const std::string& path) {
  CsvWriter out(path);
  out.write_row({"treatment", "tau", "value"});
  for (const std::string& t : estimate.treatments) {
    const QuantileCurve& curve = estimate.map_for(t);
    for (int i = 0; i < curve.size(); ++i) {
      out.write_row({t, format_double(curve.grid()->level(i)),
                     format_double(curve.values()[i])});
    }
  }
}

void write_effects_csv(const std::vector<EffectReport>& reports, const std::string& path) {
  CsvWriter out(path);
  out.write_row({"treatment_i", "treatment_j", "tau", "value"});
  for (const EffectReport& r : reports) {
    for (std::size_t i = 0; i < r.levels.size(); ++i) {
      out.write_row({r.treatment_i, r.treatment_j, format_double(r.levels[i]),
                     format_double(r.readouts[i])});
    }
  }
}

}  // namespace distcause
