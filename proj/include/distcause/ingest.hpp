#ifndef DISTCAUSE_INGEST_HPP
#define DISTCAUSE_INGEST_HPP

#include <optional>
#include <string>
#include <vector>

#include "distcause/estimators.hpp"
#include "distcause/nuisance.hpp"
#include "distcause/unit.hpp"

namespace distcause {

// Breakpoints on a numeric column mapped to treatment labels; bins are
// left-closed right-open, so a value equal to a breakpoint falls in the
// upper bin.
struct BinningRule {
  std::string column;
  std::vector<double> breakpoints;   // strictly increasing
  std::vector<std::string> labels;   // breakpoints.size() + 1 distinct labels

  std::string label_for(double value) const;
  void validate() const;
};

struct IngestResult {
  std::vector<Unit> units;
  std::vector<std::string> covariate_names;
  // Treatment labels in report order: binning-rule order when binned,
  // sorted otherwise.
  std::vector<std::string> treatment_order;
  std::vector<std::string> warnings;  // dropped units etc.
};

// Join units and observations CSVs on unit_id, derive treatment labels via
// the binning rule when given, drop units with fewer than min_obs
// observations (warned), and validate finiteness.
IngestResult ingest(const std::string& units_csv, const std::string& observations_csv,
                    const std::optional<BinningRule>& binning, int min_obs);

// Per-treatment causal-map values at requested quantiles with bootstrap
// percentile intervals and percent-change columns against the first
// treatment. Intervals always bracket the point estimate.
struct QuantileReport {
  std::vector<double> levels;
  std::vector<std::string> treatments;
  std::vector<std::vector<double>> point;  // treatment x level
  std::vector<std::vector<double>> ci_lo;
  std::vector<std::vector<double>> ci_hi;
  std::vector<std::vector<double>> pct_change;  // vs first treatment, per level
  int b_reps = 0;
  double alpha = 0.05;
};

struct BootstrapOptions {
  EstimatorKind kind = EstimatorKind::DML;
  RegressorKind regressor = RegressorKind::NFR;
  NuisanceConfig models;
  int k = 5;
  double epsilon = 0.01;
  std::uint64_t seed = 0;
  int b_reps = 200;
  double alpha = 0.05;
  int threads = 0;
  std::vector<double> levels = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
};

// Nonparametric bootstrap over units: the full estimator is re-run per
// replicate; replicates missing a treatment are redrawn (up to 10 times).
QuantileReport bootstrap_ci(const std::vector<Unit>& units,
                            const std::vector<std::string>& treatment_order,
                            const GridPtr& grid, const BootstrapOptions& options);

void write_quantile_report_csv(const QuantileReport& report, const std::string& path);

}  // namespace distcause

#endif  // DISTCAUSE_INGEST_HPP
