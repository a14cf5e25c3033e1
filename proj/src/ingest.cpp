#include "distcause/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "distcause/csv.hpp"
#include "distcause/errors.hpp"
#include "distcause/rng.hpp"
#include "distcause/threads.hpp"

namespace distcause {

void BinningRule::validate() const {
  if (column.empty()) throw ValidationError("binning rule needs a column name");
  if (breakpoints.empty()) throw ValidationError("binning rule needs breakpoints");
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1])) {
      throw ValidationError("breakpoints must be strictly increasing");
    }
  }
  if (labels.size() != breakpoints.size() + 1) {
    throw ValidationError("need one label per bin (breakpoints + 1)");
  }
  std::set<std::string> distinct(labels.begin(), labels.end());
  if (distinct.size() != labels.size()) {
    throw ValidationError("bin labels must be distinct");
  }
}

std::string BinningRule::label_for(double value) const {
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (value < breakpoints[i]) return labels[i];
  }
  return labels.back();
}

IngestResult ingest(const std::string& units_csv, const std::string& observations_csv,
                    const std::optional<BinningRule>& binning, int min_obs) {
  if (min_obs < 1) throw ValidationError("min_obs must be >= 1");
  if (binning) binning->validate();

  const CsvTable units_table = read_csv(units_csv);
  const CsvTable obs_table = read_csv(observations_csv);

  // Column roles in the units file.
  std::vector<std::string> missing;
  const int id_col = units_table.column("unit_id");
  if (id_col < 0) missing.push_back("unit_id");
  int treatment_col = -1;
  if (binning) {
    treatment_col = units_table.column(binning->column);
    if (treatment_col < 0) missing.push_back(binning->column);
  } else {
    treatment_col = units_table.column("treatment");
    if (treatment_col < 0) missing.push_back("treatment");
  }
  const int obs_id_col = obs_table.column("unit_id");
  const int obs_value_col = obs_table.column("value");
  if (obs_id_col < 0) missing.push_back("unit_id (observations)");
  if (obs_value_col < 0) missing.push_back("value (observations)");
  if (!missing.empty()) {
    std::string msg = "missing columns:";
    for (const std::string& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }

  IngestResult result;
  for (std::size_t c = 0; c < units_table.header.size(); ++c) {
    if (static_cast<int>(c) == id_col || static_cast<int>(c) == treatment_col) continue;
    result.covariate_names.push_back(units_table.header[c]);
  }

  std::map<std::string, std::size_t> index_of;
  std::vector<Unit> units;
  units.reserve(units_table.rows.size());
  for (std::size_t r = 0; r < units_table.rows.size(); ++r) {
    const std::vector<std::string>& row = units_table.rows[r];
    Unit unit;
    unit.id = row[id_col];
    if (index_of.count(unit.id)) {
      throw ValidationError("duplicate unit id: " + unit.id);
    }
    if (binning) {
      const double v = parse_double(row[treatment_col],
                                    "units row " + std::to_string(r + 2));
      unit.treatment = binning->label_for(v);
    } else {
      unit.treatment = row[treatment_col];
      if (unit.treatment.empty()) {
        throw ValidationError("empty treatment label on units row " + std::to_string(r + 2));
      }
    }
    unit.covariates.resize(static_cast<Eigen::Index>(result.covariate_names.size()));
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (static_cast<int>(c) == id_col || static_cast<int>(c) == treatment_col) continue;
      unit.covariates(j++) = parse_double(row[c], "units row " + std::to_string(r + 2));
    }
    index_of.emplace(unit.id, units.size());
    units.push_back(std::move(unit));
  }

  // Join observations; orphan rows are a hard error with their row numbers.
  std::vector<int> orphans;
  for (std::size_t r = 0; r < obs_table.rows.size(); ++r) {
    const std::vector<std::string>& row = obs_table.rows[r];
    const auto it = index_of.find(row[obs_id_col]);
    if (it == index_of.end()) {
      orphans.push_back(static_cast<int>(r) + 2);
      continue;
    }
    units[it->second].observations.push_back(
        parse_double(row[obs_value_col], "observations row " + std::to_string(r + 2)));
  }
  if (!orphans.empty()) {
    std::string msg = "orphan observation rows:";
    std::size_t shown = 0;
    for (int r : orphans) {
      msg += " " + std::to_string(r);
      if (++shown == 20 && orphans.size() > 20) {
        msg += " (+" + std::to_string(orphans.size() - 20) + " more)";
        break;
      }
    }
    throw ValidationError(msg);
  }

  for (Unit& unit : units) {
    if (static_cast<int>(unit.observations.size()) < min_obs) {
      result.warnings.push_back("dropped unit " + unit.id + ": " +
                                std::to_string(unit.observations.size()) +
                                " observations < min_obs " + std::to_string(min_obs));
      continue;
    }
    result.units.push_back(std::move(unit));
  }
  if (result.units.empty()) {
    throw ValidationError("no units left after min_obs filtering");
  }

  if (binning) {
    std::set<std::string> present;
    for (const Unit& u : result.units) present.insert(u.treatment);
    for (const std::string& label : binning->labels) {
      if (present.count(label)) result.treatment_order.push_back(label);
    }
  } else {
    result.treatment_order = treatment_labels(result.units);
  }
  return result;
}

namespace {

// Interpolated sample quantile of sorted values (type 7).
double sorted_quantile(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * (n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double w = h - lo;
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

}  // namespace

QuantileReport bootstrap_ci(const std::vector<Unit>& units,
                            const std::vector<std::string>& treatment_order,
                            const GridPtr& grid, const BootstrapOptions& options) {
  if (options.b_reps < 2) throw ValidationError("b_reps must be >= 2");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) {
    throw ValidationError("alpha must lie in (0,1)");
  }
  const int n = static_cast<int>(units.size());
  if (n < options.k) throw ValidationError("need at least k units");

  const OutcomeFitter outcome_fitter =
      make_outcome_fitter(options.regressor, options.models);
  const PropensityFitter propensity_fitter = make_logistic_fitter(options.models);

  std::vector<std::string> expected = treatment_order;
  EstimateOptions est_options;
  est_options.k = options.k;
  est_options.epsilon = options.epsilon;
  est_options.threads = 1;
  est_options.expected_treatments = expected;

  auto run_estimate = [&](const std::vector<Unit>& sample, std::uint64_t seed) {
    EstimateOptions opts = est_options;
    opts.seed = seed;
    return estimate(sample, grid, options.kind, opts, outcome_fitter, propensity_fitter);
  };

  const CausalMapEstimate point_estimate =
      run_estimate(units, derive_seed(options.seed, 0));

  const int n_levels = static_cast<int>(options.levels.size());
  const int n_treat = static_cast<int>(treatment_order.size());
  // replicate x treatment x level
  std::vector<std::vector<std::vector<double>>> replicate_values(
      options.b_reps,
      std::vector<std::vector<double>>(n_treat, std::vector<double>(n_levels)));

  parallel_for(options.b_reps, options.threads, [&](int rep) {
    Rng rng(derive_seed(options.seed, 0xb001ULL + rep));
    std::vector<Unit> sample;
    bool valid = false;
    for (int attempt = 0; attempt < 10 && !valid; ++attempt) {
      sample.clear();
      sample.reserve(n);
      std::set<std::string> present;
      for (int i = 0; i < n; ++i) {
        const Unit& src = units[rng.below(static_cast<std::uint64_t>(n))];
        Unit copy = src;
        copy.id = src.id + "#" + std::to_string(i);
        present.insert(copy.treatment);
        sample.push_back(std::move(copy));
      }
      valid = true;
      for (const std::string& t : expected) {
        if (!present.count(t)) {
          valid = false;
          break;
        }
      }
    }
    if (!valid) {
      throw NumericalError("bootstrap replicate missing a treatment after 10 redraws");
    }
    const CausalMapEstimate est =
        run_estimate(sample, derive_seed(options.seed, 0xcafeULL + rep));
    for (int t = 0; t < n_treat; ++t) {
      const QuantileCurve& curve = est.map_for(treatment_order[t]);
      for (int l = 0; l < n_levels; ++l) {
        replicate_values[rep][t][l] = curve.value_at(options.levels[l]);
      }
    }
  });

  QuantileReport report;
  report.levels = options.levels;
  report.treatments = treatment_order;
  report.b_reps = options.b_reps;
  report.alpha = options.alpha;
  report.point.assign(n_treat, std::vector<double>(n_levels));
  report.ci_lo.assign(n_treat, std::vector<double>(n_levels));
  report.ci_hi.assign(n_treat, std::vector<double>(n_levels));
  for (int t = 0; t < n_treat; ++t) {
    const QuantileCurve& curve = point_estimate.map_for(treatment_order[t]);
    for (int l = 0; l < n_levels; ++l) {
      report.point[t][l] = curve.value_at(options.levels[l]);
      std::vector<double> values(options.b_reps);
      for (int rep = 0; rep < options.b_reps; ++rep) {
        values[rep] = replicate_values[rep][t][l];
      }
      std::sort(values.begin(), values.end());
      double lo = sorted_quantile(values, options.alpha / 2.0);
      double hi = sorted_quantile(values, 1.0 - options.alpha / 2.0);
      // The interval always brackets the point estimate.
      lo = std::min(lo, report.point[t][l]);
      hi = std::max(hi, report.point[t][l]);
      report.ci_lo[t][l] = lo;
      report.ci_hi[t][l] = hi;
    }
  }
  // Percent change of each treatment against the first, per level.
  report.pct_change.assign(n_treat, std::vector<double>(n_levels, 0.0));
  for (int t = 1; t < n_treat; ++t) {
    for (int l = 0; l < n_levels; ++l) {
      const double base = report.point[0][l];
      report.pct_change[t][l] =
          base != 0.0 ? 100.0 * (report.point[t][l] - base) / base
                      : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return report;
}

void write_quantile_report_csv(const QuantileReport& report, const std::string& path) {
  CsvWriter out(path);
  std::vector<std::string> header = {"tau"};
  for (const std::string& t : report.treatments) {
    header.push_back(t + "_value");
    header.push_back(t + "_ci_lo");
    header.push_back(t + "_ci_hi");
  }
  for (std::size_t t = 1; t < report.treatments.size(); ++t) {
    header.push_back("pct_" + report.treatments.front() + "_to_" + report.treatments[t]);
  }
  out.write_row(header);
  for (std::size_t l = 0; l < report.levels.size(); ++l) {
    std::vector<std::string> row = {format_double(report.levels[l])};
    for (std::size_t t = 0; t < report.treatments.size(); ++t) {
      row.push_back(format_double(report.point[t][l]));
      row.push_back(format_double(report.ci_lo[t][l]));
      row.push_back(format_double(report.ci_hi[t][l]));
    }
    for (std::size_t t = 1; t < report.treatments.size(); ++t) {
      row.push_back(format_double(report.pct_change[t][l]));
    }
    out.write_row(row);
  }
}

}  // namespace distcause
