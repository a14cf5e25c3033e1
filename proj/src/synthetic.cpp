#include "distcause/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "distcause/csv.hpp"
#include "distcause/errors.hpp"
#include "distcause/threads.hpp"

namespace distcause {

namespace {

// Internal seeds; frozen so defaults and oracles never drift between runs.
constexpr std::uint64_t kGammaSeed = 210;
constexpr std::uint64_t kExpectedTreatmentSeed = 0x45440d5eULL;

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for the incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  const double tiny = 1e-300;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double alpha, double beta, double x) {
  if (!(alpha > 0.0 && beta > 0.0)) throw ValidationError("beta shape parameters must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(alpha * std::log(x) + beta * std::log1p(-x) -
                                log_beta(alpha, beta));
  if (x < (alpha + 1.0) / (alpha + beta + 2.0)) {
    return front * beta_continued_fraction(alpha, beta, x) / alpha;
  }
  return 1.0 - std::exp(beta * std::log1p(-x) + alpha * std::log(x) -
                        log_beta(alpha, beta)) *
                   beta_continued_fraction(beta, alpha, 1.0 - x) / beta;
}

double inverse_beta_cdf(double alpha, double beta, double t) {
  if (!(alpha > 0.0 && beta > 0.0)) throw ValidationError("beta shape parameters must be positive");
  if (!(t > 0.0 && t < 1.0)) throw ValidationError("inverse beta argument outside (0,1)");
  double lo = 0.0, hi = 1.0;
  double x = alpha / (alpha + beta);
  const double log_b = log_beta(alpha, beta);
  for (int it = 0; it < 200; ++it) {
    const double f = regularized_incomplete_beta(alpha, beta, x) - t;
    if (f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    if (hi - lo <= 1e-14) break;
    const double density =
        std::exp((alpha - 1.0) * std::log(x) + (beta - 1.0) * std::log1p(-x) - log_b);
    double next = density > 0.0 ? x - f / density : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-14 && std::abs(f) <= 1e-12) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

std::string DgpConfig::treatment_label(int index) const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", treatment_values[index]);
  return buf;
}

Eigen::MatrixXd default_gamma_w(int r, int n) {
  Rng rng(kGammaSeed);
  Eigen::MatrixXd gamma(r, n);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < n; ++j) gamma(i, j) = 0.5 * rng.normal();
  }
  return gamma;
}

void finalize(DgpConfig& config) {
  if (config.n_covariates < 2 || config.n_covariates % 2 != 0) {
    throw ValidationError("n_covariates must be even and >= 2");
  }
  if (config.treatment_values.empty()) throw ValidationError("no treatment values");
  std::set<double> distinct(config.treatment_values.begin(), config.treatment_values.end());
  if (distinct.size() != config.treatment_values.size()) {
    throw ValidationError("treatment values must be distinct");
  }
  for (double d : config.treatment_values) {
    if (!(d >= 0.0)) throw ValidationError("treatment values must be non-negative");
  }
  if (!(config.c >= 0.0 && config.c <= 1.0)) throw ValidationError("c must lie in [0,1]");
  if (static_cast<int>(config.beta_params.size()) != config.n_covariates / 2) {
    throw ValidationError("need one beta pair per covariate pair");
  }
  for (const auto& [a, b] : config.beta_params) {
    if (!(a > 0.0 && b > 0.0)) throw ValidationError("invalid beta params");
  }
  if (!(config.noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be >= 0");
  if (config.n_units < 1 || config.obs_per_unit < 1) {
    throw ValidationError("n_units and obs_per_unit must be >= 1");
  }
  if (config.gamma_w.size() == 0) {
    config.gamma_w = default_gamma_w(config.n_treatments(), config.n_covariates);
  }
  if (config.gamma_w.rows() != config.n_treatments() ||
      config.gamma_w.cols() != config.n_covariates) {
    throw ValidationError("gamma_w shape mismatch");
  }
  if (std::isnan(config.expected_treatment_value)) {
    Rng rng(kExpectedTreatmentSeed);
    const long draws = 1000000;
    double acc = 0.0;
    for (long i = 0; i < draws; ++i) {
      const Eigen::VectorXd x = draw_covariates(config, rng);
      const Eigen::VectorXd p = assignment_probabilities(config, x);
      for (int d = 0; d < config.n_treatments(); ++d) {
        acc += p(d) * config.treatment_values[d];
      }
    }
    config.expected_treatment_value = acc / static_cast<double>(draws);
  }
}

DgpConfig default_dgp_config() {
  DgpConfig config;
  finalize(config);
  return config;
}

Eigen::VectorXd draw_covariates(const DgpConfig& config, Rng& rng) {
  const int n = config.n_covariates;
  Eigen::VectorXd x(n);
  const double offset = (n / 2 + 1) / 2.0;
  for (int j = 0; j < n; ++j) {
    const double mean = (j / 2 + 1) - offset;
    x(j) = mean + rng.normal();
  }
  return x;
}

Eigen::VectorXd mixture_weights(const DgpConfig& config, const Eigen::VectorXd& x) {
  const int half = config.n_covariates / 2;
  Eigen::VectorXd scores(half);
  for (int j = 0; j < half; ++j) scores(j) = x(2 * j) * x(2 * j + 1);
  scores.array() -= scores.maxCoeff();
  Eigen::VectorXd w = scores.array().exp();
  return w / w.sum();
}

Eigen::VectorXd assignment_probabilities(const DgpConfig& config,
                                         const Eigen::VectorXd& x) {
  Eigen::VectorXd scores = config.gamma_w * x;
  scores.array() -= scores.maxCoeff();
  Eigen::VectorXd p = scores.array().exp();
  return p / p.sum();
}

namespace {

// Noise-free inverse-CDF value at one level for given mixture weights.
double unit_curve_value(const DgpConfig& config, const Eigen::VectorXd& weights,
                        double treatment_value, double t) {
  double mix = 0.0;
  for (int j = 0; j < weights.size(); ++j) {
    mix += weights(j) * inverse_beta_cdf(config.beta_params[j].first,
                                         config.beta_params[j].second, t);
  }
  return config.c + (1.0 - config.c) *
                        (config.expected_treatment_value + std::sqrt(treatment_value)) *
                        mix;
}

std::string unit_id(int index, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "u%0*d", width, index);
  return buf;
}

}  // namespace

SyntheticDataset generate(const DgpConfig& config_in, int threads) {
  DgpConfig config = config_in;
  finalize(config);
  const int width = std::max<int>(6, std::to_string(config.n_units).size());
  SyntheticDataset data;
  data.config = config;
  data.units.resize(config.n_units);
  parallel_for(config.n_units, threads, [&](int s) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(s)));
    Unit& unit = data.units[s];
    unit.id = unit_id(s, width);
    unit.covariates = draw_covariates(config, rng);
    const Eigen::VectorXd probs = assignment_probabilities(config, unit.covariates);
    const double u_treat = rng.uniform_open();
    int chosen = config.n_treatments() - 1;
    double cum = 0.0;
    for (int d = 0; d < config.n_treatments(); ++d) {
      cum += probs(d);
      if (u_treat <= cum) {
        chosen = d;
        break;
      }
    }
    unit.treatment = config.treatment_label(chosen);
    const double noise = rng.normal(0.0, config.noise_sigma);
    const Eigen::VectorXd weights = mixture_weights(config, unit.covariates);
    unit.observations.resize(config.obs_per_unit);
    for (int o = 0; o < config.obs_per_unit; ++o) {
      const double u = rng.uniform_open();
      unit.observations[o] =
          unit_curve_value(config, weights, config.treatment_values[chosen], u) + noise;
    }
  });
  return data;
}

QuantileCurve true_quantile(const DgpConfig& config_in, const Eigen::VectorXd& covariates,
                            double treatment_value, const GridPtr& grid) {
  DgpConfig config = config_in;
  finalize(config);
  const Eigen::VectorXd weights = mixture_weights(config, covariates);
  std::vector<double> values(grid->size());
  for (int i = 0; i < grid->size(); ++i) {
    values[i] = unit_curve_value(config, weights, treatment_value, grid->level(i));
  }
  return QuantileCurve(grid, std::move(values));
}

QuantileCurve true_causal_map(const DgpConfig& config_in, double treatment_value,
                              long n_mc, const GridPtr& grid, std::uint64_t mc_seed) {
  if (n_mc < 1) throw ValidationError("n_mc must be >= 1");
  DgpConfig config = config_in;
  finalize(config);
  // Precompute the inverse Beta CDF table once; the curve is linear in the
  // mixture weights.
  const int half = config.n_covariates / 2;
  Eigen::MatrixXd btab(half, grid->size());
  for (int j = 0; j < half; ++j) {
    for (int i = 0; i < grid->size(); ++i) {
      btab(j, i) = inverse_beta_cdf(config.beta_params[j].first,
                                    config.beta_params[j].second, grid->level(i));
    }
  }
  Rng rng(mc_seed);
  Eigen::VectorXd mean_curve = Eigen::VectorXd::Zero(grid->size());
  const double scale = (1.0 - config.c) *
                       (config.expected_treatment_value + std::sqrt(treatment_value));
  for (long s = 0; s < n_mc; ++s) {
    const Eigen::VectorXd x = draw_covariates(config, rng);
    const Eigen::VectorXd w = mixture_weights(config, x);
    mean_curve.noalias() += scale * (btab.transpose() * w);
  }
  mean_curve /= static_cast<double>(n_mc);
  mean_curve.array() += config.c;
  std::vector<double> values(mean_curve.data(), mean_curve.data() + mean_curve.size());
  return QuantileCurve(grid, std::move(values));
}

std::vector<std::string> default_covariate_names(int n) {
  std::vector<std::string> names;
  names.reserve(n);
  for (int j = 1; j <= n; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

void export_units_csv(const std::vector<Unit>& units,
                      const std::vector<std::string>& covariate_names,
                      const std::string& path) {
  CsvWriter out(path);
  std::vector<std::string> header = {"unit_id", "treatment"};
  header.insert(header.end(), covariate_names.begin(), covariate_names.end());
  out.write_row(header);
  for (const Unit& u : units) {
    std::vector<std::string> row = {u.id, u.treatment};
    for (Eigen::Index j = 0; j < u.covariates.size(); ++j) {
      row.push_back(format_double(u.covariates(j)));
    }
    out.write_row(row);
  }
}

void export_observations_csv(const std::vector<Unit>& units, const std::string& path) {
  CsvWriter out(path);
  out.write_row({"unit_id", "value"});
  for (const Unit& u : units) {
    for (double v : u.observations) {
      out.write_row({u.id, format_double(v)});
    }
  }
}

std::string dgp_config_to_json(const DgpConfig& config) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["n_covariates"] = config.n_covariates;
  j["treatment_values"] = config.treatment_values;
  j["c"] = config.c;
  nlohmann::json betas = nlohmann::json::array();
  for (const auto& [a, b] : config.beta_params) betas.push_back({a, b});
  j["beta_params"] = betas;
  std::vector<std::vector<double>> gamma(config.gamma_w.rows());
  for (Eigen::Index i = 0; i < config.gamma_w.rows(); ++i) {
    gamma[i].assign(config.gamma_w.row(i).begin(), config.gamma_w.row(i).end());
  }
  j["gamma_w"] = gamma;
  j["noise_sigma"] = config.noise_sigma;
  j["n_units"] = config.n_units;
  j["obs_per_unit"] = config.obs_per_unit;
  j["seed"] = config.seed;
  j["expected_treatment_value"] = config.expected_treatment_value;
  return j.dump(2) + "\n";
}

}  // namespace distcause
