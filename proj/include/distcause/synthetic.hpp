#ifndef DISTCAUSE_SYNTHETIC_HPP
#define DISTCAUSE_SYNTHETIC_HPP

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "distcause/quantile_space.hpp"
#include "distcause/rng.hpp"
#include "distcause/unit.hpp"

namespace distcause {

// Full parameterization of the synthetic data-generating process. The unit's
// inverse CDF is a covariate-weighted mixture of inverse Beta CDFs scaled by
// c + (1-c)(E[D] + sqrt(D)), plus a per-unit constant noise shift; treatments
// are assigned by a softmax over gamma_w * X.
struct DgpConfig {
  int n_covariates = 10;  // even; covariate pair j ~ N(j - (n/2+1)/2, 1)
  std::vector<double> treatment_values = {1, 2, 3, 4, 5};
  double c = 0.2;  // in [0,1]; 1 removes all treatment dependence
  std::vector<std::pair<double, double>> beta_params = {
      {2, 5}, {5, 2}, {2, 2}, {1, 3}, {3, 1}};
  Eigen::MatrixXd gamma_w;  // r x n softmax coefficients
  double noise_sigma = 0.22360679774997896;  // sd; variance 0.05
  int n_units = 5000;
  int obs_per_unit = 100;
  std::uint64_t seed = 1;

  // E[D] under the marginal treatment distribution; cached by finalize().
  double expected_treatment_value = std::numeric_limits<double>::quiet_NaN();

  int n_treatments() const { return static_cast<int>(treatment_values.size()); }
  std::string treatment_label(int index) const;
};

// Frozen gamma_w defaults: one draw from N(0, 0.25) per coordinate using a
// fixed internal seed.
Eigen::MatrixXd default_gamma_w(int r, int n);

// Defaults above plus the cached E[D].
DgpConfig default_dgp_config();

// Validates the config and fills the E[D] cache (Monte Carlo, 1e6 covariate
// draws, fixed internal seed) when missing.
void finalize(DgpConfig& config);

struct SyntheticDataset {
  std::vector<Unit> units;
  DgpConfig config;
};

// Draw n_units units: covariates, softmax treatment, noise shift, and
// obs_per_unit observations by inverse-transform sampling through the exact
// unit inverse CDF. Deterministic given config.seed; parallel across units.
SyntheticDataset generate(const DgpConfig& config, int threads = 0);

// Covariate draw for one unit from the shifted-Gaussian law.
Eigen::VectorXd draw_covariates(const DgpConfig& config, Rng& rng);

// Mixture weights softmax(X^{2j-1} X^{2j}) for one covariate vector.
Eigen::VectorXd mixture_weights(const DgpConfig& config, const Eigen::VectorXd& x);

// Softmax treatment-assignment probabilities for one covariate vector.
Eigen::VectorXd assignment_probabilities(const DgpConfig& config,
                                         const Eigen::VectorXd& x);

// Noise-free unit inverse CDF evaluated at the grid levels.
QuantileCurve true_quantile(const DgpConfig& config, const Eigen::VectorXd& covariates,
                            double treatment_value, const GridPtr& grid);

// Monte Carlo average of true_quantile over n_mc fresh covariate draws; the
// oracle causal map. Fixed internal MC seed unless overridden, so equal
// configs give identical oracles regardless of config.seed.
QuantileCurve true_causal_map(const DgpConfig& config, double treatment_value,
                              long n_mc, const GridPtr& grid,
                              std::uint64_t mc_seed = 0x9d2c5680u);

// Regularized incomplete beta I_x(alpha, beta), continued-fraction evaluation.
double regularized_incomplete_beta(double alpha, double beta, double x);

// Inverse of the regularized incomplete beta on t in (0,1); safeguarded
// Newton to absolute tolerance 1e-10 or better.
double inverse_beta_cdf(double alpha, double beta, double t);

// Dataset export: units CSV (unit_id,treatment,x1..xn), observations CSV
// (unit_id,value) and the config as JSON.
void export_units_csv(const std::vector<Unit>& units,
                      const std::vector<std::string>& covariate_names,
                      const std::string& path);
void export_observations_csv(const std::vector<Unit>& units, const std::string& path);
std::string dgp_config_to_json(const DgpConfig& config);
std::vector<std::string> default_covariate_names(int n);

}  // namespace distcause

#endif  // DISTCAUSE_SYNTHETIC_HPP
