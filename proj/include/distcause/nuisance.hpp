#ifndef DISTCAUSE_NUISANCE_HPP
#define DISTCAUSE_NUISANCE_HPP

#include <string>

#include "distcause/bspline.hpp"
#include "distcause/estimators.hpp"
#include "distcause/nfr_net.hpp"
#include "distcause/synthetic.hpp"

namespace distcause {

enum class RegressorKind { NFR, RIDGE, PER_QUANTILE };

std::string to_string(RegressorKind kind);
RegressorKind regressor_kind_from_string(const std::string& name);

// Model-fitting knobs shared by the fitters. Covariates are z-scored inside
// each fitter from its own training split.
struct NuisanceConfig {
  TrainConfig train;              // nfr / per-quantile optimizer settings
  double ridge_lambda = 1.0;
  double logistic_penalty = 1e-4;
  BSplineBasis basis{3, 10};
  NfrSpec nfr_template;           // hidden widths / representation size
};

OutcomeFitter make_outcome_fitter(RegressorKind kind, const NuisanceConfig& config);
PropensityFitter make_logistic_fitter(const NuisanceConfig& config);

// Oracle nuisances backed by the synthetic DGP, for identification and
// consistency checks.
OutcomeFitter make_oracle_outcome_fitter(const DgpConfig& config);
PropensityFitter make_oracle_propensity_fitter(const DgpConfig& config);

// Degenerate nuisances used by the double-robustness checks.
OutcomeFitter make_zero_outcome_fitter();
PropensityFitter make_uniform_propensity_fitter();

}  // namespace distcause

#endif  // DISTCAUSE_NUISANCE_HPP
