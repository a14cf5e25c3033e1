#ifndef DISTCAUSE_BASELINES_HPP
#define DISTCAUSE_BASELINES_HPP

#include <Eigen/Core>
#include <vector>

#include "distcause/bspline.hpp"
#include "distcause/nfr_net.hpp"
#include "distcause/quantile_space.hpp"

namespace distcause {

// Linear functional regression with ridge penalty: target curves are
// projected onto basis coefficients, then coefficients are regressed on
// (treatment one-hot, covariates, intercept) in closed form.
struct RidgeFrParams {
  Eigen::MatrixXd coefficients;  // (r + n + 1) x v
  double lambda = 1.0;
  int n_treatments = 0;
  int n_covariates = 0;
};

// Penalized least squares; the intercept row is left unpenalized. A singular
// system with lambda == 0 raises NumericalError suggesting lambda > 0.
RidgeFrParams ridge_fit(const std::vector<NfrExample>& data, const BSplineBasis& basis,
                        const GridPtr& grid, double lambda, int n_treatments);

QuantileCurve ridge_predict(const RidgeFrParams& params, const BSplineBasis& basis,
                            const GridPtr& grid, int treatment,
                            const Eigen::VectorXd& covariates);

// Raw (pre-rearrangement) predicted values.
Eigen::VectorXd ridge_predict_raw(const RidgeFrParams& params, const BSplineBasis& basis,
                                  const GridPtr& grid, int treatment,
                                  const Eigen::VectorXd& covariates);

// The per-quantile comparator: one independent scalar-output MLP per grid
// level, trained on the target curve values at that level. Predictions
// concatenate the scalar outputs and monotone-rearrange.
struct PerQuantileParams {
  std::vector<Eigen::VectorXd> level_params;  // one flat vector per level
  NfrSpec spec;                               // shared architecture (scalar output)
};

PerQuantileParams per_quantile_fit(const std::vector<NfrExample>& data,
                                   const GridPtr& grid, const TrainConfig& config,
                                   const NfrSpec& spec, int threads = 1);

Eigen::VectorXd per_quantile_predict_raw(const PerQuantileParams& params,
                                         int treatment,
                                         const Eigen::VectorXd& covariates);

QuantileCurve per_quantile_predict(const PerQuantileParams& params, const GridPtr& grid,
                                   int treatment, const Eigen::VectorXd& covariates);

}  // namespace distcause

#endif  // DISTCAUSE_BASELINES_HPP
