#ifndef DISTCAUSE_PROPENSITY_HPP
#define DISTCAUSE_PROPENSITY_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

#include "distcause/nfr_net.hpp"

namespace distcause {

// Multinomial logistic model pi_d(X) = P{D = d | X}. Coefficients are in the
// original covariate scale (fit standardizes internally for conditioning and
// back-transforms; the L2 penalty acts on standardized weights, intercepts
// unpenalized).
struct LogisticParams {
  Eigen::MatrixXd weights;    // r x n, one coefficient vector per class
  Eigen::VectorXd intercepts; // r
  bool reference_normalized = false;

  int n_classes() const { return static_cast<int>(weights.rows()); }
  int n_covariates() const { return static_cast<int>(weights.cols()); }

  // Equivalent parameterization with class 0 pinned at zero.
  LogisticParams normalized_to_reference() const;

  void save_checkpoint(const std::string& path) const;
  static LogisticParams load_checkpoint(const std::string& path);
};

// Penalized maximum likelihood by full-batch gradient descent (Nesterov
// acceleration with a spectral step bound) down to gradient norm <= 1e-6 or
// the iteration cap. Deterministic given config.seed.
LogisticParams fit_propensity(const std::vector<Eigen::VectorXd>& covariates,
                              const std::vector<int>& labels, int n_classes,
                              double l2_penalty, const TrainConfig& config);

// Stable softmax over linear class scores; positive, sums to 1.
Eigen::VectorXd predict_proba(const LogisticParams& params,
                              const Eigen::VectorXd& covariates);

// Clamp each probability to [epsilon, 1-epsilon], then renormalize. The
// overlap guard applied to every propensity consumed by the estimators.
std::vector<double> clip_probabilities(std::vector<double> probabilities,
                                       double epsilon);
Eigen::VectorXd clip_probabilities(Eigen::VectorXd probabilities, double epsilon);

}  // namespace distcause

#endif  // DISTCAUSE_PROPENSITY_HPP
