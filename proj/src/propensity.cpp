#include "distcause/propensity.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "distcause/errors.hpp"

namespace distcause {

namespace {

// Row-wise softmax with max-subtraction.
Eigen::MatrixXd softmax_rows(Eigen::MatrixXd scores) {
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    scores.row(i).array() -= scores.row(i).maxCoeff();
    scores.row(i) = scores.row(i).array().exp();
    scores.row(i) /= scores.row(i).sum();
  }
  return scores;
}

// Largest singular value squared of Z by power iteration (deterministic start).
double spectral_norm_sq(const Eigen::MatrixXd& z) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(z.cols()).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd w = z.transpose() * (z * v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double next = norm;
    if (std::abs(next - lambda) <= 1e-10 * std::max(1.0, next)) {
      lambda = next;
      break;
    }
    lambda = next;
    v = w;
  }
  return lambda;
}

}  // namespace

LogisticParams fit_propensity(const std::vector<Eigen::VectorXd>& covariates,
                              const std::vector<int>& labels, int n_classes,
                              double l2_penalty, const TrainConfig& config) {
  const int n = static_cast<int>(covariates.size());
  if (n == 0 || labels.size() != covariates.size()) {
    throw ValidationError("propensity fit requires non-empty aligned data");
  }
  if (l2_penalty < 0.0) throw ValidationError("l2 penalty must be >= 0");
  std::set<int> seen(labels.begin(), labels.end());
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw ValidationError("label out of range");
  }
  if (seen.size() < 2) throw ValidationError("degenerate treatment column");

  const int p = static_cast<int>(covariates.front().size());
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i) {
    if (covariates[i].size() != p) throw ValidationError("covariate width mismatch");
    x.row(i) = covariates[i];
  }

  // Standardize columns; constant columns pass through unscaled.
  Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::RowVectorXd sd(p);
  for (int j = 0; j < p; ++j) {
    const double var = (x.col(j).array() - mean(j)).square().sum() / n;
    sd(j) = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
  Eigen::MatrixXd z(n, p + 1);
  for (int j = 0; j < p; ++j) z.col(j) = (x.col(j).array() - mean(j)) / sd(j);
  z.col(p).setOnes();

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, n_classes);
  for (int i = 0; i < n; ++i) onehot(i, labels[i]) = 1.0;

  // Objective: (1/n) sum -log softmax(z B)_y + (lambda/2) ||B_weights||^2.
  // Softmax Hessian spectral bound 1/2 gives the safe Lipschitz constant.
  const double lip = 0.5 * spectral_norm_sq(z) / n + l2_penalty;
  const double step = 1.0 / std::max(lip, 1e-12);

  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p + 1, n_classes);
  double t_prev = 1.0;

  auto gradient = [&](const Eigen::MatrixXd& beta) {
    const Eigen::MatrixXd probs = softmax_rows(z * beta);
    Eigen::MatrixXd g = z.transpose() * (probs - onehot) / n;
    g.topRows(p) += l2_penalty * beta.topRows(p);
    return g;
  };
  auto objective = [&](const Eigen::MatrixXd& beta) {
    const Eigen::MatrixXd scores = z * beta;
    double nll = 0.0;
    for (int i = 0; i < n; ++i) {
      const double mx = scores.row(i).maxCoeff();
      const double lse = mx + std::log((scores.row(i).array() - mx).exp().sum());
      nll += lse - scores(i, labels[i]);
    }
    return nll / n + 0.5 * l2_penalty * beta.topRows(p).squaredNorm();
  };

  // Accelerated descent with monotone restart; stops at gradient norm 1e-6
  // or the iteration cap.
  const int max_iters = 20000;
  Eigen::MatrixXd y = b;
  Eigen::MatrixXd b_prev = b;
  double obj_prev = objective(b);
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::MatrixXd g = gradient(y);
    if (g.norm() <= 1e-6) {
      b = y;
      break;
    }
    Eigen::MatrixXd b_next = y - step * g;
    const double obj_next = objective(b_next);
    if (obj_next > obj_prev) {
      y = b_next;
      t_prev = 1.0;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_prev * t_prev));
      y = b_next + ((t_prev - 1.0) / t_next) * (b_next - b_prev);
      t_prev = t_next;
    }
    b_prev = b_next;
    obj_prev = obj_next;
    b = std::move(b_next);
  }

  // Back to original covariate scale: w = w_std / sd, intercept absorbs means.
  LogisticParams params;
  params.weights.resize(n_classes, p);
  params.intercepts.resize(n_classes);
  for (int c = 0; c < n_classes; ++c) {
    double shift = b(p, c);
    for (int j = 0; j < p; ++j) {
      params.weights(c, j) = b(j, c) / sd(j);
      shift -= b(j, c) * mean(j) / sd(j);
    }
    params.intercepts(c) = shift;
  }
  (void)config;
  return params;
}

Eigen::VectorXd predict_proba(const LogisticParams& params,
                              const Eigen::VectorXd& covariates) {
  if (covariates.size() != params.n_covariates()) {
    throw ValidationError("covariate width mismatch");
  }
  Eigen::VectorXd scores = params.weights * covariates + params.intercepts;
  scores.array() -= scores.maxCoeff();
  Eigen::VectorXd probs = scores.array().exp();
  return probs / probs.sum();
}

LogisticParams LogisticParams::normalized_to_reference() const {
  LogisticParams out = *this;
  const Eigen::RowVectorXd w0 = weights.row(0);
  const double b0 = intercepts(0);
  for (int c = 0; c < n_classes(); ++c) {
    out.weights.row(c) -= w0;
    out.intercepts(c) -= b0;
  }
  out.reference_normalized = true;
  return out;
}

std::vector<double> clip_probabilities(std::vector<double> probabilities,
                                       double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw ValidationError("epsilon must lie in (0, 0.5)");
  }
  double total = 0.0;
  for (double& p : probabilities) {
    p = std::min(std::max(p, epsilon), 1.0 - epsilon);
    total += p;
  }
  for (double& p : probabilities) p /= total;
  return probabilities;
}

Eigen::VectorXd clip_probabilities(Eigen::VectorXd probabilities, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw ValidationError("epsilon must lie in (0, 0.5)");
  }
  probabilities = probabilities.cwiseMax(epsilon).cwiseMin(1.0 - epsilon);
  return probabilities / probabilities.sum();
}

namespace {
constexpr char kCheckpointMagic[] = "distcause-checkpoint v1";
}

void LogisticParams::save_checkpoint(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ValidationError("cannot open checkpoint path: " + path);
  std::fprintf(f, "%s\nkind logistic\nclasses %d\ncovariates %d\nreference %d\nparams %d\n",
               kCheckpointMagic, n_classes(), n_covariates(),
               reference_normalized ? 1 : 0,
               n_classes() * (n_covariates() + 1));
  for (int c = 0; c < n_classes(); ++c) {
    for (int j = 0; j < n_covariates(); ++j) std::fprintf(f, "%.17g\n", weights(c, j));
    std::fprintf(f, "%.17g\n", intercepts(c));
  }
  std::fclose(f);
}

LogisticParams LogisticParams::load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint path: " + path);
  std::string line, key, kind;
  std::getline(in, line);
  if (line != kCheckpointMagic) throw ValidationError("unrecognized checkpoint header");
  in >> key >> kind;
  if (key != "kind" || kind != "logistic") throw ValidationError("checkpoint kind mismatch");
  int classes = 0, covars = 0, ref = 0, count = 0;
  in >> key >> classes >> key >> covars >> key >> ref >> key >> count;
  if (classes < 1 || covars < 0 || count != classes * (covars + 1)) {
    throw ValidationError("malformed checkpoint dimensions");
  }
  LogisticParams params;
  params.weights.resize(classes, covars);
  params.intercepts.resize(classes);
  params.reference_normalized = ref != 0;
  for (int c = 0; c < classes; ++c) {
    for (int j = 0; j < covars; ++j) {
      if (!(in >> params.weights(c, j))) throw ValidationError("truncated checkpoint");
    }
    if (!(in >> params.intercepts(c))) throw ValidationError("truncated checkpoint");
  }
  return params;
}

}  // namespace distcause
