#include "distcause/baselines.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "distcause/errors.hpp"
#include "distcause/threads.hpp"

namespace distcause {

namespace {

Eigen::VectorXd predictor_row(int n_treatments, int treatment,
                              const Eigen::VectorXd& covariates) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n_treatments + covariates.size() + 1);
  if (treatment < 0 || treatment >= n_treatments) {
    throw ValidationError("treatment slot out of range");
  }
  z(treatment) = 1.0;
  z.segment(n_treatments, covariates.size()) = covariates;
  z(z.size() - 1) = 1.0;
  return z;
}

}  // namespace

RidgeFrParams ridge_fit(const std::vector<NfrExample>& data, const BSplineBasis& basis,
                        const GridPtr& grid, double lambda, int n_treatments) {
  if (data.empty()) throw ValidationError("empty dataset");
  if (lambda < 0.0) throw ValidationError("lambda must be >= 0");
  const int n = static_cast<int>(data.size());
  const int v = basis.num_basis();
  const int nc = static_cast<int>(data.front().covariates.size());
  const int p = n_treatments + nc + 1;

  const Eigen::MatrixXd phi = design_matrix(basis, *grid);

  // Stage 1: basis coefficients per target curve (tiny ridge keeps the
  // projection well-posed).
  Eigen::MatrixXd gram = phi.transpose() * phi;
  gram.diagonal().array() += 1e-12;
  const Eigen::LDLT<Eigen::MatrixXd> proj(gram);
  Eigen::MatrixXd targets(n, grid->size());
  Eigen::MatrixXd z(n, p);
  for (int s = 0; s < n; ++s) {
    if (data[s].target.size() != static_cast<std::size_t>(grid->size())) {
      throw ValidationError("target length mismatch");
    }
    for (int i = 0; i < grid->size(); ++i) targets(s, i) = data[s].target[i];
    z.row(s) = predictor_row(n_treatments, data[s].treatment, data[s].covariates);
  }
  const Eigen::MatrixXd coef = proj.solve(phi.transpose() * targets.transpose()).transpose();

  // Stage 2: the ridge normal equations (Z'Z + lambda P) G = Z'C with the
  // intercept unpenalized, solved through the equivalent augmented
  // least-squares form [Z; sqrt(lambda) P^{1/2}] to avoid squaring the
  // condition number.
  if (lambda == 0.0) {
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
    if (qr.rank() < p) {
      throw NumericalError("singular predictor system; use lambda > 0");
    }
  }
  Eigen::MatrixXd augmented = Eigen::MatrixXd::Zero(n + p, p);
  augmented.topRows(n) = z;
  const double root = std::sqrt(lambda);
  for (int j = 0; j < p - 1; ++j) augmented(n + j, j) = root;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + p, v);
  rhs.topRows(n) = coef;

  RidgeFrParams params;
  params.lambda = lambda;
  params.n_treatments = n_treatments;
  params.n_covariates = nc;
  params.coefficients = augmented.colPivHouseholderQr().solve(rhs);
  if (!params.coefficients.allFinite()) {
    throw NumericalError("ridge solution is not finite");
  }
  return params;
}

Eigen::VectorXd ridge_predict_raw(const RidgeFrParams& params, const BSplineBasis& basis,
                                  const GridPtr& grid, int treatment,
                                  const Eigen::VectorXd& covariates) {
  if (covariates.size() != params.n_covariates) {
    throw ValidationError("covariate width mismatch");
  }
  const Eigen::VectorXd z = predictor_row(params.n_treatments, treatment, covariates);
  const Eigen::VectorXd coef = params.coefficients.transpose() * z;
  return design_matrix(basis, *grid) * coef;
}

QuantileCurve ridge_predict(const RidgeFrParams& params, const BSplineBasis& basis,
                            const GridPtr& grid, int treatment,
                            const Eigen::VectorXd& covariates) {
  const Eigen::VectorXd raw = ridge_predict_raw(params, basis, grid, treatment, covariates);
  return rearrange_monotone({raw.data(), raw.data() + raw.size()}, grid);
}

PerQuantileParams per_quantile_fit(const std::vector<NfrExample>& data,
                                   const GridPtr& grid, const TrainConfig& config,
                                   const NfrSpec& spec, int threads) {
  if (data.empty()) throw ValidationError("empty dataset");
  if (config.batch_size < 1 || config.epochs < 1 || !(config.learning_rate > 0.0)) {
    throw ValidationError("invalid training config");
  }
  const int m = grid->size();
  const Mlp mlp(spec.n_treatments + spec.n_covariates, spec.hidden, 1);

  // Shared input matrix; per-level scalar targets.
  const int n = static_cast<int>(data.size());
  Eigen::MatrixXd inputs(n, spec.n_treatments + spec.n_covariates);
  Eigen::MatrixXd targets(n, m);
  for (int s = 0; s < n; ++s) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(spec.n_treatments + spec.n_covariates);
    if (data[s].treatment < 0 || data[s].treatment >= spec.n_treatments) {
      throw ValidationError("treatment slot out of range");
    }
    z(data[s].treatment) = 1.0;
    z.tail(spec.n_covariates) = data[s].covariates;
    inputs.row(s) = z;
    if (data[s].target.size() != static_cast<std::size_t>(m)) {
      throw ValidationError("target length mismatch");
    }
    for (int i = 0; i < m; ++i) targets(s, i) = data[s].target[i];
  }

  PerQuantileParams params;
  params.spec = spec;
  params.level_params.resize(m);

  parallel_for(m, threads, [&](int level) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(level)));
    Eigen::VectorXd theta = mlp.init_params(rng);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    int n_hold = n / 10;
    if (n_hold >= n) n_hold = n - 1;
    std::vector<int> hold(order.begin(), order.begin() + n_hold);
    std::vector<int> tr(order.begin() + n_hold, order.end());

    auto holdout_loss = [&] {
      const std::vector<int>& idx = n_hold > 0 ? hold : tr;
      double acc = 0.0;
      Eigen::MatrixXd x(static_cast<Eigen::Index>(idx.size()), inputs.cols());
      for (std::size_t i = 0; i < idx.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = inputs.row(idx[i]);
      const Eigen::MatrixXd out = mlp.forward(theta, x);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const double r = out(static_cast<Eigen::Index>(i), 0) - targets(idx[i], level);
        acc += r * r;
      }
      return acc / static_cast<double>(idx.size());
    };

    Adam adam(mlp.param_count());
    double lr = config.learning_rate;
    double best = std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      rng.shuffle(tr);
      for (std::size_t start = 0; start < tr.size(); start += config.batch_size) {
        const std::size_t stop = std::min(tr.size(), start + config.batch_size);
        const int b = static_cast<int>(stop - start);
        Eigen::MatrixXd x(b, inputs.cols());
        Eigen::MatrixXd y(b, 1);
        for (int i = 0; i < b; ++i) {
          x.row(i) = inputs.row(tr[start + i]);
          y(i, 0) = targets(tr[start + i], level);
        }
        Mlp::Workspace ws;
        const Eigen::MatrixXd out =
            mlp.forward(theta, x, config.dropout_rate,
                        config.dropout_rate > 0.0 ? &rng : nullptr, &ws);
        const Eigen::MatrixXd gout = 2.0 * (out - y) / b;
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(mlp.param_count());
        mlp.backward(theta, gout, ws, grad);
        if (config.weight_decay > 0.0) grad += config.weight_decay * theta;
        adam.step(theta, grad, lr);
      }
      const double loss = holdout_loss();
      if (loss < best) {
        best = loss;
        stale = 0;
      } else if (config.lr_halving && ++stale >= config.plateau_patience) {
        lr *= 0.5;
        stale = 0;
      }
    }
    params.level_params[level] = std::move(theta);
  });
  return params;
}

Eigen::VectorXd per_quantile_predict_raw(const PerQuantileParams& params,
                                         int treatment,
                                         const Eigen::VectorXd& covariates) {
  const Mlp mlp(params.spec.n_treatments + params.spec.n_covariates, params.spec.hidden, 1);
  Eigen::MatrixXd z(1, params.spec.n_treatments + params.spec.n_covariates);
  z.setZero();
  if (treatment < 0 || treatment >= params.spec.n_treatments) {
    throw ValidationError("treatment slot out of range");
  }
  z(0, treatment) = 1.0;
  z.row(0).tail(params.spec.n_covariates) = covariates;
  Eigen::VectorXd raw(static_cast<Eigen::Index>(params.level_params.size()));
  for (std::size_t level = 0; level < params.level_params.size(); ++level) {
    raw(static_cast<Eigen::Index>(level)) = mlp.forward(params.level_params[level], z)(0, 0);
  }
  return raw;
}

QuantileCurve per_quantile_predict(const PerQuantileParams& params, const GridPtr& grid,
                                   int treatment, const Eigen::VectorXd& covariates) {
  const Eigen::VectorXd raw = per_quantile_predict_raw(params, treatment, covariates);
  return rearrange_monotone({raw.data(), raw.data() + raw.size()}, grid);
}

}  // namespace distcause
