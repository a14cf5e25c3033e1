#include "distcause/nfr_net.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "distcause/errors.hpp"

namespace distcause {

double nfr_loss(const std::vector<double>& pred_raw, const QuantileCurve& target) {
  if (pred_raw.size() != static_cast<std::size_t>(target.size())) {
    throw ValidationError("loss length mismatch");
  }
  const std::vector<double>& w = target.grid()->trapezoid_weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < pred_raw.size(); ++i) {
    const double r = pred_raw[i] - target.values()[i];
    acc += w[i] * r * r;
  }
  return acc;
}

NfrNet::NfrNet(NfrSpec spec, const BSplineBasis& basis, GridPtr grid)
    : spec_(std::move(spec)),
      basis_(basis),
      grid_(std::move(grid)),
      phi_(design_matrix(basis, *grid_)),
      mlp_(spec_.n_treatments + spec_.n_covariates, spec_.hidden, spec_.representation) {
  if (spec_.n_treatments < 1 || spec_.n_covariates < 0 || spec_.representation < 1) {
    throw ValidationError("invalid nfr dimensions");
  }
  params_ = Eigen::VectorXd::Zero(param_count());
}

void NfrNet::set_params(Eigen::VectorXd params) {
  if (params.size() != param_count()) throw ValidationError("nfr parameter size mismatch");
  if (!params.allFinite()) throw ValidationError("non-finite value");
  params_ = std::move(params);
}

void NfrNet::init_params(std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(param_count());
  p.head(mlp_.param_count()) = mlp_.init_params(rng);
  double* g = p.data() + mlp_.param_count();
  const int n_gamma = spec_.representation * basis_size();
  for (int i = 0; i < n_gamma; ++i) g[i] = 0.1 * rng.normal();
  params_ = std::move(p);
}

Eigen::Map<const Eigen::MatrixXd> NfrNet::gamma_view(const Eigen::VectorXd& p) const {
  return Eigen::Map<const Eigen::MatrixXd>(p.data() + mlp_.param_count(),
                                           spec_.representation, basis_size());
}

Eigen::VectorXd NfrNet::encode(int treatment, const Eigen::VectorXd& covariates) const {
  if (treatment < 0 || treatment >= spec_.n_treatments) {
    throw ValidationError("treatment slot out of range");
  }
  if (covariates.size() != spec_.n_covariates) {
    throw ValidationError("covariate width mismatch");
  }
  Eigen::VectorXd z = Eigen::VectorXd::Zero(spec_.n_treatments + spec_.n_covariates);
  z(treatment) = 1.0;
  z.tail(spec_.n_covariates) = covariates;
  return z;
}

Eigen::MatrixXd NfrNet::forward_raw(const Eigen::MatrixXd& inputs) const {
  const Eigen::MatrixXd reps = mlp_.forward(params_.head(mlp_.param_count()), inputs);
  // raw(b, i) = sum_a F(b,a) sum_j gamma(a,j) phi(i,j)
  return reps * (gamma_view(params_) * phi_.transpose());
}

QuantileCurve NfrNet::forward(int treatment, const Eigen::VectorXd& covariates) const {
  Eigen::MatrixXd z(1, spec_.n_treatments + spec_.n_covariates);
  z.row(0) = encode(treatment, covariates);
  const Eigen::MatrixXd raw = forward_raw(z);
  std::vector<double> values(raw.data(), raw.data() + raw.size());
  return rearrange_monotone(std::move(values), grid_);
}

Eigen::VectorXd NfrNet::gradients(const Eigen::MatrixXd& inputs,
                                  const Eigen::MatrixXd& targets,
                                  double weight_decay, double dropout,
                                  Rng* rng) const {
  const Eigen::Index n = inputs.rows();
  if (n == 0) throw ValidationError("empty batch");
  if (targets.rows() != n || targets.cols() != grid_->size()) {
    throw ValidationError("target shape mismatch");
  }
  Mlp::Workspace ws;
  const Eigen::MatrixXd reps =
      mlp_.forward(params_.head(mlp_.param_count()), inputs, dropout, rng, &ws);
  const auto gamma = gamma_view(params_);
  const Eigen::MatrixXd expand = gamma * phi_.transpose();  // u x M
  const Eigen::MatrixXd raw = reps * expand;

  // d(mean loss)/d(raw): 2 * w_i * residual / n
  const std::vector<double>& w = grid_->trapezoid_weights();
  Eigen::MatrixXd graw = raw - targets;
  for (Eigen::Index i = 0; i < graw.cols(); ++i) {
    graw.col(i) *= 2.0 * w[static_cast<std::size_t>(i)] / static_cast<double>(n);
  }

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(param_count());
  // Continuous layer: dgamma = reps^T * graw * phi; dreps = graw * expand^T.
  Eigen::Map<Eigen::MatrixXd> dgamma(grad.data() + mlp_.param_count(),
                                     spec_.representation, basis_size());
  dgamma.noalias() = reps.transpose() * (graw * phi_);
  const Eigen::MatrixXd dreps = graw * expand.transpose();
  mlp_.backward(params_.head(mlp_.param_count()), dreps, ws,
                grad.head(mlp_.param_count()));

  if (weight_decay > 0.0) grad += weight_decay * params_;
  return grad;
}

double NfrNet::mean_loss(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) const {
  const Eigen::MatrixXd raw = forward_raw(inputs);
  const std::vector<double>& w = grid_->trapezoid_weights();
  double acc = 0.0;
  for (Eigen::Index b = 0; b < raw.rows(); ++b) {
    for (Eigen::Index i = 0; i < raw.cols(); ++i) {
      const double r = raw(b, i) - targets(b, i);
      acc += w[static_cast<std::size_t>(i)] * r * r;
    }
  }
  return acc / static_cast<double>(raw.rows());
}

void NfrNet::build_batch(const std::vector<NfrExample>& data, Eigen::MatrixXd& inputs,
                         Eigen::MatrixXd& targets) const {
  inputs.resize(static_cast<Eigen::Index>(data.size()),
                spec_.n_treatments + spec_.n_covariates);
  targets.resize(static_cast<Eigen::Index>(data.size()), grid_->size());
  for (std::size_t s = 0; s < data.size(); ++s) {
    inputs.row(static_cast<Eigen::Index>(s)) = encode(data[s].treatment, data[s].covariates);
    if (data[s].target.size() != static_cast<std::size_t>(grid_->size())) {
      throw ValidationError("target length mismatch");
    }
    for (int i = 0; i < grid_->size(); ++i) {
      targets(static_cast<Eigen::Index>(s), i) = data[s].target[i];
    }
  }
}

NfrNet NfrNet::train(const std::vector<NfrExample>& data, const TrainConfig& config,
                     const NfrSpec& spec, const BSplineBasis& basis, GridPtr grid,
                     TrainHistory* history) {
  if (data.empty()) throw ValidationError("empty dataset");
  if (!(config.learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (config.batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (config.epochs < 1) throw ValidationError("epochs must be >= 1");
  if (config.dropout_rate < 0.0 || config.dropout_rate >= 1.0) {
    throw ValidationError("dropout_rate must lie in [0,1)");
  }

  NfrNet net(spec, basis, std::move(grid));
  net.init_params(derive_seed(config.seed, 0));
  Rng rng(derive_seed(config.seed, 1));

  Eigen::MatrixXd inputs, targets;
  net.build_batch(data, inputs, targets);

  // Held-out split: first 10% of a seeded shuffle (at least 1 example kept
  // for training).
  const int n = static_cast<int>(data.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  int n_hold = n / 10;
  if (n_hold >= n) n_hold = n - 1;
  std::vector<int> hold(order.begin(), order.begin() + n_hold);
  std::vector<int> tr(order.begin() + n_hold, order.end());

  auto rows_of = [&](const std::vector<int>& idx, const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
    return out;
  };
  const Eigen::MatrixXd hold_in = rows_of(hold, inputs);
  const Eigen::MatrixXd hold_tg = rows_of(hold, targets);

  Adam adam(net.param_count());
  double lr = config.learning_rate;
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(tr);
    for (std::size_t start = 0; start < tr.size(); start += config.batch_size) {
      const std::size_t stop = std::min(tr.size(), start + config.batch_size);
      std::vector<int> batch(tr.begin() + start, tr.begin() + stop);
      const Eigen::MatrixXd bin = rows_of(batch, inputs);
      const Eigen::MatrixXd btg = rows_of(batch, targets);
      const Eigen::VectorXd grad =
          net.gradients(bin, btg, config.weight_decay, config.dropout_rate, &rng);
      adam.step(net.params_, grad, lr);
    }
    const double holdout = n_hold > 0 ? net.mean_loss(hold_in, hold_tg)
                                      : net.mean_loss(inputs, targets);
    if (history) {
      history->holdout_loss.push_back(holdout);
      history->learning_rate.push_back(lr);
    }
    if (holdout < best) {
      best = holdout;
      stale = 0;
    } else if (config.lr_halving && ++stale >= config.plateau_patience) {
      lr *= 0.5;
      stale = 0;
    }
  }
  if (!net.params_.allFinite()) {
    throw NumericalError("nfr training diverged to non-finite parameters");
  }
  return net;
}

namespace {
constexpr char kCheckpointMagic[] = "distcause-checkpoint v1";

void write_value(std::FILE* f, double v) { std::fprintf(f, "%.17g\n", v); }
}  // namespace

void NfrNet::save_checkpoint(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ValidationError("cannot open checkpoint path: " + path);
  std::fprintf(f, "%s\nkind nfr\ntreatments %d\ncovariates %d\nhidden", kCheckpointMagic,
               spec_.n_treatments, spec_.n_covariates);
  for (int h : spec_.hidden) std::fprintf(f, " %d", h);
  std::fprintf(f, "\nrepresentation %d\ndegree %d\nbasis %d\ngrid %d\nparams %d\n",
               spec_.representation, basis_.degree(), basis_.num_basis(), grid_->size(),
               static_cast<int>(params_.size()));
  for (Eigen::Index i = 0; i < params_.size(); ++i) write_value(f, params_(i));
  std::fclose(f);
}

NfrNet NfrNet::load_checkpoint(const std::string& path, GridPtr grid) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint path: " + path);
  std::string line;
  std::getline(in, line);
  if (line != kCheckpointMagic) throw ValidationError("unrecognized checkpoint header");
  std::string key, kind;
  in >> key >> kind;
  if (key != "kind" || kind != "nfr") throw ValidationError("checkpoint kind mismatch");
  NfrSpec spec;
  int degree = 0, num_basis = 0, grid_size = 0, n_params = 0;
  in >> key >> spec.n_treatments;
  in >> key >> spec.n_covariates;
  in >> key;  // "hidden"
  spec.hidden.clear();
  {
    std::getline(in, line);
    std::istringstream hs(line);
    int h;
    while (hs >> h) spec.hidden.push_back(h);
  }
  in >> key >> spec.representation;
  in >> key >> degree;
  in >> key >> num_basis;
  in >> key >> grid_size;
  in >> key >> n_params;
  if (!grid || grid->size() != grid_size) {
    throw ValidationError("checkpoint grid size mismatch");
  }
  NfrNet net(spec, BSplineBasis(degree, num_basis), std::move(grid));
  if (n_params != net.param_count()) throw ValidationError("checkpoint parameter count mismatch");
  Eigen::VectorXd params(n_params);
  for (int i = 0; i < n_params; ++i) {
    if (!(in >> params(i))) throw ValidationError("truncated checkpoint");
  }
  net.set_params(std::move(params));
  return net;
}

}  // namespace distcause
