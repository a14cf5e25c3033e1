#ifndef DISTCAUSE_NFR_NET_HPP
#define DISTCAUSE_NFR_NET_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "distcause/bspline.hpp"
#include "distcause/mlp.hpp"
#include "distcause/quantile_space.hpp"

namespace distcause {

// Optimizer settings shared by the trainable regressors.
struct TrainConfig {
  double learning_rate = 0.003;
  int batch_size = 128;
  int epochs = 150;
  double dropout_rate = 0.1;
  double weight_decay = 0.001;
  int plateau_patience = 10;
  bool lr_halving = true;
  std::uint64_t seed = 0;
};

// One regression example: treatment slot, covariates, target curve values.
struct NfrExample {
  int treatment;
  Eigen::VectorXd covariates;
  std::vector<double> target;
};

struct NfrSpec {
  int n_treatments;
  int n_covariates;
  std::vector<int> hidden = {64, 64};
  int representation = 16;  // u
};

// Trapezoid-weighted squared-error loss between raw predicted values and a
// target curve, both on the target's grid.
double nfr_loss(const std::vector<double>& pred_raw, const QuantileCurve& target);

// Neural functional regression: an MLP maps (one-hot treatment, covariates)
// to u representation outputs; a continuous layer expands them through a
// coefficient matrix gamma (u x v) and the basis functions into a curve.
// Parameters are a flat vector [mlp theta | gamma column-major].
class NfrNet {
 public:
  NfrNet(NfrSpec spec, const BSplineBasis& basis, GridPtr grid);

  const NfrSpec& spec() const { return spec_; }
  const GridPtr& grid() const { return grid_; }
  int basis_size() const { return static_cast<int>(phi_.cols()); }
  int param_count() const { return mlp_.param_count() + spec_.representation * basis_size(); }

  const Eigen::VectorXd& params() const { return params_; }
  void set_params(Eigen::VectorXd params);
  void init_params(std::uint64_t seed);

  // One-hot treatment followed by covariates.
  Eigen::VectorXd encode(int treatment, const Eigen::VectorXd& covariates) const;

  // Raw (pre-rearrangement) curve values, rows are examples; dropout off.
  Eigen::MatrixXd forward_raw(const Eigen::MatrixXd& inputs) const;

  // Monotone-rearranged prediction for one example; dropout off.
  QuantileCurve forward(int treatment, const Eigen::VectorXd& covariates) const;

  // Alias of forward: the regression function estimate consumed upstream.
  QuantileCurve predict_m(int treatment, const Eigen::VectorXd& covariates) const {
    return forward(treatment, covariates);
  }

  // Exact analytic gradient of the mean batch loss (raw output) w.r.t. every
  // parameter. weight_decay adds the coupled L2 term; dropout (if > 0)
  // consumes masks from rng.
  Eigen::VectorXd gradients(const Eigen::MatrixXd& inputs,
                            const Eigen::MatrixXd& targets,
                            double weight_decay = 0.0, double dropout = 0.0,
                            Rng* rng = nullptr) const;

  double mean_loss(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) const;

  struct TrainHistory {
    std::vector<double> holdout_loss;   // per epoch, dropout off
    std::vector<double> learning_rate;  // effective lr per epoch
  };

  // Minibatch Adam with inverted dropout, coupled weight decay, and
  // learning-rate halving after plateau_patience epochs without held-out
  // improvement (the held-out split is the first 10% of a seeded shuffle).
  // Deterministic given config.seed.
  static NfrNet train(const std::vector<NfrExample>& data, const TrainConfig& config,
                      const NfrSpec& spec, const BSplineBasis& basis, GridPtr grid,
                      TrainHistory* history = nullptr);

  void save_checkpoint(const std::string& path) const;
  static NfrNet load_checkpoint(const std::string& path, GridPtr grid);

  // Assemble batch matrices from examples.
  void build_batch(const std::vector<NfrExample>& data, Eigen::MatrixXd& inputs,
                   Eigen::MatrixXd& targets) const;

 private:
  NfrSpec spec_;
  BSplineBasis basis_;
  GridPtr grid_;
  Eigen::MatrixXd phi_;  // M x v design matrix
  Mlp mlp_;
  Eigen::VectorXd params_;

  Eigen::Map<const Eigen::MatrixXd> gamma_view(const Eigen::VectorXd& p) const;
};

}  // namespace distcause

#endif  // DISTCAUSE_NFR_NET_HPP
