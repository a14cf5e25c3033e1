#ifndef DISTCAUSE_MLP_HPP
#define DISTCAUSE_MLP_HPP

#include <Eigen/Core>
#include <vector>

#include "distcause/rng.hpp"

namespace distcause {

// Fully connected ReLU network on a flat parameter vector. Layout, in order:
// for each layer, the (in x out) weight matrix in column-major element order,
// then the bias. Forward/backward are batched (rows are examples). The class
// itself is stateless; parameters live in caller-owned vectors.
class Mlp {
 public:
  Mlp(int input, std::vector<int> hidden, int output);

  int input_width() const { return widths_.front(); }
  int output_width() const { return widths_.back(); }
  int param_count() const { return param_count_; }
  int layer_count() const { return static_cast<int>(widths_.size()) - 1; }

  // He-initialized weights, zero biases.
  Eigen::VectorXd init_params(Rng& rng) const;

  // Scratch saved by forward for the matching backward call.
  struct Workspace {
    std::vector<Eigen::MatrixXd> inputs;   // activation fed into each layer
    std::vector<Eigen::MatrixXd> pre;      // pre-activation per hidden layer
    std::vector<Eigen::MatrixXd> masks;    // inverted-dropout masks (may be empty)
  };

  // dropout > 0 draws inverted-dropout masks on hidden activations from rng.
  // `params` may be a contiguous view into a larger parameter vector.
  Eigen::MatrixXd forward(const Eigen::Ref<const Eigen::VectorXd>& params,
                          const Eigen::MatrixXd& x, double dropout = 0.0,
                          Rng* rng = nullptr, Workspace* ws = nullptr) const;

  // Accumulates d(loss)/d(params) into grad (must be param_count long) given
  // d(loss)/d(output); returns d(loss)/d(input).
  Eigen::MatrixXd backward(const Eigen::Ref<const Eigen::VectorXd>& params,
                           const Eigen::MatrixXd& grad_out, const Workspace& ws,
                           Eigen::Ref<Eigen::VectorXd> grad) const;

 private:
  std::vector<int> widths_;
  std::vector<int> weight_offsets_;
  std::vector<int> bias_offsets_;
  int param_count_;
};

// Adam with bias correction; weight decay is applied by callers as a
// gradient term (coupled, matching common deep-learning defaults).
class Adam {
 public:
  explicit Adam(int n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);

 private:
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace distcause

#endif  // DISTCAUSE_MLP_HPP
