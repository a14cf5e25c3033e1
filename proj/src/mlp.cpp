#include "distcause/mlp.hpp"

#include <cmath>

#include "distcause/errors.hpp"

namespace distcause {

namespace {

Eigen::Map<const Eigen::MatrixXd> weight_view(
    const Eigen::Ref<const Eigen::VectorXd>& params, int offset, int in, int out) {
  return Eigen::Map<const Eigen::MatrixXd>(params.data() + offset, in, out);
}

Eigen::Map<const Eigen::VectorXd> bias_view(
    const Eigen::Ref<const Eigen::VectorXd>& params, int offset, int out) {
  return Eigen::Map<const Eigen::VectorXd>(params.data() + offset, out);
}

}  // namespace

Mlp::Mlp(int input, std::vector<int> hidden, int output) {
  if (input < 1 || output < 1) throw ValidationError("mlp widths must be positive");
  widths_.push_back(input);
  for (int h : hidden) {
    if (h < 1) throw ValidationError("mlp widths must be positive");
    widths_.push_back(h);
  }
  widths_.push_back(output);
  int offset = 0;
  for (int l = 0; l + 1 < static_cast<int>(widths_.size()); ++l) {
    weight_offsets_.push_back(offset);
    offset += widths_[l] * widths_[l + 1];
    bias_offsets_.push_back(offset);
    offset += widths_[l + 1];
  }
  param_count_ = offset;
}

Eigen::VectorXd Mlp::init_params(Rng& rng) const {
  Eigen::VectorXd params = Eigen::VectorXd::Zero(param_count_);
  for (int l = 0; l < layer_count(); ++l) {
    const int in = widths_[l];
    const int out = widths_[l + 1];
    const double scale = std::sqrt(2.0 / in);
    double* w = params.data() + weight_offsets_[l];
    for (int i = 0; i < in * out; ++i) w[i] = scale * rng.normal();
  }
  return params;
}

Eigen::MatrixXd Mlp::forward(const Eigen::Ref<const Eigen::VectorXd>& params,
                             const Eigen::MatrixXd& x, double dropout, Rng* rng,
                             Workspace* ws) const {
  if (x.cols() != widths_.front()) throw ValidationError("mlp input width mismatch");
  if (params.size() != param_count_) throw ValidationError("mlp parameter size mismatch");
  const bool drop = dropout > 0.0;
  if (drop && rng == nullptr) throw ValidationError("dropout requires an rng");
  if (ws) {
    ws->inputs.clear();
    ws->pre.clear();
    ws->masks.clear();
  }
  Eigen::MatrixXd act = x;
  const double keep = 1.0 - dropout;
  for (int l = 0; l < layer_count(); ++l) {
    if (ws) ws->inputs.push_back(act);
    const auto w = weight_view(params, weight_offsets_[l], widths_[l], widths_[l + 1]);
    const auto b = bias_view(params, bias_offsets_[l], widths_[l + 1]);
    Eigen::MatrixXd z = act * w;
    z.rowwise() += b.transpose();
    if (l + 1 == layer_count()) {
      act = std::move(z);  // linear output layer
    } else {
      if (ws) ws->pre.push_back(z);
      Eigen::MatrixXd h = z.cwiseMax(0.0);
      if (drop) {
        Eigen::MatrixXd mask(h.rows(), h.cols());
        for (Eigen::Index i = 0; i < mask.rows(); ++i) {
          for (Eigen::Index j = 0; j < mask.cols(); ++j) {
            mask(i, j) = rng->uniform() < keep ? 1.0 / keep : 0.0;
          }
        }
        h.array() *= mask.array();
        if (ws) ws->masks.push_back(std::move(mask));
      }
      act = std::move(h);
    }
  }
  return act;
}

Eigen::MatrixXd Mlp::backward(const Eigen::Ref<const Eigen::VectorXd>& params,
                              const Eigen::MatrixXd& grad_out, const Workspace& ws,
                              Eigen::Ref<Eigen::VectorXd> grad) const {
  if (grad.size() != param_count_) throw ValidationError("mlp gradient size mismatch");
  Eigen::MatrixXd g = grad_out;
  for (int l = layer_count() - 1; l >= 0; --l) {
    const int in = widths_[l];
    const int out = widths_[l + 1];
    const Eigen::MatrixXd& input = ws.inputs[l];
    Eigen::Map<Eigen::MatrixXd> dw(grad.data() + weight_offsets_[l], in, out);
    Eigen::Map<Eigen::VectorXd> db(grad.data() + bias_offsets_[l], out);
    dw.noalias() += input.transpose() * g;
    db += g.colwise().sum().transpose();
    if (l > 0) {
      const auto w = weight_view(params, weight_offsets_[l], in, out);
      Eigen::MatrixXd gp = g * w.transpose();
      if (!ws.masks.empty()) gp.array() *= ws.masks[l - 1].array();
      gp.array() *= (ws.pre[l - 1].array() > 0.0).cast<double>();
      g = std::move(gp);
    }
  }
  return g;
}

Adam::Adam(int n, double beta1, double beta2, double eps)
    : m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)),
      beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  params.array() -=
      lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

}  // namespace distcause
