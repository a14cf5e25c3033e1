#include "distcause/bspline.hpp"

#include "distcause/errors.hpp"

namespace distcause {

BSplineBasis::BSplineBasis(int degree, int num_basis)
    : degree_(degree), num_basis_(num_basis) {
  if (degree < 0) throw ValidationError("spline degree must be >= 0");
  if (num_basis < degree + 1) {
    throw ValidationError("num_basis must be at least degree + 1");
  }
  // v + degree + 1 knots: degree+1 zeros, uniform interior, degree+1 ones.
  const int interior = num_basis - degree - 1;
  knots_.reserve(num_basis + degree + 1);
  for (int i = 0; i <= degree; ++i) knots_.push_back(0.0);
  for (int i = 1; i <= interior; ++i) {
    knots_.push_back(static_cast<double>(i) / (interior + 1));
  }
  for (int i = 0; i <= degree; ++i) knots_.push_back(1.0);
}

std::vector<double> BSplineBasis::evaluate(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw ValidationError("spline argument outside [0,1]");
  }
  const int v = num_basis_;
  const int p = degree_;
  // Knot span containing t: largest i with knots[i] <= t < knots[i+1],
  // except t == 1 which belongs to the last non-degenerate span.
  int span;
  if (t >= 1.0) {
    span = v - 1;
  } else {
    span = p;
    while (span < v - 1 && t >= knots_[span + 1]) ++span;
  }
  // Triangular Cox-de Boor table for the p+1 active functions.
  std::vector<double> active(p + 1, 0.0);
  active[0] = 1.0;
  std::vector<double> left(p + 1), right(p + 1);
  for (int j = 1; j <= p; ++j) {
    left[j] = t - knots_[span + 1 - j];
    right[j] = knots_[span + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom != 0.0 ? active[r] / denom : 0.0;
      active[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    active[j] = saved;
  }
  std::vector<double> out(v, 0.0);
  for (int r = 0; r <= p; ++r) out[span - p + r] = active[r];
  return out;
}

Eigen::MatrixXd design_matrix(const BSplineBasis& basis, const QuantileGrid& grid) {
  Eigen::MatrixXd phi(grid.size(), basis.num_basis());
  for (int i = 0; i < grid.size(); ++i) {
    const std::vector<double> row = basis.evaluate(grid.level(i));
    for (int j = 0; j < basis.num_basis(); ++j) phi(i, j) = row[j];
  }
  return phi;
}

}  // namespace distcause
