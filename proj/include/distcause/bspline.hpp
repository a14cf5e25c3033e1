#ifndef DISTCAUSE_BSPLINE_HPP
#define DISTCAUSE_BSPLINE_HPP

#include <Eigen/Core>
#include <vector>

#include "distcause/quantile_space.hpp"

namespace distcause {

// B-spline basis on [0,1] with clamped (repeated) end knots and uniform
// interior knots. Defaults: cubic, 10 basis functions.
class BSplineBasis {
 public:
  BSplineBasis(int degree, int num_basis);

  int degree() const { return degree_; }
  int num_basis() const { return num_basis_; }
  const std::vector<double>& knots() const { return knots_; }

  // (phi_1(t), ..., phi_v(t)) by the Cox-de Boor recursion. Non-negative,
  // sums to 1, at most degree+1 nonzero entries.
  std::vector<double> evaluate(double t) const;

 private:
  int degree_;
  int num_basis_;
  std::vector<double> knots_;
};

// Row i holds evaluate(basis, tau_i); precomputed phi table shared by the
// regression models.
Eigen::MatrixXd design_matrix(const BSplineBasis& basis, const QuantileGrid& grid);

}  // namespace distcause

#endif  // DISTCAUSE_BSPLINE_HPP
