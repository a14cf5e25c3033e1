#ifndef DISTCAUSE_QUANTILE_SPACE_HPP
#define DISTCAUSE_QUANTILE_SPACE_HPP

#include <memory>
#include <vector>

namespace distcause {

// Fixed set of quantile levels in (0,1), strictly increasing. Every curve in
// one analysis shares one grid; binary operations reject mismatched grids.
class QuantileGrid {
 public:
  explicit QuantileGrid(std::vector<double> levels);

  // Midpoint levels (i - 0.5)/m, the default discretization.
  static QuantileGrid midpoint(int m);

  int size() const { return static_cast<int>(levels_.size()); }
  double level(int i) const { return levels_[i]; }
  const std::vector<double>& levels() const { return levels_; }

  // Quadrature weights for integrals over (0,1) with the integrand held
  // constant outside [tau_1, tau_M]; sum to 1. Used by the W2 metric.
  const std::vector<double>& full_weights() const { return full_weights_; }

  // Pure trapezoid weights on [tau_1, tau_M]; sum to tau_M - tau_1. Used by
  // the training loss.
  const std::vector<double>& trapezoid_weights() const { return trap_weights_; }

  bool operator==(const QuantileGrid& other) const {
    return levels_ == other.levels_;
  }

 private:
  std::vector<double> levels_;
  std::vector<double> full_weights_;
  std::vector<double> trap_weights_;
};

using GridPtr = std::shared_ptr<const QuantileGrid>;

inline GridPtr make_midpoint_grid(int m) {
  return std::make_shared<const QuantileGrid>(QuantileGrid::midpoint(m));
}

inline bool same_grid(const GridPtr& a, const GridPtr& b) {
  return a == b || (a && b && *a == *b);
}

// Discretized left-continuous non-decreasing quantile function.
class QuantileCurve {
 public:
  QuantileCurve(GridPtr grid, std::vector<double> values);

  const GridPtr& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }

  // Linear interpolation between grid levels, constant beyond the ends.
  double value_at(double tau) const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

// Pointwise difference of two quantile curves. Not monotone in general, so
// it is a distinct type from QuantileCurve.
struct EffectCurve {
  GridPtr grid;
  std::vector<double> values;

  double value_at(double tau) const;
};

// Raw outcome draws for one unit.
class Sample {
 public:
  explicit Sample(std::vector<double> observations);

  const std::vector<double>& observations() const { return obs_; }
  int size() const { return static_cast<int>(obs_.size()); }

 private:
  std::vector<double> obs_;
};

// Type-1 (left-continuous) empirical quantile: value at level tau is the
// ceil(n*tau)-th order statistic.
QuantileCurve empirical_quantile(const Sample& sample, const GridPtr& grid);

// sqrt of the quadrature approximation of the squared L2 distance between
// quantile functions on (0,1), curves held constant outside [tau_1, tau_M].
double wasserstein2(const QuantileCurve& a, const QuantileCurve& b);

// Pointwise mean of quantile curves; the quantile function of the
// Wasserstein barycenter of the represented distributions.
QuantileCurve barycenter(const std::vector<QuantileCurve>& curves);

EffectCurve effect_map(const QuantileCurve& a, const QuantileCurve& b);

// Evaluate the curve at each uniform level (linear interpolation, clamped at
// the grid ends); one observation per uniform. Uniforms must lie in (0,1).
Sample inverse_transform_sample(const QuantileCurve& curve,
                                const std::vector<double>& uniforms);

// Monotone rearrangement: sort ascending. Projects arbitrary values onto the
// space of quantile curves.
QuantileCurve rearrange_monotone(std::vector<double> values, const GridPtr& grid);

// Linear interpolation helper shared by curve types.
double interpolate_on_grid(const std::vector<double>& levels,
                           const std::vector<double>& values, double tau);

}  // namespace distcause

#endif  // DISTCAUSE_QUANTILE_SPACE_HPP
