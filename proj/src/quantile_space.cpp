#include "distcause/quantile_space.hpp"

#include <algorithm>
#include <cmath>

#include "distcause/errors.hpp"

namespace distcause {

QuantileGrid::QuantileGrid(std::vector<double> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw ValidationError("quantile grid must be non-empty");
  if (!(levels_.front() > 0.0) || !(levels_.back() < 1.0)) {
    throw ValidationError("quantile levels must lie strictly inside (0,1)");
  }
  for (std::size_t i = 1; i < levels_.size(); ++i) {
    if (!(levels_[i] > levels_[i - 1])) {
      throw ValidationError("quantile levels must be strictly increasing");
    }
  }
  const int m = static_cast<int>(levels_.size());
  full_weights_.assign(m, 0.0);
  trap_weights_.assign(m, 0.0);
  if (m == 1) {
    full_weights_[0] = 1.0;
    trap_weights_[0] = 0.0;
  } else {
    for (int i = 0; i < m; ++i) {
      const double left = (i == 0) ? 0.0 : 0.5 * (levels_[i] - levels_[i - 1]);
      const double right = (i == m - 1) ? 0.0 : 0.5 * (levels_[i + 1] - levels_[i]);
      trap_weights_[i] = left + right;
      full_weights_[i] = trap_weights_[i];
    }
    // Constant-tail extension over [0, tau_1] and [tau_M, 1].
    full_weights_[0] += levels_.front();
    full_weights_[m - 1] += 1.0 - levels_.back();
  }
}

QuantileGrid QuantileGrid::midpoint(int m) {
  if (m < 1) throw ValidationError("grid size must be >= 1");
  std::vector<double> levels(m);
  for (int i = 0; i < m; ++i) levels[i] = (i + 0.5) / m;
  return QuantileGrid(std::move(levels));
}

QuantileCurve::QuantileCurve(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw ValidationError("curve requires a grid");
  if (static_cast<int>(values_.size()) != grid_->size()) {
    throw ValidationError("curve length does not match grid length");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw ValidationError("non-finite value");
    if (i > 0 && values_[i] < values_[i - 1]) {
      throw ValidationError("quantile curve values must be non-decreasing");
    }
  }
}

double interpolate_on_grid(const std::vector<double>& levels,
                           const std::vector<double>& values, double tau) {
  if (tau <= levels.front()) return values.front();
  if (tau >= levels.back()) return values.back();
  const auto it = std::upper_bound(levels.begin(), levels.end(), tau);
  const std::size_t hi = static_cast<std::size_t>(it - levels.begin());
  const std::size_t lo = hi - 1;
  const double t = (tau - levels[lo]) / (levels[hi] - levels[lo]);
  return values[lo] + t * (values[hi] - values[lo]);
}

double QuantileCurve::value_at(double tau) const {
  return interpolate_on_grid(grid_->levels(), values_, tau);
}

double EffectCurve::value_at(double tau) const {
  return interpolate_on_grid(grid->levels(), values, tau);
}

Sample::Sample(std::vector<double> observations) : obs_(std::move(observations)) {
  if (obs_.empty()) throw ValidationError("empty sample");
  for (double v : obs_) {
    if (!std::isfinite(v)) throw ValidationError("non-finite value");
  }
}

QuantileCurve empirical_quantile(const Sample& sample, const GridPtr& grid) {
  if (!grid) throw ValidationError("empirical_quantile requires a grid");
  std::vector<double> sorted = sample.observations();
  std::sort(sorted.begin(), sorted.end());
  const int n = static_cast<int>(sorted.size());
  std::vector<double> values(grid->size());
  for (int i = 0; i < grid->size(); ++i) {
    int k = static_cast<int>(std::ceil(n * grid->level(i)));
    k = std::clamp(k, 1, n);
    values[i] = sorted[k - 1];
  }
  return QuantileCurve(grid, std::move(values));
}

double wasserstein2(const QuantileCurve& a, const QuantileCurve& b) {
  if (!same_grid(a.grid(), b.grid())) throw ValidationError("grid mismatch");
  const std::vector<double>& w = a.grid()->full_weights();
  double acc = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    acc += w[i] * d * d;
  }
  return std::sqrt(acc);
}

QuantileCurve barycenter(const std::vector<QuantileCurve>& curves) {
  if (curves.empty()) throw ValidationError("barycenter of empty collection");
  const GridPtr& grid = curves.front().grid();
  std::vector<double> mean(grid->size(), 0.0);
  for (const QuantileCurve& c : curves) {
    if (!same_grid(c.grid(), grid)) throw ValidationError("grid mismatch");
    for (int i = 0; i < grid->size(); ++i) mean[i] += c.values()[i];
  }
  const double k = static_cast<double>(curves.size());
  for (double& v : mean) v /= k;
  return QuantileCurve(grid, std::move(mean));
}

EffectCurve effect_map(const QuantileCurve& a, const QuantileCurve& b) {
  if (!same_grid(a.grid(), b.grid())) throw ValidationError("grid mismatch");
  std::vector<double> diff(a.size());
  for (int i = 0; i < a.size(); ++i) diff[i] = a.values()[i] - b.values()[i];
  return EffectCurve{a.grid(), std::move(diff)};
}

Sample inverse_transform_sample(const QuantileCurve& curve,
                                const std::vector<double>& uniforms) {
  std::vector<double> obs;
  obs.reserve(uniforms.size());
  for (double u : uniforms) {
    if (!(u > 0.0 && u < 1.0)) {
      throw ValidationError("uniform outside (0,1)");
    }
    obs.push_back(curve.value_at(u));
  }
  return Sample(std::move(obs));
}

QuantileCurve rearrange_monotone(std::vector<double> values, const GridPtr& grid) {
  if (!grid || static_cast<int>(values.size()) != grid->size()) {
    throw ValidationError("value count does not match grid length");
  }
  std::sort(values.begin(), values.end());
  return QuantileCurve(grid, std::move(values));
}

}  // namespace distcause
