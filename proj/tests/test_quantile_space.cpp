#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "distcause/errors.hpp"
#include "distcause/quantile_space.hpp"
#include "distcause/rng.hpp"
#include "oracles.hpp"

using namespace distcause;

namespace {

GridPtr grid_from(std::vector<double> levels) {
  return std::make_shared<const QuantileGrid>(QuantileGrid(std::move(levels)));
}

QuantileCurve random_curve(const GridPtr& grid, Rng& rng) {
  std::vector<double> values(grid->size());
  for (double& v : values) v = rng.uniform(-3.0, 3.0);
  return rearrange_monotone(std::move(values), grid);
}

QuantileCurve gaussian_empirical_curve(double mean, double sd, int draws,
                                       const GridPtr& grid, Rng& rng) {
  std::vector<double> obs(draws);
  for (double& v : obs) v = rng.normal(mean, sd);
  return empirical_quantile(Sample(std::move(obs)), grid);
}

}  // namespace

TEST_CASE("quantile grid invariants") {
  const GridPtr grid = make_midpoint_grid(100);
  CHECK(grid->size() == 100);
  CHECK(grid->level(0) == doctest::Approx(0.005));
  CHECK(grid->level(99) == doctest::Approx(0.995));
  double full = 0.0, trap = 0.0;
  for (int i = 0; i < 100; ++i) {
    full += grid->full_weights()[i];
    trap += grid->trapezoid_weights()[i];
  }
  CHECK(full == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(trap == doctest::Approx(0.99).epsilon(1e-12));

  CHECK_THROWS_AS(QuantileGrid({0.0, 0.5}), ValidationError);
  CHECK_THROWS_AS(QuantileGrid({0.5, 0.5}), ValidationError);
  CHECK_THROWS_AS(QuantileGrid({0.5, 1.0}), ValidationError);
}

TEST_CASE("curve construction enforces monotonicity and finiteness") {
  const GridPtr grid = grid_from({0.25, 0.5, 0.75});
  CHECK_THROWS_AS(QuantileCurve(grid, {1.0, 0.5, 2.0}), ValidationError);
  CHECK_THROWS_AS(QuantileCurve(grid, {1.0, 2.0}), ValidationError);
  CHECK_THROWS_AS(QuantileCurve(grid, {1.0, 2.0, std::nan("")}), ValidationError);
}

TEST_CASE("empirical quantile: order statistics of 3 points") {
  const GridPtr grid = grid_from({0.25, 0.5, 0.75});
  const QuantileCurve curve = empirical_quantile(Sample({2.0, 0.0, 1.0}), grid);
  CHECK(curve.values() == std::vector<double>{0.0, 1.0, 2.0});
}

TEST_CASE("empirical quantile: degenerate single observation") {
  const GridPtr grid = make_midpoint_grid(10);
  const QuantileCurve curve = empirical_quantile(Sample({5.0}), grid);
  for (double v : curve.values()) CHECK(v == 5.0);
}

TEST_CASE("empirical quantile: errors") {
  CHECK_THROWS_WITH_AS(Sample({}), "empty sample", ValidationError);
  CHECK_THROWS_WITH_AS(Sample({1.0, std::nan("")}), "non-finite value", ValidationError);
}

TEST_CASE("empirical quantile: uniform law of large numbers") {
  const GridPtr grid = make_midpoint_grid(100);
  Rng rng(42);
  std::vector<double> obs(100000);
  for (double& v : obs) v = rng.uniform_open();
  const QuantileCurve curve = empirical_quantile(Sample(std::move(obs)), grid);
  for (int i = 0; i < grid->size(); ++i) {
    CHECK(std::abs(curve.values()[i] - grid->level(i)) <= 0.02);
  }
}

TEST_CASE("empirical quantile: scale equivariance") {
  const GridPtr grid = make_midpoint_grid(37);
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> obs(53);
    for (double& v : obs) v = rng.normal(0.0, 2.0);
    const double c = rng.uniform(0.1, 5.0);
    std::vector<double> scaled(obs);
    for (double& v : scaled) v *= c;
    const QuantileCurve q = empirical_quantile(Sample(obs), grid);
    const QuantileCurve qs = empirical_quantile(Sample(scaled), grid);
    for (int i = 0; i < grid->size(); ++i) {
      CHECK(qs.values()[i] == doctest::Approx(c * q.values()[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("wasserstein2: identity and point masses") {
  const GridPtr grid = make_midpoint_grid(50);
  Rng rng(3);
  const QuantileCurve a = random_curve(grid, rng);
  CHECK(wasserstein2(a, a) == 0.0);

  const QuantileCurve p3(grid, std::vector<double>(grid->size(), 3.0));
  const QuantileCurve p7(grid, std::vector<double>(grid->size(), 7.0));
  CHECK(wasserstein2(p3, p7) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("wasserstein2: grid mismatch") {
  const QuantileCurve a(make_midpoint_grid(10), std::vector<double>(10, 1.0));
  const QuantileCurve b(make_midpoint_grid(20), std::vector<double>(20, 1.0));
  CHECK_THROWS_WITH_AS(wasserstein2(a, b), "grid mismatch", ValidationError);
}

TEST_CASE("wasserstein2: gap between equal-variance gaussians") {
  const GridPtr grid = make_midpoint_grid(1000);
  Rng rng(11);
  const QuantileCurve a = gaussian_empirical_curve(0.0, 1.0, 1000000, grid, rng);
  const QuantileCurve b = gaussian_empirical_curve(2.0, 1.0, 1000000, grid, rng);
  CHECK(std::abs(wasserstein2(a, b) - 2.0) <= 0.05);
}

TEST_CASE("wasserstein2: metric axioms over randomized curves") {
  const GridPtr grid = make_midpoint_grid(40);
  Rng rng(99);
  for (int rep = 0; rep < 1000; ++rep) {
    const QuantileCurve a = random_curve(grid, rng);
    const QuantileCurve b = random_curve(grid, rng);
    const QuantileCurve c = random_curve(grid, rng);
    const double ab = wasserstein2(a, b);
    const double ba = wasserstein2(b, a);
    const double ac = wasserstein2(a, c);
    const double cb = wasserstein2(c, b);
    REQUIRE(ab >= 0.0);
    REQUIRE(ab == ba);
    REQUIRE(ab <= ac + cb + 1e-9);
    if (a.values() == b.values()) {
      REQUIRE(ab == 0.0);
    } else {
      REQUIRE(ab > 0.0);
    }
  }
}

TEST_CASE("barycenter: three gaussians match the closed form") {
  // Equal-variance normal distributions with means 1, 3, 4: the barycenter
  // is normal with the averaged mean 8/3.
  const GridPtr grid = make_midpoint_grid(100);
  Rng rng(17);
  std::vector<QuantileCurve> curves;
  for (double mean : {1.0, 3.0, 4.0}) {
    curves.push_back(gaussian_empirical_curve(mean, 1.0, 10000, grid, rng));
  }
  const QuantileCurve bc = barycenter(curves);
  CHECK(std::abs(bc.value_at(0.5) - 8.0 / 3.0) <= 0.1);
}

TEST_CASE("barycenter: identical curves are returned exactly") {
  const GridPtr grid = grid_from({0.2, 0.5, 0.8});
  const QuantileCurve c(grid, {0.5, 1.25, 2.0});
  const QuantileCurve bc = barycenter({c, c, c});
  CHECK(bc.values() == c.values());
}

TEST_CASE("barycenter: beats random perturbations in summed squared W2") {
  const GridPtr grid = make_midpoint_grid(30);
  Rng rng(23);
  std::vector<QuantileCurve> curves;
  for (int i = 0; i < 10; ++i) curves.push_back(random_curve(grid, rng));
  const QuantileCurve bc = barycenter(curves);
  auto objective = [&](const QuantileCurve& candidate) {
    double acc = 0.0;
    for (const QuantileCurve& c : curves) {
      const double d = wasserstein2(candidate, c);
      acc += d * d;
    }
    return acc;
  };
  const double best = objective(bc);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> values = bc.values();
    for (double& v : values) v += rng.normal(0.0, 0.05);
    const QuantileCurve perturbed = rearrange_monotone(std::move(values), grid);
    if (perturbed.values() == bc.values()) continue;
    CHECK(objective(perturbed) > best);
  }
  CHECK_THROWS_AS(barycenter({}), ValidationError);
}

TEST_CASE("effect map: basic identities") {
  const GridPtr grid = make_midpoint_grid(25);
  Rng rng(31);
  const QuantileCurve a = random_curve(grid, rng);
  const EffectCurve zero = effect_map(a, a);
  for (double v : zero.values) CHECK(v == 0.0);

  std::vector<double> shifted = a.values();
  for (double& v : shifted) v += 1.5;
  const QuantileCurve b(grid, std::move(shifted));
  const EffectCurve diff = effect_map(b, a);
  for (double v : diff.values) CHECK(v == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("effect map: antisymmetry") {
  const GridPtr grid = make_midpoint_grid(25);
  Rng rng(37);
  for (int rep = 0; rep < 50; ++rep) {
    const QuantileCurve a = random_curve(grid, rng);
    const QuantileCurve b = random_curve(grid, rng);
    const EffectCurve ab = effect_map(a, b);
    const EffectCurve ba = effect_map(b, a);
    for (int i = 0; i < grid->size(); ++i) {
      CHECK(ab.values[i] == -ba.values[i]);
    }
  }
}

TEST_CASE("inverse transform sampling: basics") {
  const GridPtr grid = make_midpoint_grid(100);
  const QuantileCurve constant(grid, std::vector<double>(100, 5.0));
  const Sample s = inverse_transform_sample(constant, {0.1, 0.5, 0.9});
  for (double v : s.observations()) CHECK(v == 5.0);

  const QuantileCurve identity(grid, grid->levels());
  const Sample t = inverse_transform_sample(identity, {0.1, 0.9});
  CHECK(t.observations()[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(t.observations()[1] == doctest::Approx(0.9).epsilon(1e-12));

  CHECK_THROWS_AS(inverse_transform_sample(identity, {0.0}), ValidationError);
  CHECK_THROWS_AS(inverse_transform_sample(identity, {1.0}), ValidationError);
}

TEST_CASE("inverse transform sampling: standard normal mean") {
  const GridPtr grid = make_midpoint_grid(1000);
  std::vector<double> values(grid->size());
  for (int i = 0; i < grid->size(); ++i) values[i] = oracles::normal_quantile(grid->level(i));
  const QuantileCurve curve(grid, std::move(values));
  Rng rng(41);
  std::vector<double> uniforms(100000);
  for (double& u : uniforms) u = rng.uniform_open();
  const Sample s = inverse_transform_sample(curve, uniforms);
  double mean = 0.0;
  for (double v : s.observations()) mean += v;
  mean /= s.size();
  CHECK(std::abs(mean) <= 0.02);
}

TEST_CASE("round trip: sampling then re-estimating recovers the curve") {
  const GridPtr grid = make_midpoint_grid(100);
  Rng rng(43);
  const QuantileCurve original = random_curve(grid, rng);
  std::vector<double> uniforms(200000);
  for (double& u : uniforms) u = rng.uniform_open();
  const Sample s = inverse_transform_sample(original, uniforms);
  const QuantileCurve recovered = empirical_quantile(s, grid);
  double max_slope = 0.0;
  for (int i = 1; i < grid->size(); ++i) {
    max_slope = std::max(max_slope, (original.values()[i] - original.values()[i - 1]) /
                                        (grid->level(i) - grid->level(i - 1)));
  }
  const double tolerance = 0.01 * max_slope + 1e-9;  // max grid spacing x max slope
  for (int i = 0; i < grid->size(); ++i) {
    CHECK(std::abs(recovered.values()[i] - original.values()[i]) <= tolerance);
  }
}

TEST_CASE("monotone rearrangement: basics") {
  const GridPtr grid = grid_from({0.25, 0.5, 0.75});
  CHECK(rearrange_monotone({3.0, 1.0, 2.0}, grid).values() ==
        std::vector<double>{1.0, 2.0, 3.0});
  CHECK(rearrange_monotone({1.0, 2.0, 3.0}, grid).values() ==
        std::vector<double>{1.0, 2.0, 3.0});
  CHECK_THROWS_AS(rearrange_monotone({1.0, 2.0}, grid), ValidationError);
}

TEST_CASE("monotone rearrangement: never increases W2 to a valid target") {
  const GridPtr grid = make_midpoint_grid(20);
  Rng rng(47);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> raw(grid->size());
    for (double& v : raw) v = rng.uniform(-2.0, 2.0);
    const QuantileCurve target = random_curve(grid, rng);
    const QuantileCurve rearranged = rearrange_monotone(raw, grid);
    // W2 from raw values computed directly with the same quadrature weights.
    double raw_dist = 0.0;
    for (int i = 0; i < grid->size(); ++i) {
      const double d = raw[i] - target.values()[i];
      raw_dist += grid->full_weights()[i] * d * d;
    }
    raw_dist = std::sqrt(raw_dist);
    CHECK(wasserstein2(rearranged, target) <= raw_dist + 1e-12);
  }
}
