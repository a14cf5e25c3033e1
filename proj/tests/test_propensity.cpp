#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "distcause/errors.hpp"
#include "distcause/propensity.hpp"
#include "distcause/rng.hpp"
#include "distcause/synthetic.hpp"
#include "oracles.hpp"

using namespace distcause;

TEST_CASE("propensity fit: intercept-only recovers class frequencies") {
  std::vector<Eigen::VectorXd> x;
  std::vector<int> y;
  for (int i = 0; i < 300; ++i) {
    x.push_back(Eigen::VectorXd::Zero(2));
    y.push_back(i % 3);
  }
  const LogisticParams params = fit_propensity(x, y, 3, 1e-4, TrainConfig{});
  const Eigen::VectorXd probs = predict_proba(params, Eigen::VectorXd::Zero(2));
  for (int c = 0; c < 3; ++c) CHECK(probs(c) == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
}

TEST_CASE("propensity fit: separable classes reach near-perfect AUC") {
  Rng rng(5);
  std::vector<Eigen::VectorXd> x;
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    const int label = i % 2;
    Eigen::VectorXd xi(2);
    xi << rng.normal() + (label ? 3.0 : -3.0), rng.normal();
    x.push_back(xi);
    y.push_back(label);
  }
  const LogisticParams params = fit_propensity(x, y, 2, 0.1, TrainConfig{});
  std::vector<double> scores;
  for (const auto& xi : x) scores.push_back(predict_proba(params, xi)(1));
  CHECK(oracles::auc(scores, y) > 0.99);
}

TEST_CASE("propensity fit: weights shrink monotonically along the penalty path") {
  Rng rng(6);
  std::vector<Eigen::VectorXd> x;
  std::vector<int> y;
  for (int i = 0; i < 400; ++i) {
    Eigen::VectorXd xi(3);
    xi << rng.normal(), rng.normal(), rng.normal();
    const double score = 1.5 * xi(0) - 0.8 * xi(2);
    y.push_back(rng.uniform() < 1.0 / (1.0 + std::exp(-score)) ? 1 : 0);
    x.push_back(xi);
  }
  double previous = std::numeric_limits<double>::infinity();
  for (double penalty : {0.01, 0.1, 1.0, 10.0}) {
    const LogisticParams params = fit_propensity(x, y, 2, penalty, TrainConfig{});
    const double norm = params.weights.norm();
    CHECK(norm < previous);
    previous = norm;
  }
}

TEST_CASE("propensity fit: single class is degenerate") {
  std::vector<Eigen::VectorXd> x(10, Eigen::VectorXd::Zero(2));
  std::vector<int> y(10, 1);
  CHECK_THROWS_WITH_AS(fit_propensity(x, y, 3, 0.1, TrainConfig{}),
                       "degenerate treatment column", ValidationError);
}

TEST_CASE("predict_proba: identities and softmax oracle") {
  LogisticParams zero;
  zero.weights = Eigen::MatrixXd::Zero(4, 3);
  zero.intercepts = Eigen::VectorXd::Zero(4);
  const Eigen::VectorXd uniform = predict_proba(zero, Eigen::Vector3d(1.0, -2.0, 0.5));
  for (int c = 0; c < 4; ++c) CHECK(uniform(c) == doctest::Approx(0.25).epsilon(1e-12));

  LogisticParams dominant = zero;
  dominant.intercepts(2) = 50.0;
  CHECK(predict_proba(dominant, Eigen::Vector3d::Zero())(2) >= 1.0 - 1e-9);

  Rng rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    LogisticParams params;
    params.weights = Eigen::MatrixXd::NullaryExpr(3, 2, [&](Eigen::Index) { return rng.normal(); });
    params.intercepts = Eigen::VectorXd::NullaryExpr(3, [&](Eigen::Index) { return rng.normal(); });
    const Eigen::Vector2d xi(rng.normal(), rng.normal());
    const Eigen::VectorXd probs = predict_proba(params, xi);
    std::vector<double> scores(3);
    for (int c = 0; c < 3; ++c) {
      scores[c] = params.weights.row(c).dot(xi) + params.intercepts(c);
    }
    const std::vector<double> expected = oracles::softmax(scores);
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
      CHECK(probs(c) == doctest::Approx(expected[c]).epsilon(1e-10));
      CHECK(probs(c) > 0.0);
      total += probs(c);
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("predict_proba: translation invariance of class scores") {
  Rng rng(10);
  LogisticParams params;
  params.weights = Eigen::MatrixXd::NullaryExpr(5, 4, [&](Eigen::Index) { return rng.normal(); });
  params.intercepts = Eigen::VectorXd::NullaryExpr(5, [&](Eigen::Index) { return rng.normal(); });
  LogisticParams shifted = params;
  shifted.intercepts.array() += 17.5;
  const Eigen::VectorXd xi = Eigen::VectorXd::NullaryExpr(4, [&](Eigen::Index) { return rng.normal(); });
  const Eigen::VectorXd a = predict_proba(params, xi);
  const Eigen::VectorXd b = predict_proba(shifted, xi);
  for (int c = 0; c < 5; ++c) CHECK(std::abs(a(c) - b(c)) <= 1e-12);

  // Reference-class normalization is another pure translation.
  const Eigen::VectorXd c = predict_proba(params.normalized_to_reference(), xi);
  for (int i = 0; i < 5; ++i) CHECK(a(i) == doctest::Approx(c(i)).epsilon(1e-12));
}

TEST_CASE("clip: identities") {
  const std::vector<double> same = clip_probabilities(std::vector<double>{0.5, 0.5}, 0.01);
  CHECK(same == std::vector<double>{0.5, 0.5});
  const std::vector<double> clipped = clip_probabilities(std::vector<double>{1.0, 0.0}, 0.01);
  CHECK(clipped[0] == doctest::Approx(0.99).epsilon(1e-15));
  CHECK(clipped[1] == doctest::Approx(0.01).epsilon(1e-15));
  CHECK_THROWS_AS(clip_probabilities(std::vector<double>{0.5, 0.5}, 0.0), ValidationError);
  CHECK_THROWS_AS(clip_probabilities(std::vector<double>{0.5, 0.5}, 0.5), ValidationError);
}

TEST_CASE("clip: bounds over random probability vectors") {
  Rng rng(12);
  const double eps = 0.01;
  for (int rep = 0; rep < 1000; ++rep) {
    const int r = 2 + static_cast<int>(rng.below(5));
    std::vector<double> p(r);
    double total = 0.0;
    for (double& v : p) {
      v = -std::log(rng.uniform_open());
      total += v;
    }
    for (double& v : p) v /= total;
    const std::vector<double> out = clip_probabilities(p, eps);
    const double lower = eps / (1.0 + (r - 1) * (1.0 - 2.0 * eps));
    double sum = 0.0;
    for (double v : out) {
      REQUIRE(v >= lower - 1e-15);
      REQUIRE(v <= 1.0 - eps + 1e-15);
      sum += v;
    }
    REQUIRE(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("propensity fit: recovers dgp assignment probabilities") {
  DgpConfig config = default_dgp_config();
  config.n_units = 50000;
  config.obs_per_unit = 1;
  config.seed = 77;
  const SyntheticDataset data = generate(config);
  std::vector<Eigen::VectorXd> x;
  std::vector<int> y;
  for (const Unit& u : data.units) {
    x.push_back(u.covariates);
    for (int d = 0; d < config.n_treatments(); ++d) {
      if (config.treatment_label(d) == u.treatment) y.push_back(d);
    }
  }
  const LogisticParams params = fit_propensity(x, y, 5, 1e-4, TrainConfig{});
  Rng rng(78);
  double abs_err = 0.0;
  const int held_out = 2000;
  for (int i = 0; i < held_out; ++i) {
    const Eigen::VectorXd xi = draw_covariates(config, rng);
    const Eigen::VectorXd fitted = predict_proba(params, xi);
    const Eigen::VectorXd truth = assignment_probabilities(config, xi);
    for (int c = 0; c < 5; ++c) abs_err += std::abs(fitted(c) - truth(c));
  }
  abs_err /= held_out * 5;
  CHECK(abs_err <= 0.02);
}

TEST_CASE("propensity checkpoint round trip") {
  Rng rng(15);
  LogisticParams params;
  params.weights = Eigen::MatrixXd::NullaryExpr(3, 4, [&](Eigen::Index) { return rng.normal(); });
  params.intercepts = Eigen::VectorXd::NullaryExpr(3, [&](Eigen::Index) { return rng.normal(); });
  const std::string path = "logistic_checkpoint_test.txt";
  params.save_checkpoint(path);
  const LogisticParams loaded = LogisticParams::load_checkpoint(path);
  REQUIRE(loaded.weights == params.weights);
  REQUIRE(loaded.intercepts == params.intercepts);
  std::remove(path.c_str());
}
