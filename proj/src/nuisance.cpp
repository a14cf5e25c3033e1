#include "distcause/nuisance.hpp"

#include <algorithm>
#include <cmath>

#include "distcause/baselines.hpp"
#include "distcause/errors.hpp"
#include "distcause/propensity.hpp"

namespace distcause {

std::string to_string(RegressorKind kind) {
  switch (kind) {
    case RegressorKind::NFR: return "nfr";
    case RegressorKind::RIDGE: return "ridge";
    case RegressorKind::PER_QUANTILE: return "per-quantile";
  }
  return "?";
}

RegressorKind regressor_kind_from_string(const std::string& name) {
  if (name == "nfr") return RegressorKind::NFR;
  if (name == "ridge") return RegressorKind::RIDGE;
  if (name == "per-quantile") return RegressorKind::PER_QUANTILE;
  throw ValidationError("unknown regressor kind: " + name);
}

namespace {

int slot_of(const std::vector<std::string>& treatments, const std::string& label) {
  const auto it = std::lower_bound(treatments.begin(), treatments.end(), label);
  if (it == treatments.end() || *it != label) {
    throw ValidationError("treatment without support");
  }
  return static_cast<int>(it - treatments.begin());
}

// Covariate z-scoring shared by the trainable fitters.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const std::vector<const Unit*>& units) {
    const Eigen::Index p = units.front()->covariates.size();
    Standardizer s;
    s.mean = Eigen::VectorXd::Zero(p);
    s.scale = Eigen::VectorXd::Ones(p);
    for (const Unit* u : units) s.mean += u->covariates;
    s.mean /= static_cast<double>(units.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(p);
    for (const Unit* u : units) var += (u->covariates - s.mean).cwiseAbs2();
    var /= static_cast<double>(units.size());
    for (Eigen::Index j = 0; j < p; ++j) {
      s.scale(j) = var(j) > 1e-12 ? std::sqrt(var(j)) : 1.0;
    }
    return s;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    return (x - mean).cwiseQuotient(scale);
  }
};

std::vector<NfrExample> build_examples(const std::vector<const Unit*>& units,
                                       const std::vector<std::string>& treatments,
                                       const GridPtr& grid, const Standardizer& std_) {
  std::vector<NfrExample> data;
  data.reserve(units.size());
  for (const Unit* u : units) {
    NfrExample ex;
    ex.treatment = slot_of(treatments, u->treatment);
    ex.covariates = std_.apply(u->covariates);
    ex.target = empirical_quantile(Sample(u->observations), grid).values();
    data.push_back(std::move(ex));
  }
  return data;
}

class NfrOutcomeModel final : public OutcomeModel {
 public:
  NfrOutcomeModel(NfrNet net, Standardizer std_) : net_(std::move(net)), std_(std::move(std_)) {}

  QuantileCurve predict(int treatment, const Eigen::VectorXd& x) const override {
    return net_.predict_m(treatment, std_.apply(x));
  }

  Eigen::MatrixXd predict_batch(int treatment, const Eigen::MatrixXd& x) const override {
    const int r = net_.spec().n_treatments;
    const int nc = net_.spec().n_covariates;
    Eigen::MatrixXd inputs = Eigen::MatrixXd::Zero(x.rows(), r + nc);
    inputs.col(treatment).setOnes();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      inputs.row(i).tail(nc) = std_.apply(x.row(i).transpose());
    }
    Eigen::MatrixXd raw = net_.forward_raw(inputs);
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      std::sort(raw.row(i).begin(), raw.row(i).end());
    }
    return raw;
  }

 private:
  NfrNet net_;
  Standardizer std_;
};

class RidgeOutcomeModel final : public OutcomeModel {
 public:
  RidgeOutcomeModel(RidgeFrParams params, BSplineBasis basis, GridPtr grid, Standardizer std_)
      : params_(std::move(params)), basis_(std::move(basis)), grid_(std::move(grid)),
        phi_(design_matrix(basis_, *grid_)), std_(std::move(std_)) {}

  QuantileCurve predict(int treatment, const Eigen::VectorXd& x) const override {
    return ridge_predict(params_, basis_, grid_, treatment, std_.apply(x));
  }

  Eigen::MatrixXd predict_batch(int treatment, const Eigen::MatrixXd& x) const override {
    Eigen::MatrixXd raw(x.rows(), grid_->size());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Eigen::VectorXd z = std_.apply(x.row(i).transpose());
      raw.row(i) = ridge_predict_raw(params_, basis_, grid_, treatment, z).transpose();
      std::sort(raw.row(i).begin(), raw.row(i).end());
    }
    return raw;
  }

 private:
  RidgeFrParams params_;
  BSplineBasis basis_;
  GridPtr grid_;
  Eigen::MatrixXd phi_;
  Standardizer std_;
};

class PerQuantileOutcomeModel final : public OutcomeModel {
 public:
  PerQuantileOutcomeModel(PerQuantileParams params, GridPtr grid, Standardizer std_)
      : params_(std::move(params)), grid_(std::move(grid)), std_(std::move(std_)) {}

  QuantileCurve predict(int treatment, const Eigen::VectorXd& x) const override {
    return per_quantile_predict(params_, grid_, treatment, std_.apply(x));
  }

 private:
  PerQuantileParams params_;
  GridPtr grid_;
  Standardizer std_;
};

class LogisticPropensityModel final : public PropensityModel {
 public:
  explicit LogisticPropensityModel(LogisticParams params) : params_(std::move(params)) {}

  Eigen::VectorXd probabilities(const Eigen::VectorXd& x) const override {
    return predict_proba(params_, x);
  }

 private:
  LogisticParams params_;
};

class OracleOutcomeModel final : public OutcomeModel {
 public:
  OracleOutcomeModel(DgpConfig config, std::vector<double> values, GridPtr grid)
      : config_(std::move(config)), treatment_values_(std::move(values)), grid_(std::move(grid)) {
    // Precompute the inverse Beta table; the oracle curve is linear in the
    // mixture weights.
    const int half = config_.n_covariates / 2;
    btab_.resize(half, grid_->size());
    for (int j = 0; j < half; ++j) {
      for (int i = 0; i < grid_->size(); ++i) {
        btab_(j, i) = inverse_beta_cdf(config_.beta_params[j].first,
                                       config_.beta_params[j].second, grid_->level(i));
      }
    }
  }

  QuantileCurve predict(int treatment, const Eigen::VectorXd& x) const override {
    const Eigen::VectorXd w = mixture_weights(config_, x);
    const double scale =
        (1.0 - config_.c) *
        (config_.expected_treatment_value + std::sqrt(treatment_values_[treatment]));
    Eigen::VectorXd values = scale * (btab_.transpose() * w);
    values.array() += config_.c;
    return QuantileCurve(grid_, {values.data(), values.data() + values.size()});
  }

 private:
  DgpConfig config_;
  std::vector<double> treatment_values_;
  GridPtr grid_;
  Eigen::MatrixXd btab_;
};

class OraclePropensityModel final : public PropensityModel {
 public:
  explicit OraclePropensityModel(DgpConfig config) : config_(std::move(config)) {}

  Eigen::VectorXd probabilities(const Eigen::VectorXd& x) const override {
    return assignment_probabilities(config_, x);
  }

 private:
  DgpConfig config_;
};

class ZeroOutcomeModel final : public OutcomeModel {
 public:
  explicit ZeroOutcomeModel(GridPtr grid) : grid_(std::move(grid)) {}

  QuantileCurve predict(int, const Eigen::VectorXd&) const override {
    return QuantileCurve(grid_, std::vector<double>(grid_->size(), 0.0));
  }

  Eigen::MatrixXd predict_batch(int, const Eigen::MatrixXd& x) const override {
    return Eigen::MatrixXd::Zero(x.rows(), grid_->size());
  }

 private:
  GridPtr grid_;
};

class UniformPropensityModel final : public PropensityModel {
 public:
  explicit UniformPropensityModel(int r) : r_(r) {}

  Eigen::VectorXd probabilities(const Eigen::VectorXd&) const override {
    return Eigen::VectorXd::Constant(r_, 1.0 / r_);
  }

 private:
  int r_;
};

}  // namespace

OutcomeFitter make_outcome_fitter(RegressorKind kind, const NuisanceConfig& config) {
  return [kind, config](const std::vector<const Unit*>& train,
                        const std::vector<std::string>& treatments, const GridPtr& grid,
                        std::uint64_t seed) -> std::unique_ptr<OutcomeModel> {
    if (train.empty()) throw ValidationError("empty training split");
    const Standardizer std_ = Standardizer::fit(train);
    const std::vector<NfrExample> data = build_examples(train, treatments, grid, std_);
    NfrSpec spec = config.nfr_template;
    spec.n_treatments = static_cast<int>(treatments.size());
    spec.n_covariates = static_cast<int>(train.front()->covariates.size());
    TrainConfig tc = config.train;
    tc.seed = seed;
    switch (kind) {
      case RegressorKind::NFR: {
        NfrNet net = NfrNet::train(data, tc, spec, config.basis, grid);
        return std::make_unique<NfrOutcomeModel>(std::move(net), std_);
      }
      case RegressorKind::RIDGE: {
        RidgeFrParams params =
            ridge_fit(data, config.basis, grid, config.ridge_lambda, spec.n_treatments);
        return std::make_unique<RidgeOutcomeModel>(std::move(params), config.basis, grid, std_);
      }
      case RegressorKind::PER_QUANTILE: {
        PerQuantileParams params = per_quantile_fit(data, grid, tc, spec, 1);
        return std::make_unique<PerQuantileOutcomeModel>(std::move(params), grid, std_);
      }
    }
    throw ValidationError("unknown regressor kind");
  };
}

PropensityFitter make_logistic_fitter(const NuisanceConfig& config) {
  return [config](const std::vector<const Unit*>& train,
                  const std::vector<std::string>& treatments,
                  std::uint64_t seed) -> std::unique_ptr<PropensityModel> {
    if (train.empty()) throw ValidationError("empty training split");
    std::vector<Eigen::VectorXd> covariates;
    std::vector<int> labels;
    covariates.reserve(train.size());
    labels.reserve(train.size());
    for (const Unit* u : train) {
      covariates.push_back(u->covariates);
      labels.push_back(slot_of(treatments, u->treatment));
    }
    TrainConfig tc = config.train;
    tc.seed = seed;
    LogisticParams params = fit_propensity(covariates, labels,
                                           static_cast<int>(treatments.size()),
                                           config.logistic_penalty, tc);
    return std::make_unique<LogisticPropensityModel>(std::move(params));
  };
}

OutcomeFitter make_oracle_outcome_fitter(const DgpConfig& config_in) {
  DgpConfig config = config_in;
  finalize(config);
  return [config](const std::vector<const Unit*>&, const std::vector<std::string>& treatments,
                  const GridPtr& grid, std::uint64_t) -> std::unique_ptr<OutcomeModel> {
    if (treatments.size() != config.treatment_values.size()) {
      throw ValidationError("oracle treatment count mismatch");
    }
    // Treatment slots are sorted labels; map them back to numeric values.
    std::vector<double> values;
    values.reserve(treatments.size());
    for (const std::string& label : treatments) {
      bool found = false;
      for (int d = 0; d < config.n_treatments(); ++d) {
        if (config.treatment_label(d) == label) {
          values.push_back(config.treatment_values[d]);
          found = true;
          break;
        }
      }
      if (!found) throw ValidationError("oracle missing treatment label: " + label);
    }
    return std::make_unique<OracleOutcomeModel>(config, std::move(values), grid);
  };
}

PropensityFitter make_oracle_propensity_fitter(const DgpConfig& config_in) {
  DgpConfig config = config_in;
  finalize(config);
  return [config](const std::vector<const Unit*>&, const std::vector<std::string>& treatments,
                  std::uint64_t) -> std::unique_ptr<PropensityModel> {
    // Slot order must agree with the sorted labels used by the estimator.
    for (int d = 0; d < config.n_treatments(); ++d) {
      if (d < static_cast<int>(treatments.size()) &&
          config.treatment_label(d) != treatments[d]) {
        throw ValidationError("oracle propensity label order mismatch");
      }
    }
    return std::make_unique<OraclePropensityModel>(config);
  };
}

OutcomeFitter make_zero_outcome_fitter() {
  return [](const std::vector<const Unit*>&, const std::vector<std::string>&,
            const GridPtr& grid, std::uint64_t) -> std::unique_ptr<OutcomeModel> {
    return std::make_unique<ZeroOutcomeModel>(grid);
  };
}

PropensityFitter make_uniform_propensity_fitter() {
  return [](const std::vector<const Unit*>&, const std::vector<std::string>& treatments,
            std::uint64_t) -> std::unique_ptr<PropensityModel> {
    return std::make_unique<UniformPropensityModel>(static_cast<int>(treatments.size()));
  };
}

}  // namespace distcause
