#ifndef DISTCAUSE_UNIT_HPP
#define DISTCAUSE_UNIT_HPP

#include <Eigen/Core>
#include <set>
#include <string>
#include <vector>

#include "distcause/quantile_space.hpp"

namespace distcause {

// One observational record: a unit's treatment label, covariates and raw
// outcome draws. Quantile curves are derived on the analysis grid downstream.
struct Unit {
  std::string id;
  std::string treatment;
  Eigen::VectorXd covariates;
  std::vector<double> observations;
};

// Sorted distinct treatment labels present in the data.
inline std::vector<std::string> treatment_labels(const std::vector<Unit>& units) {
  std::set<std::string> labels;
  for (const Unit& u : units) labels.insert(u.treatment);
  return {labels.begin(), labels.end()};
}

}  // namespace distcause

#endif  // DISTCAUSE_UNIT_HPP
