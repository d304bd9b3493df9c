// Standardization (G-formula) estimators: non-parametric stratification over
// discrete confounder patterns and parametric per-arm outcome regression.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ce/common.hpp"
#include "ce/glm.hpp"
#include "ce/table.hpp"

namespace ce {

// One confounder pattern: cell counts, cell outcome means, and the pattern's
// share of the sample and of the treated arm.
struct Stratum {
  Eigen::VectorXd pattern;
  Eigen::Index n1 = 0, n0 = 0;
  double ybar1 = 0.0, ybar0 = 0.0;  // NaN when the cell is empty
  double p_marginal = 0.0;
  double p_treated = 0.0;
};

struct StratumTable {
  std::vector<Stratum> strata;
  std::size_t empty_cells = 0;  // patterns missing one arm
};

// Group rows by exact confounder pattern; requires discrete (binary or
// integer-coded) confounders.
StratumTable stratify(const ObservationTable& table);

enum class EmptyCellPolicy { error, att_switch };

// Mean outcome contrast standardized to the confounder distribution:
// sum over patterns of (ybar1 - ybar0) * P(pattern). Empty cells raise
// PositivityError, or switch the estimand to ATT when allowed.
EffectEstimate np_gformula_ate(const ObservationTable& table,
                               EmptyCellPolicy policy = EmptyCellPolicy::error);

// Same contrast standardized to P(pattern | treated). Patterns without
// treated rows carry zero weight; a treated pattern without controls is
// still a positivity error.
EffectEstimate np_gformula_att(const ObservationTable& table);

// Per-observation counterfactual predictions and their means.
struct PotentialOutcomePair {
  Eigen::VectorXd y1hat, y0hat;
  double mu1 = 0.0, mu0 = 0.0;
};

struct ParametricGformulaResult {
  EffectEstimate estimate;
  PotentialOutcomePair potentials;
};

// Separate outcome regressions per arm (linear or logistic), each predicting
// the whole sample; ATE is the difference of prediction means.
ParametricGformulaResult parametric_gformula_ate(const ObservationTable& table,
                                                 Family outcome_family = Family::linear,
                                                 const GlmSpec& base_spec = {});

// mu1 / mu0 with the excess-risk percentage 100 * (ratio - 1) in details.
EffectEstimate marginal_risk_ratio(const PotentialOutcomePair& pair);

}  // namespace ce
