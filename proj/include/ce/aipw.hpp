// Augmented IPTW: outcome-regression predictions corrected by
// inverse-probability-weighted residuals, doubly robust.
#pragma once

#include <Eigen/Dense>

#include "ce/common.hpp"
#include "ce/iptw.hpp"
#include "ce/table.hpp"

namespace ce {

struct AipwOptions {
  // Default: one pooled logistic outcome model Y ~ A + W with counterfactual
  // predictions. arm_models fits Y ~ W separately per arm instead.
  bool arm_models = false;
  // Default augmentation: arm indicator times residual over g (or 1-g).
  // stabilized_residual uses the combined stabilized weight on the residual
  // for both arms instead; with that choice the two augmentation terms are
  // identical, so the ATE reduces to mean(Q1W) - mean(Q0W).
  bool stabilized_residual = false;
  std::optional<ModelSpec> outcome_model;     // default: main terms
  std::optional<ModelSpec> propensity_model;  // default: main terms
  Family outcome_family = Family::logistic;
};

struct AipwComponents {
  Eigen::VectorXd q1w, q0w, qaw;  // counterfactual and observed-arm predictions
  Eigen::VectorXd g;
  double mu1 = 0.0, mu0 = 0.0;
  double aug1_mean = 0.0, aug0_mean = 0.0;  // augmentation-term means (near 0 when well specified)
};

struct AipwResult {
  EffectEstimate estimate;
  AipwComponents components;
};

AipwResult aipw_ate(const ObservationTable& table, const AipwOptions& options = {});

}  // namespace ce
