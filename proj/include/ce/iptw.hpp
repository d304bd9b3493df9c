// Inverse-probability-of-treatment weighting: propensity fitting, weight
// construction/truncation, Horvitz-Thompson and Hajek contrasts, marginal
// structural model, and weighted per-arm regression adjustment.
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>

#include "ce/common.hpp"
#include "ce/design.hpp"
#include "ce/gformula.hpp"
#include "ce/glm.hpp"
#include "ce/table.hpp"

namespace ce {

struct PropensityScores {
  Eigen::VectorXd g;        // P(A=1 | W), strictly inside (0, 1)
  double g_marginal = 0.0;  // P(A=1), intercept-only fit
  // Counts of scores outside [0.025, 0.975]; reported, never acted on.
  Eigen::Index n_below = 0, n_above = 0;
  std::vector<std::string> warnings;
};

// Logistic A ~ W (denominator) and A ~ 1 (numerator). With no confounders
// both collapse to the treated fraction. Separation is reported as a
// positivity warning. The model defaults to main terms.
PropensityScores fit_propensity(const ObservationTable& table,
                                const std::optional<ModelSpec>& model = {});

enum class WeightKind { unstabilized, stabilized };

struct WeightSet {
  Eigen::VectorXd w;
  WeightKind kind = WeightKind::unstabilized;
  bool truncated = false;
};

// Unstabilized: a/g + (1-a)/(1-g). Stabilized: the same with the marginal
// treated/control share in the numerator.
WeightSet make_weights(const PropensityScores& ps, const Eigen::Ref<const Eigen::VectorXd>& a,
                       WeightKind kind);

// Clamp weights to their own empirical quantiles (type 7) at the given
// percentile bounds, e.g. (1, 99).
WeightSet truncate_weights(const WeightSet& weights, double lower_pct, double upper_pct);

// Weighted mean-outcome contrast. Hajek (weight-normalized per arm) by
// default; raw Horvitz-Thompson (divide by n) on request.
EffectEstimate ht_ate(const ObservationTable& table, const WeightSet& weights,
                      bool hajek = true);

// Weighted least squares of Y on the treatment alone; the treatment
// coefficient is the ATE and its HC0 sandwich SE is attached.
EffectEstimate msm_fit(const ObservationTable& table, const WeightSet& weights);

struct IptwRaResult {
  EffectEstimate estimate;
  PotentialOutcomePair potentials;
};

// Weighted regression adjustment: per-arm outcome regressions with the
// weights as sampling weights, counterfactual predictions averaged over the
// whole sample.
IptwRaResult iptw_ra_ate(const ObservationTable& table, const WeightSet& weights,
                         Family outcome_family = Family::linear);

}  // namespace ce
