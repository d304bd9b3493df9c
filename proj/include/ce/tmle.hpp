// Targeted maximum likelihood for the ATE of a binary treatment, with
// influence-curve inference, ratio/odds effect measures, and an optional
// discrete learner selection step (V-fold cross-validated choice among GLM
// specifications, winner take all).
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ce/common.hpp"
#include "ce/design.hpp"
#include "ce/table.hpp"

namespace ce {

enum class LearnerKind { main_terms, interactions, stepwise };

struct LearnerMenu {
  std::vector<LearnerKind> candidates = {LearnerKind::main_terms, LearnerKind::interactions,
                                         LearnerKind::stepwise};
  int folds = 10;
};

enum class CvTarget { outcome, propensity };

struct CvCandidateRisk {
  LearnerKind kind = LearnerKind::main_terms;
  double risk = 0.0;  // mean held-out negative Bernoulli log-likelihood
  bool failed = false;
};

struct CvChoice {
  LearnerKind kind = LearnerKind::main_terms;
  ModelSpec spec;  // re-derived on the full sample
  std::vector<CvCandidateRisk> risks;
  std::vector<std::string> warnings;
};

// Deterministic V-fold cross-validation, folds stratified by treatment and
// shuffled under the seed. Candidates that fail on any fold are dropped with
// a warning; all failing is an error.
CvChoice cv_select(const ObservationTable& table, const LearnerMenu& menu, CvTarget target,
                   std::uint64_t seed);

struct TmleOptions {
  std::optional<LearnerMenu> learners;  // default: plain main-terms fits
  std::uint64_t seed = 1;               // used only by learner selection
  bool skip_targeting = false;          // force eps = 0 (initial estimate)
  // Fixed nuisance models; each bypasses learner selection for its target.
  std::optional<ModelSpec> outcome_spec;
  std::optional<ModelSpec> propensity_spec;
};

// Everything the procedure computes, exposed for inspection and for the
// ratio measures.
struct TmleState {
  Eigen::VectorXd qaw, q1w, q0w;           // initial outcome predictions
  Eigen::VectorXd g;                       // propensity scores
  Eigen::VectorXd h1w, h0w;                // clever covariates a/g, (1-a)/(1-g)
  double eps1 = 0.0, eps2 = 0.0;           // fluctuation coefficients
  Eigen::VectorXd q1w_star, q0w_star;      // targeted predictions
  double mu1 = 0.0, mu0 = 0.0;             // means of targeted predictions
  double ate = 0.0;
  Eigen::VectorXd ic;                      // efficient influence curve at the estimate
  Eigen::VectorXd ic1, ic0;                // arm-specific pieces (ic = ic1 - ic0)
  double var_ic = 0.0;                     // Var(IC) / n
  double score1 = 0.0, score2 = 0.0;       // solved estimating equations (near 0)
  Eigen::Index g_below = 0, g_above = 0;   // scores outside [0.025, 0.975]
  std::vector<std::string> warnings;
};

TmleState tmle_fit(const ObservationTable& table, const TmleOptions& options = {});

// ATE with influence-curve standard error and 1.96-SE interval.
EffectEstimate tmle_ate(const ObservationTable& table, const TmleOptions& options = {});
EffectEstimate tmle_ate(const TmleState& state);

// Risk ratio and odds ratio of the targeted potential-outcome means, with
// influence-curve intervals built on the log scale.
std::pair<EffectEstimate, EffectEstimate> tmle_rr_or(const TmleState& state);

// (standard error, lower, upper) of the ATE from the influence curve.
struct IcInference {
  double se = 0.0;
  double lower = 0.0, upper = 0.0;
};
IcInference ic_variance(const TmleState& state);

}  // namespace ce
