// Synthetic data-generating process with known potential outcomes, plus a
// Monte Carlo loop measuring estimator bias, spread, and interval coverage.
//
// The DGP draws four discrete covariates, assigns treatment by a logistic
// model with a w2*w4 interaction, and sets each unit's potential outcomes to
// the event probabilities themselves (so outcomes are continuous in (0, 1)
// and every estimator must accept fractional responses):
//   w1 = round(U(1,5)), w2 = Bern(0.45),
//   w3 = round(U(0,1) + 0.75 w2 + 0.8 w1) with 5,6 recoded to 1,
//   w4 = round(U(0,1) + 0.75 w2 + 0.2 w1),
//   A  = Bern(invlogit(-1 - 0.15 w4 + 1.5 w2 + 0.75 w3 + 0.25 w1 + 0.8 w2 w4)),
//   Y(a) = invlogit(-3 + a + 0.25 w4 + 0.75 w3 + 0.8 w2 w4 + 0.05 w1),
//   Y = A Y(1) + (1-A) Y(0), unit effect psi = Y(1) - Y(0).
// Rounding is half away from zero, so w1's endpoint levels carry half mass.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ce/common.hpp"
#include "ce/table.hpp"

namespace ce {

struct DgpSample {
  ObservationTable table;    // observed data (fractional outcomes)
  Eigen::VectorXd y1, y0;    // potential outcomes
  Eigen::VectorXd psi;       // unit-level effects y1 - y0
};

DgpSample generate_dgp(Eigen::Index n, std::uint64_t seed);

// Mean unit effect on a large dedicated reference draw from the same seed
// family.
double reference_psi(std::uint64_t seed, Eigen::Index n = 1000000);

// A named estimator run on a generated sample. Estimators see the sample
// (including potential outcomes, which ordinary estimators must ignore); the
// oracle used in tests reads psi directly.
struct SimEstimator {
  std::string name;
  std::function<EffectEstimate(const DgpSample&)> run;
};

// ra (per-arm logistic regression adjustment), iptw (raw Horvitz-Thompson,
// unstabilized — the variant most exposed to poor overlap), iptw-ra (weighted
// per-arm logistic), aipw (pooled logistic outcome model), tmle (two-candidate
// learner menu: main terms and interactions).
std::vector<SimEstimator> default_estimator_suite();

struct BiasRow {
  std::string name;
  double mean_estimate = 0.0;
  double rel_bias = 0.0;       // |mean - psi| / psi
  double emp_se = 0.0;         // sd of replicate estimates
  double coverage = 0.0;       // fraction of CIs covering psi
  bool has_coverage = false;   // some estimators carry no analytic CI
  Eigen::Index n_failed = 0;
};

struct BiasReport {
  double true_psi = 0.0;
  Eigen::Index n = 0;
  int replications = 0;
  std::uint64_t seed = 0;
  std::vector<BiasRow> rows;
};

// R replications at sample size n; replicate r draws from stream r of the
// seed, so the report is deterministic for a given seed and thread count has
// no effect on values.
BiasReport monte_carlo(const std::vector<SimEstimator>& estimators, Eigen::Index n,
                       int replications, std::uint64_t seed, int threads = 0);

}  // namespace ce
