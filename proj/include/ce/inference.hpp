// Non-parametric bootstrap over table rows with normal, percentile, and
// bias-corrected intervals. Resampling is driven by per-replicate RNG
// streams, so results are bit-identical for a given seed regardless of
// thread count or scheduling.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ce/common.hpp"
#include "ce/table.hpp"

namespace ce {

// Point-estimator callback applied to each resample. Must be pure and
// thread-safe; throwing marks the replicate failed.
using PointEstimator = std::function<double(const ObservationTable&)>;

struct BootstrapOptions {
  int replicates = 1000;
  std::uint64_t seed = 1;
  double level = 0.95;
  // 0 = use CE_THREADS or hardware concurrency.
  int threads = 0;
  // More than this fraction of failed replicates aborts inference.
  double max_failure_fraction = 0.20;
};

struct BcInterval {
  double lower = 0.0, upper = 0.0;
  // Set when every replicate fell on one side of the point estimate and the
  // interval fell back to the plain percentile one.
  bool fell_back = false;
};

struct BootstrapResult {
  double point = 0.0;              // estimator on the original rows
  double replicate_mean = 0.0;
  double se = 0.0;                 // sd of replicates (n-1)
  Eigen::VectorXd replicates;      // successful replicates, replicate order
  std::size_t n_requested = 0, n_failed = 0;
  ConfidenceInterval normal, percentile, bias_corrected;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

BootstrapResult bootstrap(const ObservationTable& table, const PointEstimator& estimator,
                          const BootstrapOptions& options = {});

// Bias-corrected interval: z0 from the fraction of replicates strictly below
// the point estimate, percentile endpoints at Phi(2*z0 +- z_{alpha/2}).
BcInterval bc_interval(const Eigen::Ref<const Eigen::VectorXd>& replicates, double point,
                       double level);

// Thread budget: explicit request, else CE_THREADS, else hardware
// concurrency, never below 1.
int resolve_threads(int requested);

}  // namespace ce
