// Covariate balance and propensity overlap diagnostics.
//
// Standardized differences standardize each covariate once against the
// whole-sample mean and SD (n-1), then contrast arm means of the
// standardized covariate; the weighted column replaces arm means with
// weighted arm means. Variance ratios are treated over control sample
// variances; weighted variances normalize weights to mean 1 within the arm
// and use the n-1 denominator, so equal weights reproduce the raw column
// exactly.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "ce/iptw.hpp"
#include "ce/table.hpp"

namespace ce {

struct BalanceRow {
  std::string name;
  double std_diff_raw = 0.0;
  double std_diff_weighted = 0.0;
  double var_ratio_raw = 0.0;      // NaN when flagged zero-variance
  double var_ratio_weighted = 0.0;
  bool zero_variance = false;
};

struct WeightSummary {
  double min = 0.0, p25 = 0.0, median = 0.0, mean = 0.0, p75 = 0.0, max = 0.0;
};

struct BalanceReport {
  std::vector<BalanceRow> rows;
  WeightSummary weights;
  std::vector<std::string> warnings;
};

BalanceReport balance_table(const ObservationTable& table, const WeightSet& weights);

// Kernel density of the propensity score per arm on a shared grid clipped
// to [0, 1]: Gaussian kernel, Silverman bandwidth per arm.
struct DensityCurve {
  Eigen::VectorXd x;        // grid (shared between arms)
  Eigen::VectorXd density;
  int arm = 0;              // 1 treated, 0 control
};

std::pair<DensityCurve, DensityCurve> overlap_densities(
    const Eigen::Ref<const Eigen::VectorXd>& g, const Eigen::Ref<const Eigen::VectorXd>& a,
    int grid_points = 512);

}  // namespace ce
