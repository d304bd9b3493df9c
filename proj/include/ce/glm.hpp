// Weighted least squares and logistic regression by iteratively reweighted
// least squares. This is the numerical core every estimator sits on.
//
// Conventions:
//  - The design passed in is the covariate block; an intercept column is
//    prepended internally when spec.include_intercept is set, and the
//    intercept coefficient comes first.
//  - Sampling weights are non-negative and enter both families; offsets are
//    valid for the logistic family only.
//  - Logistic responses may be fractional in [0, 1] (Bernoulli
//    quasi-likelihood); fitted probabilities stay strictly inside (0, 1) at
//    double precision, and clamp_probability() is applied before any log.
//  - IRLS stops when the deviance change is <= tol_deviance and the score
//    sup-norm is <= tol_score (quadratic convergence usually lands well
//    below both); step-halving guards against deviance increases.
//  - |coefficient| > separation_bound flags quasi-separation as a warning; a
//    deviance plateau with that flag still counts as converged, while a fit
//    that never plateaus throws ConvergenceError with its deviance trace.
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ce/common.hpp"

namespace ce {

enum class Family { linear, logistic };

struct GlmSpec {
  Family family = Family::linear;
  bool include_intercept = true;
  std::optional<Eigen::VectorXd> offset;            // logistic only
  std::optional<Eigen::VectorXd> sampling_weights;  // non-negative, not all zero
  double tol_deviance = 1e-10;
  double tol_score = 1e-8;
  int max_iterations = 50;
  double separation_bound = 15.0;
  std::vector<std::string> term_names;  // used in error messages when present
};

struct FittedGlm {
  Family family = Family::linear;
  bool has_intercept = true;
  Eigen::VectorXd coefficients;  // intercept first when present
  Eigen::VectorXd fitted_values;
  Eigen::VectorXd residuals;       // response minus fitted
  Eigen::VectorXd working_weights; // final IRLS weights (logistic) or sampling weights (linear)
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  bool separation_warning = false;
  std::optional<Eigen::MatrixXd> robust_covariance;
  std::vector<double> deviance_trace;
};

// Weighted ordinary least squares. Throws DataError on rank deficiency,
// naming the offending column.
FittedGlm fit_ols(const Eigen::Ref<const Eigen::MatrixXd>& design,
                  const Eigen::Ref<const Eigen::VectorXd>& response, const GlmSpec& spec = {});

// Logistic regression via IRLS (Newton with step-halving).
FittedGlm fit_logistic(const Eigen::Ref<const Eigen::MatrixXd>& design,
                       const Eigen::Ref<const Eigen::VectorXd>& response,
                       const GlmSpec& spec = {});

// Linear predictor / probability scale predictions on new covariate rows,
// shaped like the design the fit was produced from.
Eigen::VectorXd predict(const FittedGlm& fit, const Eigen::Ref<const Eigen::MatrixXd>& design,
                        const std::optional<Eigen::VectorXd>& offset = {});

// HC0 sandwich standard errors; also stores the full robust covariance on
// the fit. The design and response must be the ones the model was fit to.
Eigen::VectorXd robust_se(FittedGlm& fit, const Eigen::Ref<const Eigen::MatrixXd>& design,
                          const Eigen::Ref<const Eigen::VectorXd>& response,
                          const std::optional<Eigen::VectorXd>& sampling_weights = {});

}  // namespace ce
