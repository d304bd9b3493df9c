#include "ce/glm.hpp"

#include <cmath>
#include <sstream>

#include "ce/stats.hpp"

namespace ce {
namespace {

// Prepend the intercept column when requested.
Eigen::MatrixXd full_design(const Eigen::Ref<const Eigen::MatrixXd>& design, bool intercept) {
  if (!intercept) return design;
  Eigen::MatrixXd x(design.rows(), design.cols() + 1);
  x.col(0).setOnes();
  if (design.cols() > 0) x.rightCols(design.cols()) = design;
  return x;
}

std::string column_label(const GlmSpec& spec, Eigen::Index full_col) {
  Eigen::Index j = full_col;
  if (spec.include_intercept) {
    if (j == 0) return "(intercept)";
    --j;
  }
  if (j >= 0 && j < static_cast<Eigen::Index>(spec.term_names.size()))
    return spec.term_names[static_cast<std::size_t>(j)];
  return "column " + std::to_string(j);
}

void check_common(const Eigen::Ref<const Eigen::MatrixXd>& design,
                  const Eigen::Ref<const Eigen::VectorXd>& response, const GlmSpec& spec) {
  if (design.rows() != response.size()) throw DataError("design and response lengths disagree");
  if (response.size() == 0) throw DataError("empty response");
  if (!design.allFinite() || !response.allFinite())
    throw DataError("non-finite value in design or response");
  if (spec.sampling_weights) {
    const auto& sw = *spec.sampling_weights;
    if (sw.size() != response.size()) throw DataError("sampling weight length disagrees");
    if (!sw.allFinite() || (sw.array() < 0.0).any())
      throw DataError("sampling weights must be finite and non-negative");
    if (sw.sum() <= 0.0) throw DataError("sampling weights sum to zero");
  }
  if (spec.offset) {
    if (spec.family != Family::logistic)
      throw ConfigError("offset is only supported for the logistic family");
    if (spec.offset->size() != response.size()) throw DataError("offset length disagrees");
    if (!spec.offset->allFinite()) throw DataError("non-finite offset");
  }
}

// Rank check via column-pivoted QR on the weighted design; names the first
// column that is linearly dependent on its predecessors, which is stable and
// points at the redundant term rather than an arbitrary pivot choice.
void check_rank(const Eigen::MatrixXd& x, const GlmSpec& spec) {
  if (x.cols() == 0) return;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  qr.setThreshold(1e-10);
  qr.compute(x);
  const Eigen::Index rank = qr.rank();
  if (rank < x.cols()) {
    Eigen::Index offending = rank;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      qr.compute(x.leftCols(j + 1));
      if (qr.rank() <= j) {
        offending = j;
        break;
      }
    }
    std::ostringstream msg;
    msg << "design is rank deficient (rank " << rank << " of " << x.cols()
        << "); offending term: " << column_label(spec, offending);
    throw DataError(msg.str());
  }
}

double bernoulli_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& p,
                          const Eigen::VectorXd& sw) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double pc = clamp_probability(p[i]);
    dev += sw[i] * (y[i] * std::log(pc) + (1.0 - y[i]) * std::log(1.0 - pc));
  }
  return -2.0 * dev;
}

}  // namespace

FittedGlm fit_ols(const Eigen::Ref<const Eigen::MatrixXd>& design,
                  const Eigen::Ref<const Eigen::VectorXd>& response, const GlmSpec& spec) {
  if (spec.family != Family::linear && spec.family != Family::logistic)
    throw ConfigError("unknown family");
  if (spec.offset) throw ConfigError("offset is only supported for the logistic family");
  check_common(design, response, spec);
  const Eigen::MatrixXd x = full_design(design, spec.include_intercept);
  const auto n = x.rows();
  Eigen::VectorXd sw = spec.sampling_weights ? *spec.sampling_weights : Eigen::VectorXd::Ones(n);

  const Eigen::VectorXd root_w = sw.array().sqrt();
  const Eigen::MatrixXd xw = root_w.asDiagonal() * x;
  check_rank(xw, spec);

  FittedGlm fit;
  fit.family = Family::linear;
  fit.has_intercept = spec.include_intercept;
  if (x.cols() > 0) {
    const Eigen::VectorXd yw = root_w.asDiagonal() * response;
    fit.coefficients = xw.colPivHouseholderQr().solve(yw);
    fit.fitted_values = x * fit.coefficients;
  } else {
    fit.coefficients = Eigen::VectorXd(0);
    fit.fitted_values = Eigen::VectorXd::Zero(n);
  }
  fit.residuals = response - fit.fitted_values;
  fit.working_weights = sw;
  fit.converged = true;
  fit.iterations = 1;
  fit.final_gradient_norm =
      x.cols() > 0 ? (x.transpose() * (sw.asDiagonal() * fit.residuals)).lpNorm<Eigen::Infinity>()
                   : 0.0;
  return fit;
}

FittedGlm fit_logistic(const Eigen::Ref<const Eigen::MatrixXd>& design,
                       const Eigen::Ref<const Eigen::VectorXd>& response, const GlmSpec& spec) {
  check_common(design, response, spec);
  if (((response.array() < 0.0) || (response.array() > 1.0)).any())
    throw DataError("logistic response must lie in [0, 1]");
  const Eigen::MatrixXd x = full_design(design, spec.include_intercept);
  const auto n = x.rows();
  const auto p = x.cols();
  const Eigen::VectorXd sw =
      spec.sampling_weights ? *spec.sampling_weights : Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd off = spec.offset ? *spec.offset : Eigen::VectorXd::Zero(n);

  FittedGlm fit;
  fit.family = Family::logistic;
  fit.has_intercept = spec.include_intercept;

  auto probabilities = [&](const Eigen::VectorXd& beta) -> Eigen::VectorXd {
    Eigen::VectorXd eta = off;
    if (p > 0) eta += x * beta;
    return eta.unaryExpr([](double e) { return expit(e); });
  };

  if (p == 0) {  // pure offset model
    fit.coefficients = Eigen::VectorXd(0);
    fit.fitted_values = probabilities(Eigen::VectorXd(0));
    fit.residuals = response - fit.fitted_values;
    fit.working_weights = sw;
    fit.converged = true;
    fit.iterations = 0;
    fit.deviance_trace.push_back(bernoulli_deviance(response, fit.fitted_values, sw));
    return fit;
  }

  {
    const Eigen::VectorXd root_w = sw.array().sqrt();
    check_rank(root_w.asDiagonal() * x, spec);
  }
  if (!spec.offset) {
    // A constant response has no finite MLE unless an offset anchors it.
    const double ybar = (sw.array() * response.array()).sum() / sw.sum();
    if (ybar == 0.0 || ybar == 1.0)
      throw DataError("logistic response is constant; no finite fit exists");
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd prob = probabilities(beta);
  double dev = bernoulli_deviance(response, prob, sw);
  fit.deviance_trace.push_back(dev);

  bool plateaued = false;
  double score_norm = (x.transpose() * (sw.array() * (response - prob).array()).matrix())
                          .lpNorm<Eigen::Infinity>();
  int it = 0;
  for (; it < spec.max_iterations; ++it) {
    // Newton step on the weighted quasi-likelihood.
    const Eigen::VectorXd ww = sw.array() * prob.array() * (1.0 - prob.array());
    const Eigen::VectorXd score = x.transpose() * (sw.array() * (response - prob).array()).matrix();
    Eigen::MatrixXd info = x.transpose() * ww.asDiagonal() * x;
    // Tiny ridge keeps the information invertible when weights collapse
    // under separation; vanishes relative to any healthy fit.
    info.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = info.ldlt().solve(score);

    double lambda = 1.0;
    Eigen::VectorXd beta_new, prob_new;
    double dev_new = dev;
    for (int h = 0; h < 30; ++h) {
      beta_new = beta + lambda * step;
      prob_new = probabilities(beta_new);
      dev_new = bernoulli_deviance(response, prob_new, sw);
      if (dev_new <= dev + 1e-13 * std::abs(dev)) break;
      lambda *= 0.5;
    }
    const double dev_change = dev - dev_new;
    beta = beta_new;
    prob = prob_new;
    dev = dev_new;
    fit.deviance_trace.push_back(dev);
    score_norm = (x.transpose() * (sw.array() * (response - prob).array()).matrix())
                     .lpNorm<Eigen::Infinity>();
    if (beta.lpNorm<Eigen::Infinity>() > spec.separation_bound) fit.separation_warning = true;
    if (std::abs(dev_change) <= spec.tol_deviance) {
      plateaued = true;
      if (score_norm <= spec.tol_score || fit.separation_warning) {
        ++it;
        break;
      }
    }
  }

  fit.coefficients = beta;
  fit.fitted_values = prob;
  fit.residuals = response - prob;
  fit.working_weights = (sw.array() * prob.array() * (1.0 - prob.array())).matrix();
  fit.iterations = it;
  fit.final_gradient_norm = score_norm;
  fit.converged = score_norm <= spec.tol_score || (plateaued && fit.separation_warning);
  if (!fit.converged) {
    std::ostringstream msg;
    msg << "logistic fit did not converge in " << spec.max_iterations
        << " iterations (score norm " << score_norm << "); deviance trace:";
    for (double d : fit.deviance_trace) msg << " " << d;
    throw ConvergenceError(msg.str());
  }
  return fit;
}

Eigen::VectorXd predict(const FittedGlm& fit, const Eigen::Ref<const Eigen::MatrixXd>& design,
                        const std::optional<Eigen::VectorXd>& offset) {
  const Eigen::MatrixXd x = full_design(design, fit.has_intercept);
  if (x.cols() != fit.coefficients.size())
    throw DataError("prediction design has " + std::to_string(design.cols()) +
                    " columns; fit expects " +
                    std::to_string(fit.coefficients.size() - (fit.has_intercept ? 1 : 0)));
  Eigen::VectorXd eta = x.cols() > 0 ? Eigen::VectorXd(x * fit.coefficients)
                                     : Eigen::VectorXd::Zero(x.rows());
  if (offset) {
    if (fit.family != Family::logistic)
      throw ConfigError("offset is only supported for the logistic family");
    if (offset->size() != eta.size()) throw DataError("offset length disagrees");
    eta += *offset;
  }
  if (fit.family == Family::linear) return eta;
  return eta.unaryExpr([](double e) { return expit(e); });
}

Eigen::VectorXd robust_se(FittedGlm& fit, const Eigen::Ref<const Eigen::MatrixXd>& design,
                          const Eigen::Ref<const Eigen::VectorXd>& response,
                          const std::optional<Eigen::VectorXd>& sampling_weights) {
  const Eigen::MatrixXd x = full_design(design, fit.has_intercept);
  if (x.cols() != fit.coefficients.size()) throw DataError("design does not match fit");
  if (response.size() != x.rows()) throw DataError("response does not match design");
  const Eigen::VectorXd sw =
      sampling_weights ? *sampling_weights : Eigen::VectorXd::Ones(x.rows());
  if (sw.size() != x.rows()) throw DataError("sampling weight length disagrees");

  // Bread: expected-information matrix; meat: outer product of per-row
  // estimating-function contributions sw*(y - fitted)*x (HC0, no small-sample
  // correction).
  Eigen::VectorXd bread_w;
  if (fit.family == Family::logistic) {
    bread_w = (sw.array() * fit.fitted_values.array() * (1.0 - fit.fitted_values.array())).matrix();
  } else {
    bread_w = sw;
  }
  const Eigen::MatrixXd a = x.transpose() * bread_w.asDiagonal() * x;
  const Eigen::VectorXd u = (sw.array() * (response - fit.fitted_values).array()).matrix();
  const Eigen::MatrixXd meat = x.transpose() * u.array().square().matrix().asDiagonal() * x;
  const Eigen::MatrixXd a_inv = a.ldlt().solve(Eigen::MatrixXd::Identity(x.cols(), x.cols()));
  const Eigen::MatrixXd cov = a_inv * meat * a_inv;
  fit.robust_covariance = cov;
  return cov.diagonal().array().sqrt();
}

}  // namespace ce
