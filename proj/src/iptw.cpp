#include "ce/iptw.hpp"

#include <cmath>

#include "ce/stats.hpp"

namespace ce {

PropensityScores fit_propensity(const ObservationTable& table,
                                const std::optional<ModelSpec>& model) {
  const auto [n1, n0] = arm_counts(table);
  if (n1 == 0 || n0 == 0) throw DataError("both treatment arms must be non-empty");

  const ModelSpec spec_used =
      model ? *model : ModelSpec::main_terms(table, /*with_treatment=*/false);
  if (spec_used.uses_treatment())
    throw ConfigError("propensity model cannot contain the treatment");

  GlmSpec gspec;
  gspec.family = Family::logistic;
  gspec.term_names = spec_used.term_names(table);

  PropensityScores ps;
  if (spec_used.terms.empty()) {
    ps.g = Eigen::VectorXd::Constant(table.n(), static_cast<double>(n1) / table.n());
  } else {
    FittedGlm fit;
    try {
      fit = fit_logistic(spec_used.design(table), table.a(), gspec);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(std::string("propensity model: ") + e.what() +
                             " (often a positivity problem: some pattern nearly determines "
                             "treatment)");
    }
    if (fit.separation_warning)
      ps.warnings.push_back(
          "propensity model shows quasi-separation (|coef| > 15): some confounder pattern "
          "nearly determines treatment; overlap is suspect");
    ps.g = fit.fitted_values;
  }
  ps.g_marginal = static_cast<double>(n1) / table.n();
  ps.n_below = (ps.g.array() < 0.025).count();
  ps.n_above = (ps.g.array() > 0.975).count();
  if (ps.n_below + ps.n_above > 0)
    ps.warnings.push_back(std::to_string(ps.n_below + ps.n_above) +
                          " propensity score(s) outside [0.025, 0.975]");
  return ps;
}

WeightSet make_weights(const PropensityScores& ps, const Eigen::Ref<const Eigen::VectorXd>& a,
                       WeightKind kind) {
  if (ps.g.size() != a.size()) throw DataError("propensity score length disagrees");
  if (((ps.g.array() <= 0.0) || (ps.g.array() >= 1.0)).any())
    throw PositivityError("propensity score at 0 or 1: weights undefined");
  WeightSet ws;
  ws.kind = kind;
  ws.w.resize(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double g = ps.g[i];
    if (kind == WeightKind::unstabilized) {
      ws.w[i] = a[i] == 1.0 ? 1.0 / g : 1.0 / (1.0 - g);
    } else {
      ws.w[i] = a[i] == 1.0 ? ps.g_marginal / g : (1.0 - ps.g_marginal) / (1.0 - g);
    }
  }
  return ws;
}

WeightSet truncate_weights(const WeightSet& weights, double lower_pct, double upper_pct) {
  if (!(lower_pct >= 0.0 && upper_pct <= 100.0 && lower_pct < upper_pct))
    throw ConfigError("truncation percentiles must satisfy 0 <= lower < upper <= 100");
  std::vector<double> v(weights.w.data(), weights.w.data() + weights.w.size());
  const double lo = quantile_type7(v, lower_pct / 100.0);
  const double hi = quantile_type7(v, upper_pct / 100.0);
  WeightSet out = weights;
  out.truncated = true;
  out.w = weights.w.array().min(hi).max(lo);
  return out;
}

EffectEstimate ht_ate(const ObservationTable& table, const WeightSet& weights, bool hajek) {
  if (weights.w.size() != table.n()) throw DataError("weight length disagrees");
  const auto& a = table.a();
  const auto& y = table.y();
  const auto& w = weights.w;
  const double sw1 = (a.array() * w.array()).sum();
  const double sw0 = ((1.0 - a.array()) * w.array()).sum();
  if (sw1 <= 0.0 || sw0 <= 0.0) throw DataError("a treatment arm carries no weight");
  const double sy1 = (a.array() * w.array() * y.array()).sum();
  const double sy0 = ((1.0 - a.array()) * w.array() * y.array()).sum();

  EffectEstimate est;
  est.estimand = Estimand::ate;
  est.method = hajek ? "iptw" : "iptw-ht";
  if (hajek) {
    est.mu1 = sy1 / sw1;
    est.mu0 = sy0 / sw0;
  } else {
    const double n = static_cast<double>(table.n());
    est.mu1 = sy1 / n;
    est.mu0 = sy0 / n;
  }
  est.value = est.mu1 - est.mu0;
  est.details["sum_weights_treated"] = sw1;
  est.details["sum_weights_control"] = sw0;
  return est;
}

EffectEstimate msm_fit(const ObservationTable& table, const WeightSet& weights) {
  if (weights.w.size() != table.n()) throw DataError("weight length disagrees");
  GlmSpec spec;
  spec.family = Family::linear;
  spec.sampling_weights = weights.w;
  spec.term_names = {table.treatment_name()};
  const Eigen::MatrixXd x = table.a();
  FittedGlm fit = fit_ols(x, table.y(), spec);
  const Eigen::VectorXd se = robust_se(fit, x, table.y(), weights.w);

  EffectEstimate est;
  est.estimand = Estimand::ate;
  est.method = "msm";
  est.value = fit.coefficients[1];
  est.se = se[1];
  const double z = norm_quantile(0.975);
  est.ci = ConfidenceInterval{est.value - z * se[1], est.value + z * se[1], 0.95, "wald"};
  est.mu0 = fit.coefficients[0];
  est.mu1 = fit.coefficients[0] + fit.coefficients[1];
  return est;
}

IptwRaResult iptw_ra_ate(const ObservationTable& table, const WeightSet& weights,
                         Family outcome_family) {
  if (weights.w.size() != table.n()) throw DataError("weight length disagrees");
  const ModelSpec covariates = ModelSpec::main_terms(table, /*with_treatment=*/false);
  const Eigen::MatrixXd x_all = covariates.design(table);

  auto fit_arm = [&](double arm) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < table.n(); ++i)
      if (table.a()[i] == arm) rows.push_back(i);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), x_all.cols());
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    Eigen::VectorXd sw(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = x_all.row(rows[i]);
      y[static_cast<Eigen::Index>(i)] = table.y()[rows[i]];
      sw[static_cast<Eigen::Index>(i)] = weights.w[rows[i]];
    }
    if (static_cast<Eigen::Index>(rows.size()) <= x.cols() + 1)
      throw DataError("arm has too few rows for its weighted outcome regression");
    GlmSpec spec;
    spec.family = outcome_family;
    spec.sampling_weights = sw;
    spec.term_names = covariates.term_names(table);
    return outcome_family == Family::linear ? fit_ols(x, y, spec) : fit_logistic(x, y, spec);
  };

  const FittedGlm fit1 = fit_arm(1.0);
  const FittedGlm fit0 = fit_arm(0.0);

  IptwRaResult out;
  out.potentials.y1hat = predict(fit1, x_all);
  out.potentials.y0hat = predict(fit0, x_all);
  out.potentials.mu1 = out.potentials.y1hat.mean();
  out.potentials.mu0 = out.potentials.y0hat.mean();
  out.estimate.estimand = Estimand::ate;
  out.estimate.method = "iptw-ra";
  out.estimate.value = out.potentials.mu1 - out.potentials.mu0;
  out.estimate.mu1 = out.potentials.mu1;
  out.estimate.mu0 = out.potentials.mu0;
  return out;
}

}  // namespace ce
