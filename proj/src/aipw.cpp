#include "ce/aipw.hpp"

#include "ce/gformula.hpp"
#include "ce/stats.hpp"

namespace ce {

AipwResult aipw_ate(const ObservationTable& table, const AipwOptions& options) {
  const auto [n1, n0] = arm_counts(table);
  if (n1 == 0 || n0 == 0) throw DataError("both treatment arms must be non-empty");
  const auto n = table.n();

  AipwResult out;
  AipwComponents& c = out.components;
  std::vector<std::string> warnings;

  if (options.arm_models) {
    if (options.outcome_model)
      throw ConfigError("arm_models fits per-arm regressions; custom outcome model not supported");
    // Per-arm outcome fits; the observed-arm prediction selects by arm.
    const ParametricGformulaResult g =
        parametric_gformula_ate(table, options.outcome_family);
    c.q1w = g.potentials.y1hat;
    c.q0w = g.potentials.y0hat;
    c.qaw.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
      c.qaw[i] = table.a()[i] == 1.0 ? c.q1w[i] : c.q0w[i];
    for (const auto& w : g.estimate.warnings) warnings.push_back(w);
  } else {
    const ModelSpec model = options.outcome_model
                                ? *options.outcome_model
                                : ModelSpec::main_terms(table, /*with_treatment=*/true);
    if (!model.uses_treatment())
      warnings.push_back("outcome model does not include the treatment");
    GlmSpec spec;
    spec.family = options.outcome_family;
    spec.term_names = model.term_names(table);
    const Eigen::MatrixXd x = model.design(table);
    const FittedGlm fit = options.outcome_family == Family::linear
                              ? fit_ols(x, table.y(), spec)
                              : fit_logistic(x, table.y(), spec);
    if (fit.separation_warning)
      warnings.push_back("outcome regression shows quasi-separation (|coef| > 15)");
    c.qaw = fit.fitted_values;
    c.q1w = predict(fit, model.design(table, 1.0));
    c.q0w = predict(fit, model.design(table, 0.0));
  }

  const PropensityScores ps = fit_propensity(table, options.propensity_model);
  c.g = ps.g;
  for (const auto& w : ps.warnings) warnings.push_back(w);

  const auto& a = table.a();
  const auto& y = table.y();
  Eigen::VectorXd aug1(n), aug0(n);
  if (options.stabilized_residual) {
    const WeightSet sws = make_weights(ps, a, WeightKind::stabilized);
    aug1 = sws.w.array() * (y - c.qaw).array();
    aug0 = aug1;
  } else {
    aug1 = a.array() * (y - c.qaw).array() / c.g.array();
    aug0 = (1.0 - a.array()) * (y - c.qaw).array() / (1.0 - c.g.array());
  }
  c.aug1_mean = aug1.mean();
  c.aug0_mean = aug0.mean();
  c.mu1 = c.q1w.mean() + c.aug1_mean;
  c.mu0 = c.q0w.mean() + c.aug0_mean;

  EffectEstimate& est = out.estimate;
  est.estimand = Estimand::ate;
  est.method = "aipw";
  est.value = c.mu1 - c.mu0;
  est.mu1 = c.mu1;
  est.mu0 = c.mu0;
  est.details["augmentation_mean_treated"] = c.aug1_mean;
  est.details["augmentation_mean_control"] = c.aug0_mean;
  est.details["ps_below_0.025"] = static_cast<double>(ps.n_below);
  est.details["ps_above_0.975"] = static_cast<double>(ps.n_above);
  est.warnings = std::move(warnings);
  return out;
}

}  // namespace ce
