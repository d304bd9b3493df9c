#include "ce/gformula.hpp"

#include <array>
#include <cmath>
#include <map>
#include <sstream>

#include "ce/design.hpp"
#include "ce/stats.hpp"

namespace ce {
namespace {

void require_discrete(const ObservationTable& table) {
  for (const auto& c : table.confounders())
    if (c.kind == ColumnKind::continuous)
      throw DataError("non-parametric standardization requires discrete confounders ('" +
                      c.name + "' is continuous)");
}

void require_both_arms(const ObservationTable& table) {
  const auto [n1, n0] = arm_counts(table);
  if (n1 == 0 || n0 == 0) throw DataError("both treatment arms must be non-empty");
}

std::string pattern_label(const ObservationTable& table, const Eigen::VectorXd& pattern) {
  std::ostringstream s;
  for (Eigen::Index j = 0; j < pattern.size(); ++j) {
    if (j) s << ", ";
    s << table.confounders()[static_cast<std::size_t>(j)].name << "=" << pattern[j];
  }
  return s.str();
}

}  // namespace

StratumTable stratify(const ObservationTable& table) {
  require_discrete(table);
  require_both_arms(table);
  std::map<std::vector<double>, std::array<double, 4>> cells;  // pattern -> n1, n0, ysum1, ysum0
  for (Eigen::Index i = 0; i < table.n(); ++i) {
    std::vector<double> key(static_cast<std::size_t>(table.n_confounders()));
    for (Eigen::Index j = 0; j < table.n_confounders(); ++j)
      key[static_cast<std::size_t>(j)] = table.w()(i, j);
    auto& c = cells[key];
    if (table.a()[i] == 1.0) {
      c[0] += 1.0;
      c[2] += table.y()[i];
    } else {
      c[1] += 1.0;
      c[3] += table.y()[i];
    }
  }
  StratumTable out;
  const double n = static_cast<double>(table.n());
  const double n1_total = table.a().sum();
  for (const auto& [key, c] : cells) {
    Stratum s;
    s.pattern = Eigen::Map<const Eigen::VectorXd>(key.data(), static_cast<Eigen::Index>(key.size()));
    s.n1 = static_cast<Eigen::Index>(c[0]);
    s.n0 = static_cast<Eigen::Index>(c[1]);
    s.ybar1 = s.n1 > 0 ? c[2] / c[0] : std::numeric_limits<double>::quiet_NaN();
    s.ybar0 = s.n0 > 0 ? c[3] / c[1] : std::numeric_limits<double>::quiet_NaN();
    s.p_marginal = (c[0] + c[1]) / n;
    s.p_treated = c[0] / n1_total;
    if (s.n1 == 0 || s.n0 == 0) ++out.empty_cells;
    out.strata.push_back(std::move(s));
  }
  return out;
}

EffectEstimate np_gformula_ate(const ObservationTable& table, EmptyCellPolicy policy) {
  const StratumTable st = stratify(table);
  if (st.empty_cells > 0) {
    if (policy == EmptyCellPolicy::error) {
      for (const auto& s : st.strata)
        if (s.n1 == 0 || s.n0 == 0)
          throw PositivityError("confounder pattern {" + pattern_label(table, s.pattern) +
                                "} has an empty " + (s.n1 == 0 ? "treated" : "control") +
                                " cell; ATE is not identified (" +
                                std::to_string(st.empty_cells) +
                                " such pattern(s); consider the ATT switch)");
    }
    EffectEstimate est = np_gformula_att(table);
    est.warnings.push_back("empty confounder cells: estimand switched to ATT over " +
                           std::to_string(st.empty_cells) + " pattern(s) lacking treated rows");
    return est;
  }
  double ate = 0.0, mu1 = 0.0, mu0 = 0.0;
  for (const auto& s : st.strata) {
    ate += (s.ybar1 - s.ybar0) * s.p_marginal;
    mu1 += s.ybar1 * s.p_marginal;
    mu0 += s.ybar0 * s.p_marginal;
  }
  EffectEstimate est;
  est.estimand = Estimand::ate;
  est.method = "np-g";
  est.value = ate;
  est.mu1 = mu1;
  est.mu0 = mu0;
  est.details["strata"] = static_cast<double>(st.strata.size());
  return est;
}

EffectEstimate np_gformula_att(const ObservationTable& table) {
  const StratumTable st = stratify(table);
  double att = 0.0, mu1 = 0.0, mu0 = 0.0;
  for (const auto& s : st.strata) {
    if (s.n1 == 0) continue;  // zero weight under P(pattern | treated)
    if (s.n0 == 0)
      throw PositivityError("confounder pattern {" + pattern_label(table, s.pattern) +
                            "} has treated rows but no controls; ATT is not identified");
    att += (s.ybar1 - s.ybar0) * s.p_treated;
    mu1 += s.ybar1 * s.p_treated;
    mu0 += s.ybar0 * s.p_treated;
  }
  EffectEstimate est;
  est.estimand = Estimand::att;
  est.method = "np-g";
  est.value = att;
  est.mu1 = mu1;
  est.mu0 = mu0;
  est.details["strata"] = static_cast<double>(st.strata.size());
  return est;
}

ParametricGformulaResult parametric_gformula_ate(const ObservationTable& table,
                                                 Family outcome_family, const GlmSpec& base_spec) {
  require_both_arms(table);
  const ModelSpec covariates = ModelSpec::main_terms(table, /*with_treatment=*/false);
  const Eigen::MatrixXd x_all = covariates.design(table);

  std::vector<Eigen::Index> treated, control;
  for (Eigen::Index i = 0; i < table.n(); ++i)
    (table.a()[i] == 1.0 ? treated : control).push_back(i);

  auto fit_arm = [&](const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), x_all.cols());
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = x_all.row(rows[i]);
      y[static_cast<Eigen::Index>(i)] = table.y()[rows[i]];
    }
    if (static_cast<Eigen::Index>(rows.size()) <= x.cols() + 1)
      throw DataError("arm has too few rows (" + std::to_string(rows.size()) +
                      ") for its outcome regression");
    GlmSpec spec = base_spec;
    spec.family = outcome_family;
    spec.include_intercept = true;
    spec.term_names = covariates.term_names(table);
    return outcome_family == Family::linear ? fit_ols(x, y, spec) : fit_logistic(x, y, spec);
  };

  const FittedGlm fit1 = fit_arm(treated);
  const FittedGlm fit0 = fit_arm(control);

  ParametricGformulaResult out;
  out.potentials.y1hat = predict(fit1, x_all);
  out.potentials.y0hat = predict(fit0, x_all);
  out.potentials.mu1 = out.potentials.y1hat.mean();
  out.potentials.mu0 = out.potentials.y0hat.mean();

  EffectEstimate& est = out.estimate;
  est.estimand = Estimand::ate;
  est.method = "g-comp";
  est.value = out.potentials.mu1 - out.potentials.mu0;
  est.mu1 = out.potentials.mu1;
  est.mu0 = out.potentials.mu0;
  for (const FittedGlm* f : {&fit1, &fit0})
    if (f->separation_warning)
      est.warnings.push_back("outcome regression shows quasi-separation (|coef| > 15)");
  return out;
}

EffectEstimate marginal_risk_ratio(const PotentialOutcomePair& pair) {
  if (pair.mu0 == 0.0)
    throw DataError("risk ratio undefined: mean potential outcome under control is zero");
  EffectEstimate est;
  est.estimand = Estimand::risk_ratio;
  est.method = "g-comp";
  est.value = pair.mu1 / pair.mu0;
  est.mu1 = pair.mu1;
  est.mu0 = pair.mu0;
  est.details["excess_risk_pct"] = 100.0 * (est.value - 1.0);
  return est;
}

}  // namespace ce
