#include "ce/tmle.hpp"

#include <algorithm>
#include <cmath>

#include "ce/rng.hpp"
#include "ce/stats.hpp"

namespace ce {
namespace {

ModelSpec spec_for(LearnerKind kind, const ObservationTable& table,
                   const Eigen::Ref<const Eigen::VectorXd>& response, bool with_treatment) {
  switch (kind) {
    case LearnerKind::main_terms:
      return ModelSpec::main_terms(table, with_treatment);
    case LearnerKind::interactions:
      return ModelSpec::with_interactions(table, with_treatment);
    case LearnerKind::stepwise:
      return forward_stepwise(table, response, with_treatment);
  }
  throw ConfigError("unknown learner kind");
}

const char* learner_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::main_terms: return "main-terms";
    case LearnerKind::interactions: return "interactions";
    case LearnerKind::stepwise: return "stepwise";
  }
  return "?";
}

// Mean negative Bernoulli log-likelihood of predictions p for outcomes y.
double bernoulli_risk(const Eigen::VectorXd& y, const Eigen::VectorXd& p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double pc = clamp_probability(p[i]);
    s -= y[i] * std::log(pc) + (1.0 - y[i]) * std::log(1.0 - pc);
  }
  return s / static_cast<double>(y.size());
}

}  // namespace

CvChoice cv_select(const ObservationTable& table, const LearnerMenu& menu, CvTarget target,
                   std::uint64_t seed) {
  if (menu.candidates.empty()) throw ConfigError("empty learner menu");
  if (menu.folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (table.n() < 2 * menu.folds) throw DataError("too few rows for the requested folds");

  const bool with_treatment = target == CvTarget::outcome;
  const Eigen::VectorXd& response = target == CvTarget::outcome ? table.y() : table.a();

  // Stratified fold assignment: shuffle each arm, deal round-robin.
  std::vector<int> fold(static_cast<std::size_t>(table.n()), 0);
  {
    Rng rng = Rng(seed).split(0x666f6c64);  // "fold"
    std::vector<Eigen::Index> treated, control;
    for (Eigen::Index i = 0; i < table.n(); ++i)
      (table.a()[i] == 1.0 ? treated : control).push_back(i);
    for (auto* arm : {&treated, &control}) {
      for (std::size_t i = arm->size(); i > 1; --i)
        std::swap((*arm)[i - 1], (*arm)[rng.next_below(i)]);
      for (std::size_t i = 0; i < arm->size(); ++i)
        fold[static_cast<std::size_t>((*arm)[i])] = static_cast<int>(i % menu.folds);
    }
  }

  CvChoice choice;
  double best_risk = std::numeric_limits<double>::infinity();
  int best = -1;
  for (std::size_t c = 0; c < menu.candidates.size(); ++c) {
    const LearnerKind kind = menu.candidates[c];
    CvCandidateRisk row;
    row.kind = kind;
    double total_ll = 0.0;
    try {
      for (int v = 0; v < menu.folds; ++v) {
        std::vector<Eigen::Index> train, test;
        for (Eigen::Index i = 0; i < table.n(); ++i)
          (fold[static_cast<std::size_t>(i)] == v ? test : train).push_back(i);
        const ObservationTable train_t = table.select_rows(train);
        const ObservationTable test_t = table.select_rows(test);
        const Eigen::VectorXd& train_y =
            target == CvTarget::outcome ? train_t.y() : train_t.a();
        const Eigen::VectorXd& test_y = target == CvTarget::outcome ? test_t.y() : test_t.a();
        const ModelSpec spec = spec_for(kind, train_t, train_y, with_treatment);
        GlmSpec gspec;
        gspec.family = Family::logistic;
        const FittedGlm fit = fit_logistic(spec.design(train_t), train_y, gspec);
        const Eigen::VectorXd pred = predict(fit, spec.design(test_t));
        total_ll += bernoulli_risk(test_y, pred) * static_cast<double>(test_t.n());
      }
      row.risk = total_ll / static_cast<double>(table.n());
    } catch (const std::runtime_error& e) {
      row.failed = true;
      choice.warnings.push_back(std::string("candidate ") + learner_name(kind) +
                                " dropped: " + e.what());
    }
    choice.risks.push_back(row);
    if (!row.failed && row.risk < best_risk) {
      best_risk = row.risk;
      best = static_cast<int>(c);
    }
  }
  if (best < 0) throw ConvergenceError("every learner candidate failed cross-validation");
  choice.kind = menu.candidates[static_cast<std::size_t>(best)];
  choice.spec = spec_for(choice.kind, table, response, with_treatment);
  return choice;
}

TmleState tmle_fit(const ObservationTable& table, const TmleOptions& options) {
  const auto [n1, n0] = arm_counts(table);
  if (n1 == 0 || n0 == 0) throw DataError("both treatment arms must be non-empty");
  if (((table.y().array() < 0.0) || (table.y().array() > 1.0)).any())
    throw DataError("outcome must lie in [0, 1]");
  const auto n = table.n();
  const auto& y = table.y();
  const auto& a = table.a();

  TmleState st;

  // Initial outcome model: pooled logistic of Y on treatment and confounders.
  ModelSpec q_model = ModelSpec::main_terms(table, /*with_treatment=*/true);
  if (options.outcome_spec) {
    q_model = *options.outcome_spec;
  } else if (options.learners) {
    const CvChoice c = cv_select(table, *options.learners, CvTarget::outcome,
                                 mix64(options.seed ^ 0x71));
    q_model = c.spec;
    for (const auto& w : c.warnings) st.warnings.push_back(w);
    if (!q_model.uses_treatment())
      st.warnings.push_back("selected outcome model excludes the treatment");
  }
  {
    GlmSpec gspec;
    gspec.family = Family::logistic;
    gspec.term_names = q_model.term_names(table);
    const FittedGlm fit = fit_logistic(q_model.design(table), y, gspec);
    if (fit.separation_warning)
      st.warnings.push_back("initial outcome regression shows quasi-separation");
    st.qaw = fit.fitted_values;
    st.q1w = predict(fit, q_model.design(table, 1.0));
    st.q0w = predict(fit, q_model.design(table, 0.0));
  }

  // Propensity model for the clever covariates.
  ModelSpec g_model = ModelSpec::main_terms(table, /*with_treatment=*/false);
  if (options.propensity_spec) {
    g_model = *options.propensity_spec;
  } else if (options.learners) {
    const CvChoice c = cv_select(table, *options.learners, CvTarget::propensity,
                                 mix64(options.seed ^ 0x67));
    g_model = c.spec;
    for (const auto& w : c.warnings) st.warnings.push_back(w);
  }
  {
    GlmSpec gspec;
    gspec.family = Family::logistic;
    gspec.term_names = g_model.term_names(table);
    const FittedGlm fit = fit_logistic(g_model.design(table), a, gspec);
    if (fit.separation_warning)
      st.warnings.push_back(
          "propensity model shows quasi-separation: overlap is suspect");
    st.g = fit.fitted_values;
  }
  st.g_below = (st.g.array() < 0.025).count();
  st.g_above = (st.g.array() > 0.975).count();

  st.h1w = (a.array() / st.g.array()).matrix();
  st.h0w = ((1.0 - a.array()) / (1.0 - st.g.array())).matrix();

  // Fluctuation: intercept-free logistic of Y on the clever covariates with
  // the initial predictions as offset.
  Eigen::VectorXd logit_qaw(n), logit_q1w(n), logit_q0w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    logit_qaw[i] = logit(clamp_probability(st.qaw[i]));
    logit_q1w[i] = logit(clamp_probability(st.q1w[i]));
    logit_q0w[i] = logit(clamp_probability(st.q0w[i]));
  }
  if (options.skip_targeting) {
    st.eps1 = 0.0;
    st.eps2 = 0.0;
  } else {
    Eigen::MatrixXd h(n, 2);
    h.col(0) = st.h1w;
    h.col(1) = st.h0w;
    GlmSpec gspec;
    gspec.family = Family::logistic;
    gspec.include_intercept = false;
    gspec.offset = logit_qaw;
    gspec.term_names = {"h1w", "h0w"};
    const FittedGlm fluct = fit_logistic(h, y, gspec);
    st.eps1 = fluct.coefficients[0];
    st.eps2 = fluct.coefficients[1];
  }

  // Targeted predictions: shift each counterfactual logit by eps over the
  // relevant propensity.
  st.q1w_star.resize(n);
  st.q0w_star.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    st.q1w_star[i] = expit(logit_q1w[i] + st.eps1 / st.g[i]);
    st.q0w_star[i] = expit(logit_q0w[i] + st.eps2 / (1.0 - st.g[i]));
  }
  st.mu1 = st.q1w_star.mean();
  st.mu0 = st.q0w_star.mean();
  st.ate = st.mu1 - st.mu0;

  // Influence curve and solved scores at the targeted fit.
  st.ic.resize(n);
  st.ic1.resize(n);
  st.ic0.resize(n);
  double s1 = 0.0, s2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double qs = a[i] == 1.0 ? st.q1w_star[i] : st.q0w_star[i];
    st.ic1[i] = st.h1w[i] * (y[i] - st.q1w_star[i]) + st.q1w_star[i] - st.mu1;
    st.ic0[i] = st.h0w[i] * (y[i] - st.q0w_star[i]) + st.q0w_star[i] - st.mu0;
    st.ic[i] = st.ic1[i] - st.ic0[i];
    s1 += st.h1w[i] * (y[i] - qs);
    s2 += st.h0w[i] * (y[i] - qs);
  }
  st.score1 = s1 / static_cast<double>(n);
  st.score2 = s2 / static_cast<double>(n);
  st.var_ic = variance(st.ic) / static_cast<double>(n);
  if (st.g_below + st.g_above > 0)
    st.warnings.push_back(std::to_string(st.g_below + st.g_above) +
                          " propensity score(s) outside [0.025, 0.975]");
  return st;
}

IcInference ic_variance(const TmleState& state) {
  IcInference inf;
  inf.se = std::sqrt(state.var_ic);
  inf.lower = state.ate - 1.96 * inf.se;
  inf.upper = state.ate + 1.96 * inf.se;
  return inf;
}

EffectEstimate tmle_ate(const TmleState& state) {
  const IcInference inf = ic_variance(state);
  EffectEstimate est;
  est.estimand = Estimand::ate;
  est.method = "tmle";
  est.value = state.ate;
  est.se = inf.se;
  est.ci = ConfidenceInterval{inf.lower, inf.upper, 0.95, "ic"};
  est.mu1 = state.mu1;
  est.mu0 = state.mu0;
  est.details["eps1"] = state.eps1;
  est.details["eps2"] = state.eps2;
  est.details["mean_ic"] = state.ic.mean();
  est.details["score_h1w"] = state.score1;
  est.details["score_h0w"] = state.score2;
  est.details["ps_below_0.025"] = static_cast<double>(state.g_below);
  est.details["ps_above_0.975"] = static_cast<double>(state.g_above);
  est.warnings = state.warnings;
  return est;
}

EffectEstimate tmle_ate(const ObservationTable& table, const TmleOptions& options) {
  return tmle_ate(tmle_fit(table, options));
}

std::pair<EffectEstimate, EffectEstimate> tmle_rr_or(const TmleState& state) {
  const auto n = state.ic.size();
  if (state.mu0 <= 0.0 || state.mu1 <= 0.0)
    throw DataError("ratio measures need positive potential-outcome means");
  if (state.mu0 >= 1.0 || state.mu1 >= 1.0)
    throw DataError("odds ratio needs potential-outcome means below 1");

  // Delta method on the log scale: the log-ratio influence curves are
  // linear combinations of the arm-specific pieces.
  const double nn = static_cast<double>(n);
  const Eigen::VectorXd ic_log_rr = state.ic1 / state.mu1 - state.ic0 / state.mu0;
  const Eigen::VectorXd ic_log_or = state.ic1 / (state.mu1 * (1.0 - state.mu1)) -
                                    state.ic0 / (state.mu0 * (1.0 - state.mu0));

  EffectEstimate rr;
  rr.estimand = Estimand::risk_ratio;
  rr.method = "tmle";
  rr.value = state.mu1 / state.mu0;
  const double se_log_rr = std::sqrt(variance(ic_log_rr) / nn);
  rr.se = se_log_rr * rr.value;  // delta-method SE on the ratio scale
  rr.ci = ConfidenceInterval{std::exp(std::log(rr.value) - 1.96 * se_log_rr),
                             std::exp(std::log(rr.value) + 1.96 * se_log_rr), 0.95, "ic-log"};
  rr.mu1 = state.mu1;
  rr.mu0 = state.mu0;
  rr.details["excess_risk_pct"] = 100.0 * (rr.value - 1.0);

  EffectEstimate orr;
  orr.estimand = Estimand::odds_ratio;
  orr.method = "tmle";
  orr.value = (state.mu1 / (1.0 - state.mu1)) / (state.mu0 / (1.0 - state.mu0));
  const double se_log_or = std::sqrt(variance(ic_log_or) / nn);
  orr.se = se_log_or * orr.value;
  orr.ci = ConfidenceInterval{std::exp(std::log(orr.value) - 1.96 * se_log_or),
                              std::exp(std::log(orr.value) + 1.96 * se_log_or), 0.95, "ic-log"};
  orr.mu1 = state.mu1;
  orr.mu0 = state.mu0;
  return {rr, orr};
}

}  // namespace ce
