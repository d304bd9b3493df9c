#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "ce/design.hpp"
#include "ce/gformula.hpp"
#include "ce/glm.hpp"
#include "ce/rng.hpp"
#include "ce/simulate.hpp"
#include "ce/stats.hpp"
#include "ce/tmle.hpp"
#include "oracles.hpp"

using namespace ce;

TEST_CASE("the targeted fit satisfies its structural identities", "[tmle]") {
  const DgpSample s = generate_dgp(1500, 5);
  const TmleState st = tmle_fit(s.table);
  const auto n = s.table.n();

  REQUIRE(st.q1w_star.size() == n);
  REQUIRE((st.q1w_star.array() > 0.0).all());
  REQUIRE((st.q1w_star.array() < 1.0).all());
  REQUIRE((st.q0w_star.array() > 0.0).all());
  REQUIRE((st.q0w_star.array() < 1.0).all());

  REQUIRE(st.mu1 == Catch::Approx(st.q1w_star.mean()).margin(1e-12));
  REQUIRE(st.mu0 == Catch::Approx(st.q0w_star.mean()).margin(1e-12));
  REQUIRE(st.ate == Catch::Approx(st.mu1 - st.mu0).margin(1e-12));

  // The fluctuation solves the clever-covariate estimating equations, which
  // makes the influence-curve mean vanish.
  REQUIRE(std::fabs(st.score1) < 1e-8);
  REQUIRE(std::fabs(st.score2) < 1e-8);
  REQUIRE(std::fabs(st.ic.mean()) < 1e-8);
  REQUIRE((st.ic - (st.ic1 - st.ic0)).lpNorm<Eigen::Infinity>() < 1e-12);
  REQUIRE(st.var_ic > 0.0);
}

TEST_CASE("influence-curve inference uses the 1.96 convention", "[tmle]") {
  const DgpSample s = generate_dgp(800, 9);
  const TmleState st = tmle_fit(s.table);
  const IcInference inf = ic_variance(st);
  REQUIRE(inf.se == Catch::Approx(std::sqrt(st.var_ic)).margin(1e-15));
  REQUIRE(inf.lower == Catch::Approx(st.ate - 1.96 * inf.se).margin(1e-15));
  REQUIRE(inf.upper == Catch::Approx(st.ate + 1.96 * inf.se).margin(1e-15));

  const EffectEstimate est = tmle_ate(st);
  REQUIRE(est.method == "tmle");
  REQUIRE(est.ci.has_value());
  REQUIRE(est.ci->kind == "ic");
  REQUIRE(est.details.at("eps1") == st.eps1);
}

TEST_CASE("skip_targeting reports the initial pooled-regression estimate", "[tmle]") {
  const DgpSample s = generate_dgp(1000, 13);
  TmleOptions opt;
  opt.skip_targeting = true;
  const TmleState st = tmle_fit(s.table, opt);
  REQUIRE(st.eps1 == 0.0);
  REQUIRE(st.eps2 == 0.0);

  // Identical to standardizing the pooled main-terms logistic fit.
  const ModelSpec model = ModelSpec::main_terms(s.table, true);
  GlmSpec gspec;
  gspec.family = Family::logistic;
  const FittedGlm fit = fit_logistic(model.design(s.table), s.table.y(), gspec);
  const double mu1 = predict(fit, model.design(s.table, 1.0)).mean();
  const double mu0 = predict(fit, model.design(s.table, 0.0)).mean();
  REQUIRE(st.mu1 == Catch::Approx(mu1).margin(1e-10));
  REQUIRE(st.mu0 == Catch::Approx(mu0).margin(1e-10));
}

TEST_CASE("saturated initial fits leave nothing to target", "[tmle]") {
  Rng rng(501);
  for (int rep = 0; rep < 10; ++rep) {
    const ObservationTable t = oracle::random_mixed_table(rng);
    TmleOptions opt;
    opt.outcome_spec = ModelSpec::saturated(t, true);
    opt.propensity_spec = ModelSpec::saturated(t, false);
    const TmleState st = tmle_fit(t, opt);
    REQUIRE(std::fabs(st.eps1) < 1e-6);
    REQUIRE(std::fabs(st.eps2) < 1e-6);
    REQUIRE(st.ate == Catch::Approx(oracle::np_ate(t)).margin(1e-9));
  }
}

TEST_CASE("targeting moves the estimate when the initial fit is misspecified", "[tmle]") {
  const DgpSample s = generate_dgp(4000, 21);
  TmleOptions skip;
  skip.skip_targeting = true;
  const TmleState initial = tmle_fit(s.table, skip);
  const TmleState targeted = tmle_fit(s.table);
  REQUIRE(initial.ate != targeted.ate);
  REQUIRE((targeted.eps1 != 0.0 || targeted.eps2 != 0.0));
}

TEST_CASE("cross-validation prefers the interaction learner when it is real", "[tmle]") {
  // Outcome truth has a strong w1*w2 interaction; main terms cannot fit it.
  int wins = 0;
  const int reps = 10;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(600 + static_cast<std::uint64_t>(rep));
    const Eigen::Index n = 4000;
    Eigen::VectorXd y(n), a(n);
    Eigen::MatrixXd w(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      w(i, 0) = rng.bernoulli(0.5) ? 1.0 : 0.0;
      w(i, 1) = rng.bernoulli(0.5) ? 1.0 : 0.0;
      a[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
      y[i] = rng.bernoulli(expit(-1.0 + 3.0 * w(i, 0) * w(i, 1))) ? 1.0 : 0.0;
    }
    const ObservationTable t = ObservationTable::from_columns(
        y, a, w, {{"w1", ColumnKind::binary}, {"w2", ColumnKind::binary}});
    LearnerMenu menu;
    menu.candidates = {LearnerKind::main_terms, LearnerKind::interactions};
    menu.folds = 5;
    const CvChoice c = cv_select(t, menu, CvTarget::outcome, 77);
    REQUIRE(c.risks.size() == 2);
    if (c.kind == LearnerKind::interactions) ++wins;
  }
  REQUIRE(wins >= 8);
}

TEST_CASE("cv risks are ordered and the winner is re-derived on all rows", "[tmle]") {
  const DgpSample s = generate_dgp(2000, 31);
  LearnerMenu menu;
  menu.folds = 10;
  const CvChoice c = cv_select(s.table, menu, CvTarget::propensity, 3);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : c.risks) {
    REQUIRE_FALSE(r.failed);
    REQUIRE(std::isfinite(r.risk));
    best = std::min(best, r.risk);
  }
  for (const auto& r : c.risks)
    if (r.kind == c.kind) REQUIRE(r.risk == best);
  REQUIRE_FALSE(c.spec.uses_treatment());
}

TEST_CASE("cv selection is deterministic in the seed", "[tmle]") {
  const DgpSample s = generate_dgp(1200, 37);
  TmleOptions opt;
  LearnerMenu menu;
  menu.candidates = {LearnerKind::main_terms, LearnerKind::interactions};
  opt.learners = menu;
  opt.seed = 11;
  const double first = tmle_fit(s.table, opt).ate;
  const double second = tmle_fit(s.table, opt).ate;
  REQUIRE(first == second);
}

TEST_CASE("cv needs enough rows for the folds", "[tmle]") {
  const DgpSample s = generate_dgp(12, 41);
  LearnerMenu menu;
  menu.folds = 10;
  REQUIRE_THROWS_AS(cv_select(s.table, menu, CvTarget::outcome, 1), DataError);
}

TEST_CASE("ratio measures come from the targeted means", "[tmle]") {
  const DgpSample s = generate_dgp(2500, 43);
  const TmleState st = tmle_fit(s.table);
  const auto [rr, orat] = tmle_rr_or(st);

  REQUIRE(rr.value == Catch::Approx(st.mu1 / st.mu0).margin(1e-12));
  const double odds1 = st.mu1 / (1.0 - st.mu1);
  const double odds0 = st.mu0 / (1.0 - st.mu0);
  REQUIRE(orat.value == Catch::Approx(odds1 / odds0).margin(1e-12));

  REQUIRE(rr.ci->lower < rr.value);
  REQUIRE(rr.value < rr.ci->upper);
  REQUIRE(orat.ci->lower < orat.value);
  REQUIRE(orat.value < orat.ci->upper);
  // The interval endpoints multiply to the square of the point estimate
  // (symmetric on the log scale).
  REQUIRE(rr.ci->lower * rr.ci->upper == Catch::Approx(rr.value * rr.value).epsilon(1e-9));
  REQUIRE(rr.details.at("excess_risk_pct") ==
          Catch::Approx(100.0 * (rr.value - 1.0)).margin(1e-10));
}

TEST_CASE("fractional outcomes flow through the whole procedure", "[tmle]") {
  const DgpSample s = generate_dgp(600, 47);
  REQUIRE((s.table.y().array() > 0.0).all());
  REQUIRE((s.table.y().array() < 1.0).all());
  REQUIRE_NOTHROW(tmle_fit(s.table));
}

TEST_CASE("outcomes outside [0, 1] are rejected", "[tmle]") {
  Eigen::VectorXd y(4), a(4);
  Eigen::MatrixXd w(4, 1);
  y << 0.2, 1.4, 0.6, 0.8;
  a << 0, 1, 0, 1;
  w << 1, 0, 0, 1;
  const ObservationTable t = ObservationTable::from_columns_unchecked(
      y, a, w, {{"c", ColumnKind::binary}});
  REQUIRE_THROWS_AS(tmle_fit(t), DataError);
}
