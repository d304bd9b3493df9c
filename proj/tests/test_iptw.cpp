#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "ce/gformula.hpp"
#include "ce/iptw.hpp"
#include "ce/simulate.hpp"
#include "ce/stats.hpp"
#include "ce/table.hpp"
#include "oracles.hpp"

using namespace ce;

namespace {

ObservationTable toy10() {
  CsvSpec spec;
  spec.outcome = "Y";
  spec.treatment = "A";
  spec.confounders = {"C"};
  return load_csv(std::string(CE_FIXTURE_DIR) + "/toy10.csv", spec).table;
}

}  // namespace

TEST_CASE("propensity with no confounders is the treated fraction", "[iptw]") {
  Eigen::VectorXd y(5), a(5);
  Eigen::MatrixXd w(5, 0);
  y << 0, 1, 1, 0, 1;
  a << 1, 0, 1, 1, 0;
  const ObservationTable t = ObservationTable::from_columns(y, a, w, {});
  const PropensityScores ps = fit_propensity(t);
  REQUIRE((ps.g.array() - 0.6).abs().maxCoeff() < 1e-9);
  REQUIRE(ps.g_marginal == Catch::Approx(0.6).margin(1e-9));
}

TEST_CASE("propensity model may not contain the treatment", "[iptw]") {
  const ObservationTable t = toy10();
  REQUIRE_THROWS_AS(fit_propensity(t, ModelSpec::main_terms(t, true)), ConfigError);
}

TEST_CASE("weights require scores strictly inside (0, 1)", "[iptw]") {
  PropensityScores ps;
  ps.g = Eigen::VectorXd::Constant(3, 0.5);
  ps.g[1] = 0.0;
  ps.g_marginal = 0.5;
  Eigen::VectorXd a(3);
  a << 1, 0, 1;
  REQUIRE_THROWS_AS(make_weights(ps, a, WeightKind::unstabilized), PositivityError);
}

TEST_CASE("weight formulas follow the definitions", "[iptw]") {
  PropensityScores ps;
  ps.g = Eigen::VectorXd(4);
  ps.g << 0.25, 0.25, 0.8, 0.8;
  ps.g_marginal = 0.5;
  Eigen::VectorXd a(4);
  a << 1, 0, 1, 0;

  const WeightSet u = make_weights(ps, a, WeightKind::unstabilized);
  REQUIRE(u.w[0] == Catch::Approx(4.0));          // 1 / 0.25
  REQUIRE(u.w[1] == Catch::Approx(4.0 / 3.0));    // 1 / 0.75
  REQUIRE(u.w[2] == Catch::Approx(1.25));         // 1 / 0.8
  REQUIRE(u.w[3] == Catch::Approx(5.0));          // 1 / 0.2

  const WeightSet s = make_weights(ps, a, WeightKind::stabilized);
  REQUIRE(s.w[0] == Catch::Approx(2.0));          // 0.5 / 0.25
  REQUIRE(s.w[1] == Catch::Approx(2.0 / 3.0));    // 0.5 / 0.75
  REQUIRE(s.w[2] == Catch::Approx(0.625));        // 0.5 / 0.8
  REQUIRE(s.w[3] == Catch::Approx(2.5));          // 0.5 / 0.2
}

TEST_CASE("saturated propensity makes every weighting estimator non-parametric", "[iptw]") {
  const ObservationTable t = toy10();
  const double truth = np_gformula_ate(t).value;
  const PropensityScores ps = fit_propensity(t);

  for (WeightKind kind : {WeightKind::unstabilized, WeightKind::stabilized}) {
    const WeightSet ws = make_weights(ps, t.a(), kind);
    REQUIRE(ht_ate(t, ws, true).value == Catch::Approx(truth).margin(1e-8));
    REQUIRE(msm_fit(t, ws).value == Catch::Approx(truth).margin(1e-8));
    REQUIRE(iptw_ra_ate(t, ws, Family::linear).estimate.value ==
            Catch::Approx(truth).margin(1e-8));
  }
  // Raw Horvitz-Thompson also collapses here because sum(a/g) = n exactly.
  const WeightSet u = make_weights(ps, t.a(), WeightKind::unstabilized);
  REQUIRE(ht_ate(t, u, false).value == Catch::Approx(truth).margin(1e-8));
}

TEST_CASE("the msm coefficient is exactly the hajek contrast", "[iptw]") {
  Rng rng(307);
  for (int rep = 0; rep < 10; ++rep) {
    const DgpSample s = generate_dgp(300, 1000 + static_cast<std::uint64_t>(rep));
    const PropensityScores ps = fit_propensity(s.table);
    const WeightSet ws = make_weights(ps, s.table.a(), WeightKind::stabilized);
    const EffectEstimate hajek = ht_ate(s.table, ws, true);
    const EffectEstimate msm = msm_fit(s.table, ws);
    REQUIRE(msm.value == Catch::Approx(hajek.value).margin(1e-10));
    REQUIRE(msm.mu0 == Catch::Approx(hajek.mu0).margin(1e-10));
    REQUIRE(msm.se.has_value());  // sandwich SE comes with the msm route
  }
}

TEST_CASE("stabilized weights sum close to the sample size", "[iptw]") {
  const DgpSample s = generate_dgp(2000, 99);
  const PropensityScores ps = fit_propensity(s.table);
  const WeightSet st = make_weights(ps, s.table.a(), WeightKind::stabilized);
  REQUIRE(st.w.sum() == Catch::Approx(2000.0).epsilon(0.10));
  const WeightSet un = make_weights(ps, s.table.a(), WeightKind::unstabilized);
  REQUIRE(un.w.sum() == Catch::Approx(4000.0).epsilon(0.10));
  // Stabilizing shrinks the spread of the weights.
  REQUIRE(variance(st.w) < variance(un.w));
}

TEST_CASE("weight truncation clamps at type-7 percentiles", "[iptw]") {
  WeightSet ws;
  ws.w = Eigen::VectorXd(4);
  ws.w << 1, 1, 1, 100;
  const WeightSet tr = truncate_weights(ws, 0.0, 75.0);
  REQUIRE(tr.truncated);
  REQUIRE(tr.w.maxCoeff() == Catch::Approx(25.75).margin(1e-12));
  REQUIRE(tr.w.minCoeff() == 1.0);
  REQUIRE_THROWS_AS(truncate_weights(ws, 80.0, 20.0), ConfigError);
}

TEST_CASE("extreme scores are counted but not altered", "[iptw]") {
  Eigen::VectorXd y(200), a(200);
  Eigen::MatrixXd w(200, 1);
  Rng rng(311);
  for (Eigen::Index i = 0; i < 200; ++i) {
    w(i, 0) = rng.normal();
    a[i] = rng.bernoulli(expit(4.0 * w(i, 0))) ? 1.0 : 0.0;
    y[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }
  const ObservationTable t =
      ObservationTable::from_columns(y, a, w, {{"x", ColumnKind::continuous}});
  const PropensityScores ps = fit_propensity(t);
  REQUIRE(ps.n_below + ps.n_above > 0);
  REQUIRE(ps.g.minCoeff() > 0.0);
  REQUIRE(ps.g.maxCoeff() < 1.0);
}

TEST_CASE("hajek and raw horvitz-thompson disagree away from saturation", "[iptw]") {
  const DgpSample s = generate_dgp(500, 17);
  const PropensityScores ps = fit_propensity(s.table);
  const WeightSet ws = make_weights(ps, s.table.a(), WeightKind::unstabilized);
  const EffectEstimate hajek = ht_ate(s.table, ws, true);
  const EffectEstimate raw = ht_ate(s.table, ws, false);
  REQUIRE(hajek.value != raw.value);
  REQUIRE(hajek.method == "iptw");
  REQUIRE(raw.method == "iptw-ht");
}

TEST_CASE("weighted per-arm regression matches the oracle at saturation", "[iptw]") {
  Rng rng(313);
  for (int rep = 0; rep < 10; ++rep) {
    const ObservationTable t = oracle::random_mixed_table(rng);
    const PropensityScores ps = fit_propensity(t);
    const WeightSet ws = make_weights(ps, t.a(), WeightKind::stabilized);
    REQUIRE(iptw_ra_ate(t, ws, Family::linear).estimate.value ==
            Catch::Approx(oracle::np_ate(t)).margin(1e-8));
  }
}
