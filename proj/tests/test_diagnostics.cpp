#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "ce/diagnostics.hpp"
#include "ce/rng.hpp"
#include "ce/simulate.hpp"
#include "ce/stats.hpp"
#include "ce/table.hpp"

using namespace ce;

namespace {

WeightSet unit_weights(Eigen::Index n) {
  WeightSet ws;
  ws.w = Eigen::VectorXd::Ones(n);
  return ws;
}

double trapezoid(const DensityCurve& c) {
  double area = 0.0;
  for (Eigen::Index i = 1; i < c.x.size(); ++i)
    area += 0.5 * (c.density[i] + c.density[i - 1]) * (c.x[i] - c.x[i - 1]);
  return area;
}

}  // namespace

TEST_CASE("equal weights reproduce the raw columns exactly", "[diagnostics]") {
  const DgpSample s = generate_dgp(800, 301);
  const BalanceReport rep = balance_table(s.table, unit_weights(s.table.n()));
  REQUIRE(rep.rows.size() == 4);
  for (const auto& row : rep.rows) {
    REQUIRE(row.std_diff_weighted == Catch::Approx(row.std_diff_raw).margin(1e-12));
    REQUIRE(row.var_ratio_weighted == Catch::Approx(row.var_ratio_raw).margin(1e-12));
    REQUIRE_FALSE(row.zero_variance);
  }
  REQUIRE(rep.weights.mean == 1.0);
  REQUIRE(rep.weights.min == 1.0);
  REQUIRE(rep.weights.max == 1.0);
}

TEST_CASE("standardized differences standardize once against the pooled sample", "[diagnostics]") {
  // Hand-checkable table: one confounder, arms {0, 2} and {2, 4}.
  Eigen::VectorXd y(4), a(4);
  Eigen::MatrixXd w(4, 1);
  y << 0, 1, 0, 1;
  a << 1, 1, 0, 0;
  w << 0, 2, 2, 4;
  const ObservationTable t =
      ObservationTable::from_columns(y, a, w, {{"x", ColumnKind::integer}});
  const BalanceReport rep = balance_table(t, unit_weights(4));
  // Pooled mean 2, pooled sd sqrt(8/3); arm means 1 and 3 -> diff -2/sd.
  const double sd_pooled = std::sqrt(8.0 / 3.0);
  REQUIRE(rep.rows[0].std_diff_raw == Catch::Approx(-2.0 / sd_pooled).margin(1e-12));
  // Arm variances both 2 -> ratio 1.
  REQUIRE(rep.rows[0].var_ratio_raw == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("weighting toward balance shrinks the standardized difference", "[diagnostics]") {
  const DgpSample s = generate_dgp(2000, 303);
  const PropensityScores ps = fit_propensity(s.table);
  const WeightSet ws = make_weights(ps, s.table.a(), WeightKind::stabilized);
  const BalanceReport raw = balance_table(s.table, unit_weights(s.table.n()));
  const BalanceReport weighted = balance_table(s.table, ws);
  double raw_total = 0.0, weighted_total = 0.0;
  for (std::size_t j = 0; j < raw.rows.size(); ++j) {
    raw_total += std::fabs(raw.rows[j].std_diff_raw);
    weighted_total += std::fabs(weighted.rows[j].std_diff_weighted);
  }
  REQUIRE(weighted_total < raw_total);
}

TEST_CASE("stabilizing rescales weights without changing weighted balance", "[diagnostics]") {
  // Within-arm normalization makes the weighted columns invariant to the
  // constant numerator.
  const DgpSample s = generate_dgp(900, 307);
  const PropensityScores ps = fit_propensity(s.table);
  const WeightSet stab = make_weights(ps, s.table.a(), WeightKind::stabilized);
  const WeightSet unstab = make_weights(ps, s.table.a(), WeightKind::unstabilized);
  const BalanceReport a = balance_table(s.table, stab);
  const BalanceReport b = balance_table(s.table, unstab);
  for (std::size_t j = 0; j < a.rows.size(); ++j) {
    REQUIRE(a.rows[j].std_diff_weighted ==
            Catch::Approx(b.rows[j].std_diff_weighted).margin(1e-10));
    REQUIRE(a.rows[j].var_ratio_weighted ==
            Catch::Approx(b.rows[j].var_ratio_weighted).margin(1e-10));
  }
}

TEST_CASE("a constant covariate is flagged instead of divided by", "[diagnostics]") {
  Eigen::VectorXd y(6), a(6);
  Eigen::MatrixXd w(6, 2);
  y << 0, 1, 0, 1, 0, 1;
  a << 0, 1, 0, 1, 0, 1;
  w.col(0).setConstant(3.0);
  w.col(1) << 0, 1, 0, 1, 1, 0;
  const ObservationTable t = ObservationTable::from_columns(
      y, a, w, {{"k", ColumnKind::integer}, {"b", ColumnKind::binary}});
  const BalanceReport rep = balance_table(t, unit_weights(6));
  REQUIRE(rep.rows[0].zero_variance);
  REQUIRE(std::isnan(rep.rows[0].var_ratio_raw));
  REQUIRE(rep.rows[0].std_diff_raw == 0.0);
  REQUIRE_FALSE(rep.rows[1].zero_variance);
  REQUIRE_FALSE(rep.warnings.empty());
}

TEST_CASE("weight summary quantiles are type 7", "[diagnostics]") {
  Eigen::VectorXd y(4), a(4);
  Eigen::MatrixXd w(4, 1);
  y << 0, 1, 1, 0;
  a << 0, 1, 0, 1;
  w << 1, 0, 1, 0;
  const ObservationTable t =
      ObservationTable::from_columns(y, a, w, {{"x", ColumnKind::binary}});
  WeightSet ws;
  ws.w = Eigen::VectorXd(4);
  ws.w << 1, 1, 1, 100;
  const BalanceReport rep = balance_table(t, ws);
  REQUIRE(rep.weights.p75 == Catch::Approx(25.75).margin(1e-12));
  REQUIRE(rep.weights.min == 1.0);
  REQUIRE(rep.weights.max == 100.0);
  REQUIRE(rep.weights.mean == Catch::Approx(103.0 / 4.0));
}

TEST_CASE("overlap densities integrate to one per arm", "[diagnostics]") {
  // Scores well inside (0, 1), so the [0, 1] grid clip sheds no kernel mass.
  Rng rng(313);
  const Eigen::Index n = 1200;
  Eigen::VectorXd g(n), a(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    g[i] = rng.uniform(0.25, 0.75);
  }
  const auto [treated, control] = overlap_densities(g, a);
  REQUIRE(treated.arm == 1);
  REQUIRE(control.arm == 0);
  REQUIRE(treated.x.size() == 512);
  REQUIRE(treated.x.isApprox(control.x));
  REQUIRE(trapezoid(treated) == Catch::Approx(1.0).margin(0.02));
  REQUIRE(trapezoid(control) == Catch::Approx(1.0).margin(0.02));
  REQUIRE(treated.x.minCoeff() >= 0.0);
  REQUIRE(treated.x.maxCoeff() <= 1.0);
}

TEST_CASE("boundary-hugging scores keep a finite clipped density", "[diagnostics]") {
  // The generated treatment process piles scores near 1; the grid stays
  // inside [0, 1] and the curve loses only the clipped tail mass.
  const DgpSample s = generate_dgp(1500, 313);
  const PropensityScores ps = fit_propensity(s.table);
  const auto [treated, control] = overlap_densities(ps.g, s.table.a());
  REQUIRE(treated.x.minCoeff() >= 0.0);
  REQUIRE(treated.x.maxCoeff() <= 1.0);
  REQUIRE(treated.density.allFinite());
  REQUIRE(control.density.allFinite());
  REQUIRE(treated.density.minCoeff() >= 0.0);
  const double area_t = trapezoid(treated);
  const double area_c = trapezoid(control);
  REQUIRE(area_t > 0.85);
  REQUIRE(area_t <= 1.0 + 1e-9);
  REQUIRE(area_c > 0.85);
  REQUIRE(area_c <= 1.0 + 1e-9);
}

TEST_CASE("well-separated arms show almost no overlap", "[diagnostics]") {
  Rng rng(317);
  const Eigen::Index n = 400;
  Eigen::VectorXd g(n), a(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a[i] = i < n / 2 ? 1.0 : 0.0;
    g[i] = a[i] == 1.0 ? rng.uniform(0.88, 0.95) : rng.uniform(0.05, 0.12);
  }
  const auto [treated, control] = overlap_densities(g, a);
  double overlap = 0.0;
  for (Eigen::Index i = 1; i < treated.x.size(); ++i)
    overlap += 0.5 *
               (std::min(treated.density[i], control.density[i]) +
                std::min(treated.density[i - 1], control.density[i - 1])) *
               (treated.x[i] - treated.x[i - 1]);
  REQUIRE(overlap < 0.2);
}

TEST_CASE("a degenerate score distribution still yields a density", "[diagnostics]") {
  // Every score identical: the bandwidth floor turns the curve into a
  // finite spike instead of dividing by zero.
  const Eigen::Index n = 200;
  Eigen::VectorXd g = Eigen::VectorXd::Constant(n, 0.5);
  Eigen::VectorXd a(n);
  for (Eigen::Index i = 0; i < n; ++i) a[i] = i % 2 == 0 ? 1.0 : 0.0;
  const auto [treated, control] = overlap_densities(g, a);
  REQUIRE(treated.density.allFinite());
  REQUIRE(trapezoid(treated) == Catch::Approx(1.0).margin(0.05));
  // The mass concentrates near 0.5.
  Eigen::Index peak;
  treated.density.maxCoeff(&peak);
  REQUIRE(std::fabs(treated.x[peak] - 0.5) < 0.01);
}

TEST_CASE("scores outside (0, 1) are rejected", "[diagnostics]") {
  Eigen::VectorXd g(4), a(4);
  g << 0.2, 0.4, 1.0, 0.6;
  a << 1, 0, 1, 0;
  REQUIRE_THROWS_AS(overlap_densities(g, a), DataError);
}

TEST_CASE("each arm needs at least two scores", "[diagnostics]") {
  Eigen::VectorXd g(3), a(3);
  g << 0.2, 0.4, 0.6;
  a << 1, 0, 0;
  REQUIRE_THROWS_AS(overlap_densities(g, a), DataError);
}
