#include <catch2/catch_amalgamated.hpp>

#include "ce/design.hpp"
#include "ce/rng.hpp"
#include "ce/stats.hpp"

using namespace ce;

namespace {

ObservationTable three_confounder_table() {
  // w0 binary, w1 continuous, w2 binary.
  const Eigen::Index n = 12;
  Eigen::VectorXd y(n), a(n);
  Eigen::MatrixXd w(n, 3);
  y << 0, 1, 1, 0, 1, 0, 1, 1, 0, 1, 0, 1;
  a << 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1;
  w.col(0) << 0, 1, 1, 0, 1, 0, 0, 1, 1, 0, 1, 0;
  w.col(1) << 0.5, 1.2, -0.3, 2.2, 0.0, 1.1, -1.4, 0.8, 0.3, 1.9, -0.7, 0.4;
  w.col(2) << 1, 0, 0, 1, 1, 0, 1, 0, 1, 0, 1, 0;
  return ObservationTable::from_columns(
      y, a, w,
      {{"u", ColumnKind::binary}, {"z", ColumnKind::continuous}, {"v", ColumnKind::binary}});
}

}  // namespace

TEST_CASE("main terms lists treatment then confounders", "[design]") {
  const ObservationTable t = three_confounder_table();
  const ModelSpec m = ModelSpec::main_terms(t, true);
  REQUIRE(m.terms.size() == 4);
  REQUIRE(m.uses_treatment());
  REQUIRE(m.term_names(t) == std::vector<std::string>{"a", "u", "z", "v"});
  const Eigen::MatrixXd x = m.design(t);
  REQUIRE(x.cols() == 4);
  REQUIRE(x.col(0) == t.a());
  REQUIRE(x.col(2) == t.w().col(1));

  const ModelSpec no_a = ModelSpec::main_terms(t, false);
  REQUIRE(no_a.terms.size() == 3);
  REQUIRE_FALSE(no_a.uses_treatment());
}

TEST_CASE("interaction spec adds pairwise products and squares of continuous", "[design]") {
  const ObservationTable t = three_confounder_table();
  const ModelSpec m = ModelSpec::with_interactions(t, true);
  // 4 mains + C(4,2) = 6 products + 1 square of the continuous confounder.
  REQUIRE(m.terms.size() == 11);
  const auto names = m.term_names(t);
  REQUIRE(std::find(names.begin(), names.end(), "a:u") != names.end());
  REQUIRE(std::find(names.begin(), names.end(), "z:v") != names.end());
  REQUIRE(std::find(names.begin(), names.end(), "z^2") != names.end());
  REQUIRE(std::find(names.begin(), names.end(), "u^2") == names.end());

  // The design realizes the products.
  const Eigen::MatrixXd x = m.design(t);
  const auto au = static_cast<Eigen::Index>(std::find(names.begin(), names.end(), "a:u") -
                                            names.begin());
  REQUIRE(x.col(au) == (t.a().array() * t.w().col(0).array()).matrix());
  const auto z2 = static_cast<Eigen::Index>(std::find(names.begin(), names.end(), "z^2") -
                                            names.begin());
  REQUIRE(x.col(z2) == (t.w().col(1).array().square()).matrix());
}

TEST_CASE("counterfactual designs override the treatment everywhere", "[design]") {
  const ObservationTable t = three_confounder_table();
  const ModelSpec m = ModelSpec::with_interactions(t, true);
  const Eigen::MatrixXd x1 = m.design(t, 1.0);
  const Eigen::MatrixXd x0 = m.design(t, 0.0);
  const auto names = m.term_names(t);
  const auto a_col = static_cast<Eigen::Index>(std::find(names.begin(), names.end(), "a") -
                                               names.begin());
  const auto au = static_cast<Eigen::Index>(std::find(names.begin(), names.end(), "a:u") -
                                            names.begin());
  REQUIRE((x1.col(a_col).array() == 1.0).all());
  REQUIRE((x0.col(a_col).array() == 0.0).all());
  REQUIRE(x1.col(au) == t.w().col(0));  // a = 1: product collapses to u
  REQUIRE((x0.col(au).array() == 0.0).all());
}

TEST_CASE("saturated design spans all subset products", "[design]") {
  const Eigen::Index n = 16;
  Eigen::VectorXd y(n), a(n);
  Eigen::MatrixXd w(n, 2);
  Rng rng(23);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = i % 2;
    a[i] = (i / 2) % 2;
    w(i, 0) = (i / 4) % 2;
    w(i, 1) = (i / 8) % 2;
  }
  const ObservationTable t = ObservationTable::from_columns(
      y, a, w, {{"u", ColumnKind::binary}, {"v", ColumnKind::binary}});

  const ModelSpec without = ModelSpec::saturated(t, false);
  REQUIRE(without.terms.size() == 3);  // u, v, u:v

  const ModelSpec with = ModelSpec::saturated(t, true);
  REQUIRE(with.terms.size() == 7);  // a + 3 subsets + a x 3 subsets
  REQUIRE(with.uses_treatment());
  // Full rank with the intercept: 8 parameters for 8 cells.
  Eigen::MatrixXd x(n, 8);
  x.col(0).setOnes();
  x.rightCols(7) = with.design(t);
  REQUIRE(Eigen::FullPivLU<Eigen::MatrixXd>(x).rank() == 8);
}

TEST_CASE("saturated design rejects non-binary confounders", "[design]") {
  Eigen::VectorXd y(4), a(4);
  Eigen::MatrixXd w(4, 1);
  y << 0, 1, 0, 1;
  a << 0, 1, 1, 0;
  w << 1, 2, 3, 1;
  const ObservationTable t =
      ObservationTable::from_columns(y, a, w, {{"k", ColumnKind::integer}});
  REQUIRE_THROWS_AS(ModelSpec::saturated(t, true), ConfigError);
}

TEST_CASE("model term out of range is a config error", "[design]") {
  const ObservationTable t = three_confounder_table();
  ModelSpec m;
  m.terms.push_back({{7}});
  REQUIRE_THROWS_AS(m.design(t), ConfigError);
}

TEST_CASE("forward stepwise keeps the strong predictor and stops", "[design]") {
  // y depends on w0 strongly; w1 and w2 are noise.
  Rng rng(29);
  const Eigen::Index n = 500;
  Eigen::VectorXd y(n), a(n);
  Eigen::MatrixXd w(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i, 0) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    w(i, 1) = rng.normal();
    w(i, 2) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    a[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    y[i] = rng.bernoulli(expit(-1.5 + 3.0 * w(i, 0))) ? 1.0 : 0.0;
  }
  const ObservationTable t = ObservationTable::from_columns(
      y, a, w,
      {{"s", ColumnKind::binary}, {"n1", ColumnKind::continuous}, {"n2", ColumnKind::binary}});
  const ModelSpec m = forward_stepwise(t, t.y(), true);
  const auto names = m.term_names(t);
  REQUIRE(std::find(names.begin(), names.end(), "s") != names.end());
  REQUIRE(m.terms.size() < 4);  // the pure-noise pool must not all enter
}

TEST_CASE("stepwise on pure noise returns a small model", "[design]") {
  Rng rng(31);
  const Eigen::Index n = 400;
  Eigen::VectorXd y(n), a(n);
  Eigen::MatrixXd w(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i, 0) = rng.normal();
    w(i, 1) = rng.normal();
    a[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    y[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }
  const ObservationTable t = ObservationTable::from_columns(
      y, a, w, {{"n1", ColumnKind::continuous}, {"n2", ColumnKind::continuous}});
  const ModelSpec m = forward_stepwise(t, t.y(), false);
  REQUIRE(m.terms.size() <= 1);
}
