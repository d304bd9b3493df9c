#include "ce/simulate.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "ce/aipw.hpp"
#include "ce/gformula.hpp"
#include "ce/inference.hpp"
#include "ce/iptw.hpp"
#include "ce/rng.hpp"
#include "ce/stats.hpp"
#include "ce/tmle.hpp"

namespace ce {
namespace {

double round_half_away(double x) { return std::round(x); }

}  // namespace

DgpSample generate_dgp(Eigen::Index n, std::uint64_t seed) {
  if (n < 2) throw ConfigError("need at least 2 rows");
  Rng rng = Rng(seed).split(0x646770);  // "dgp"

  Eigen::VectorXd w1(n), w2(n), w3(n), w4(n), a(n), y1(n), y0(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w1[i] = round_half_away(rng.uniform(1.0, 5.0));
    w2[i] = rng.bernoulli(0.45) ? 1.0 : 0.0;
    double v3 = round_half_away(rng.uniform(0.0, 1.0) + 0.75 * w2[i] + 0.8 * w1[i]);
    if (v3 == 5.0 || v3 == 6.0) v3 = 1.0;
    w3[i] = v3;
    w4[i] = round_half_away(rng.uniform(0.0, 1.0) + 0.75 * w2[i] + 0.2 * w1[i]);
    const double eta_a = -1.0 - 0.15 * w4[i] + 1.5 * w2[i] + 0.75 * w3[i] + 0.25 * w1[i] +
                         0.8 * w2[i] * w4[i];
    a[i] = rng.bernoulli(expit(eta_a)) ? 1.0 : 0.0;
    const double base =
        -3.0 + 0.25 * w4[i] + 0.75 * w3[i] + 0.8 * w2[i] * w4[i] + 0.05 * w1[i];
    y1[i] = expit(base + 1.0);
    y0[i] = expit(base);
    y[i] = a[i] == 1.0 ? y1[i] : y0[i];
  }

  Eigen::MatrixXd w(n, 4);
  w.col(0) = w1;
  w.col(1) = w2;
  w.col(2) = w3;
  w.col(3) = w4;
  std::vector<ColumnInfo> cols = {{"w1", ColumnKind::integer},
                                  {"w2", ColumnKind::binary},
                                  {"w3", ColumnKind::integer},
                                  {"w4", ColumnKind::integer}};

  DgpSample s{ObservationTable::from_columns_unchecked(std::move(y), std::move(a), std::move(w),
                                                       std::move(cols)),
              std::move(y1), std::move(y0), Eigen::VectorXd()};
  s.psi = s.y1 - s.y0;
  return s;
}

double reference_psi(std::uint64_t seed, Eigen::Index n) {
  // Dedicated stream so the reference draw never collides with replicate
  // streams of the same seed.
  return generate_dgp(n, mix64(seed ^ 0x7265666572656e63ULL)).psi.mean();
}

std::vector<SimEstimator> default_estimator_suite() {
  std::vector<SimEstimator> suite;
  suite.push_back({"ra", [](const DgpSample& s) {
                     return parametric_gformula_ate(s.table, Family::logistic).estimate;
                   }});
  suite.push_back({"iptw", [](const DgpSample& s) {
                     const PropensityScores ps = fit_propensity(s.table);
                     const WeightSet w = make_weights(ps, s.table.a(), WeightKind::unstabilized);
                     return ht_ate(s.table, w, /*hajek=*/false);
                   }});
  suite.push_back({"iptw-ra", [](const DgpSample& s) {
                     const PropensityScores ps = fit_propensity(s.table);
                     const WeightSet w = make_weights(ps, s.table.a(), WeightKind::stabilized);
                     return iptw_ra_ate(s.table, w, Family::logistic).estimate;
                   }});
  suite.push_back({"aipw", [](const DgpSample& s) {
                     return aipw_ate(s.table, AipwOptions{}).estimate;
                   }});
  suite.push_back({"tmle", [](const DgpSample& s) {
                     TmleOptions opt;
                     LearnerMenu menu;
                     menu.candidates = {LearnerKind::main_terms, LearnerKind::interactions};
                     opt.learners = menu;
                     opt.seed = 7;
                     return tmle_ate(s.table, opt);
                   }});
  return suite;
}

BiasReport monte_carlo(const std::vector<SimEstimator>& estimators, Eigen::Index n,
                       int replications, std::uint64_t seed, int threads) {
  if (estimators.empty()) throw ConfigError("no estimators given");
  if (replications < 1) throw ConfigError("need at least 1 replication");
  if (n < 2) throw ConfigError("need at least 2 rows per replicate");

  BiasReport report;
  report.true_psi = reference_psi(seed);
  report.n = n;
  report.replications = replications;
  report.seed = seed;

  const std::size_t m = estimators.size();
  const auto r_total = static_cast<std::size_t>(replications);
  // est x replicate value matrix plus success flags, filled by index so
  // threading cannot reorder anything.
  std::vector<std::vector<double>> values(m, std::vector<double>(r_total, 0.0));
  std::vector<std::vector<char>> ok(m, std::vector<char>(r_total, 0));
  std::vector<std::vector<char>> covered(m, std::vector<char>(r_total, 0));
  std::vector<std::vector<char>> has_ci(m, std::vector<char>(r_total, 0));

  auto run_replicate = [&](std::size_t r) {
    const DgpSample sample = generate_dgp(n, mix64(seed) + r + 1);
    for (std::size_t e = 0; e < m; ++e) {
      try {
        const EffectEstimate est = estimators[e].run(sample);
        values[e][r] = est.value;
        ok[e][r] = std::isfinite(est.value) ? 1 : 0;
        if (est.ci) {
          has_ci[e][r] = 1;
          covered[e][r] =
              est.ci->lower <= report.true_psi && report.true_psi <= est.ci->upper ? 1 : 0;
        }
      } catch (const std::runtime_error&) {
        ok[e][r] = 0;
      }
    }
  };

  const int t = std::min<int>(resolve_threads(threads), replications);
  if (t <= 1) {
    for (std::size_t r = 0; r < r_total; ++r) run_replicate(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int k = 0; k < t; ++k)
      pool.emplace_back([&] {
        for (std::size_t r = next.fetch_add(1); r < r_total; r = next.fetch_add(1))
          run_replicate(r);
      });
    for (auto& th : pool) th.join();
  }

  for (std::size_t e = 0; e < m; ++e) {
    BiasRow row;
    row.name = estimators[e].name;
    std::vector<double> kept;
    std::size_t n_ci = 0, n_cov = 0;
    for (std::size_t r = 0; r < r_total; ++r) {
      if (!ok[e][r]) continue;
      kept.push_back(values[e][r]);
      if (has_ci[e][r]) {
        ++n_ci;
        n_cov += covered[e][r];
      }
    }
    row.n_failed = static_cast<Eigen::Index>(r_total - kept.size());
    if (kept.empty()) {
      row.mean_estimate = std::numeric_limits<double>::quiet_NaN();
      row.rel_bias = std::numeric_limits<double>::quiet_NaN();
      row.emp_se = std::numeric_limits<double>::quiet_NaN();
    } else {
      Eigen::Map<Eigen::VectorXd> v(kept.data(), static_cast<Eigen::Index>(kept.size()));
      row.mean_estimate = v.mean();
      row.rel_bias = std::abs(row.mean_estimate - report.true_psi) / report.true_psi;
      row.emp_se = kept.size() > 1 ? sd(v) : std::numeric_limits<double>::quiet_NaN();
    }
    if (n_ci > 0) {
      row.has_coverage = true;
      row.coverage = static_cast<double>(n_cov) / static_cast<double>(n_ci);
    }
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace ce
