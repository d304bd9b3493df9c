#include "ce/diagnostics.hpp"

#include <cmath>

#include "ce/stats.hpp"

namespace ce {
namespace {

double weighted_mean(const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
  return (w.array() * x.array()).sum() / w.sum();
}

// Sample variance with weights normalized to mean 1 (n-1 denominator).
double weighted_variance(const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
  const auto m = x.size();
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::VectorXd wn = w * (static_cast<double>(m) / w.sum());
  const double mu = weighted_mean(x, wn);
  return (wn.array() * (x.array() - mu).square()).sum() / static_cast<double>(m - 1);
}

}  // namespace

BalanceReport balance_table(const ObservationTable& table, const WeightSet& weights) {
  if (weights.w.size() != table.n()) throw DataError("weight length disagrees");
  const auto [n1, n0] = arm_counts(table);
  if (n1 == 0 || n0 == 0) throw DataError("both treatment arms must be non-empty");
  if (table.n_confounders() == 0) throw DataError("no confounders to balance");

  std::vector<Eigen::Index> t_rows, c_rows;
  for (Eigen::Index i = 0; i < table.n(); ++i)
    (table.a()[i] == 1.0 ? t_rows : c_rows).push_back(i);

  auto take = [](const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      out[static_cast<Eigen::Index>(i)] = v[rows[i]];
    return out;
  };

  BalanceReport report;
  const Eigen::VectorXd w_t = take(weights.w, t_rows);
  const Eigen::VectorXd w_c = take(weights.w, c_rows);

  for (Eigen::Index j = 0; j < table.n_confounders(); ++j) {
    BalanceRow row;
    row.name = table.confounders()[static_cast<std::size_t>(j)].name;
    const Eigen::VectorXd x = table.w().col(j);
    const double pooled_sd = sd(x);
    const Eigen::VectorXd x_t = take(x, t_rows);
    const Eigen::VectorXd x_c = take(x, c_rows);

    if (pooled_sd == 0.0 || !std::isfinite(pooled_sd)) {
      row.zero_variance = true;
      row.std_diff_raw = row.std_diff_weighted = 0.0;
      row.var_ratio_raw = row.var_ratio_weighted = std::numeric_limits<double>::quiet_NaN();
      report.warnings.push_back("covariate '" + row.name + "' has zero variance");
      report.rows.push_back(row);
      continue;
    }

    // One standardization against the whole sample serves both columns.
    const double pooled_mean = x.mean();
    const Eigen::VectorXd z_t = (x_t.array() - pooled_mean) / pooled_sd;
    const Eigen::VectorXd z_c = (x_c.array() - pooled_mean) / pooled_sd;
    row.std_diff_raw = z_t.mean() - z_c.mean();
    row.std_diff_weighted = weighted_mean(z_t, w_t) - weighted_mean(z_c, w_c);

    const double v_t = variance(x_t), v_c = variance(x_c);
    row.var_ratio_raw = v_c > 0.0 ? v_t / v_c : std::numeric_limits<double>::quiet_NaN();
    const double vw_t = weighted_variance(x_t, w_t), vw_c = weighted_variance(x_c, w_c);
    row.var_ratio_weighted = vw_c > 0.0 ? vw_t / vw_c : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(row.var_ratio_raw) || !std::isfinite(row.var_ratio_weighted))
      report.warnings.push_back("covariate '" + row.name +
                                "' has a degenerate arm variance; ratio omitted");
    report.rows.push_back(row);
  }

  std::vector<double> wv(weights.w.data(), weights.w.data() + weights.w.size());
  report.weights.min = weights.w.minCoeff();
  report.weights.max = weights.w.maxCoeff();
  report.weights.mean = weights.w.mean();
  report.weights.p25 = quantile_type7(wv, 0.25);
  report.weights.median = quantile_type7(wv, 0.50);
  report.weights.p75 = quantile_type7(wv, 0.75);
  return report;
}

std::pair<DensityCurve, DensityCurve> overlap_densities(
    const Eigen::Ref<const Eigen::VectorXd>& g, const Eigen::Ref<const Eigen::VectorXd>& a,
    int grid_points) {
  if (g.size() != a.size()) throw DataError("score and treatment lengths disagree");
  if (grid_points < 16) throw ConfigError("need at least 16 grid points");
  if (((g.array() <= 0.0) || (g.array() >= 1.0)).any())
    throw DataError("scores must lie strictly inside (0, 1)");

  std::vector<double> gt, gc;
  for (Eigen::Index i = 0; i < g.size(); ++i) (a[i] == 1.0 ? gt : gc).push_back(g[i]);
  if (gt.size() < 2 || gc.size() < 2) throw DataError("both arms need at least 2 scores");

  // Silverman's rule per arm; a degenerate spread gets a small floor so the
  // curve is still a proper spike around the common value.
  auto bandwidth = [](const std::vector<double>& v) {
    Eigen::Map<const Eigen::VectorXd> x(v.data(), static_cast<Eigen::Index>(v.size()));
    const double s = sd(x);
    std::vector<double> sorted(v);
    const double iqr =
        quantile_type7(sorted, 0.75) - quantile_type7(sorted, 0.25);
    double spread = std::min(s, iqr / 1.34);
    if (spread <= 0.0) spread = std::max(s, 1e-3);
    if (spread <= 0.0) spread = 1e-3;
    return 0.9 * spread * std::pow(static_cast<double>(v.size()), -0.2);
  };
  const double h_t = bandwidth(gt), h_c = bandwidth(gc);
  const double pad = 3.0 * std::max(h_t, h_c);
  const double lo = std::max(0.0, g.minCoeff() - pad);
  const double hi = std::min(1.0, g.maxCoeff() + pad);

  Eigen::VectorXd grid(grid_points);
  for (int i = 0; i < grid_points; ++i)
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);

  auto kde = [&](const std::vector<double>& v, double h) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(grid_points);
    const double norm = 1.0 / (static_cast<double>(v.size()) * h * std::sqrt(2.0 * M_PI));
    for (int i = 0; i < grid_points; ++i) {
      double s = 0.0;
      for (double x : v) {
        const double u = (grid[i] - x) / h;
        s += std::exp(-0.5 * u * u);
      }
      d[i] = s * norm;
    }
    return d;
  };

  DensityCurve treated{grid, kde(gt, h_t), 1};
  DensityCurve control{grid, kde(gc, h_c), 0};
  return {treated, control};
}

}  // namespace ce
