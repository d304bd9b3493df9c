#include "ce/report.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "ce/version.hpp"

namespace ce {
namespace {

// JSON has no NaN; absent-by-construction values serialize as null.
nlohmann::json num_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

nlohmann::json ci_json(const ConfidenceInterval& ci) {
  return {{"lower", ci.lower}, {"upper", ci.upper}, {"level", ci.level}, {"kind", ci.kind}};
}

void attach_info(nlohmann::json& j, const RunInfo& info) {
  j["n"] = info.n;
  j["n_treated"] = info.n_treated;
  j["n_control"] = info.n_control;
  if (info.seed) j["seed"] = *info.seed;
  j["version"] = kVersion;
}

std::string fmt(double v, int prec = 6) {
  if (!std::isfinite(v)) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << v;
  return s.str();
}

}  // namespace

RunInfo run_info(const ObservationTable& table, std::optional<std::uint64_t> seed) {
  const auto [n1, n0] = arm_counts(table);
  return RunInfo{table.n(), n1, n0, seed};
}

nlohmann::json to_json(const EffectEstimate& est, const RunInfo& info) {
  nlohmann::json j;
  j["method"] = est.method;
  j["estimand"] = to_string(est.estimand);
  j["value"] = est.value;
  j["se"] = est.se ? nlohmann::json(*est.se) : nlohmann::json(nullptr);
  j["ci"] = est.ci ? ci_json(*est.ci) : nlohmann::json(nullptr);
  j["mu1"] = num_or_null(est.mu1);
  j["mu0"] = num_or_null(est.mu0);
  j["details"] = est.details;
  j["warnings"] = est.warnings;
  attach_info(j, info);
  return j;
}

nlohmann::json to_json(const BootstrapResult& boot, const EffectEstimate& est,
                       const RunInfo& info) {
  nlohmann::json j = to_json(est, info);
  j["bootstrap"] = {{"replicates_requested", boot.n_requested},
                    {"replicates_failed", boot.n_failed},
                    {"replicate_mean", boot.replicate_mean},
                    {"se", boot.se},
                    {"seed", boot.seed},
                    {"normal", ci_json(boot.normal)},
                    {"percentile", ci_json(boot.percentile)},
                    {"bc", ci_json(boot.bias_corrected)},
                    {"warnings", boot.warnings}};
  return j;
}

nlohmann::json to_json(const BalanceReport& report, const RunInfo& info) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"covariate", r.name},
                    {"std_diff_raw", num_or_null(r.std_diff_raw)},
                    {"std_diff_weighted", num_or_null(r.std_diff_weighted)},
                    {"var_ratio_raw", num_or_null(r.var_ratio_raw)},
                    {"var_ratio_weighted", num_or_null(r.var_ratio_weighted)},
                    {"zero_variance", r.zero_variance}});
  }
  nlohmann::json j;
  j["method"] = "balance";
  j["balance"] = rows;
  j["weight_summary"] = {{"min", report.weights.min},     {"p25", report.weights.p25},
                         {"median", report.weights.median}, {"mean", report.weights.mean},
                         {"p75", report.weights.p75},     {"max", report.weights.max}};
  j["warnings"] = report.warnings;
  attach_info(j, info);
  return j;
}

nlohmann::json to_json(const BiasReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"estimator", r.name},
                    {"mean_estimate", num_or_null(r.mean_estimate)},
                    {"rel_bias", num_or_null(r.rel_bias)},
                    {"empirical_se", num_or_null(r.emp_se)},
                    {"coverage", r.has_coverage ? nlohmann::json(r.coverage)
                                                : nlohmann::json(nullptr)},
                    {"failed", r.n_failed}});
  }
  nlohmann::json j;
  j["method"] = "simulate";
  j["true_psi"] = report.true_psi;
  j["n"] = report.n;
  j["replications"] = report.replications;
  j["seed"] = report.seed;
  j["estimators"] = rows;
  j["version"] = kVersion;
  return j;
}

std::string render_text(const EffectEstimate& est, const RunInfo& info) {
  std::ostringstream s;
  s << "method: " << est.method << "   estimand: " << to_string(est.estimand) << "   n: "
    << info.n << " (" << info.n_treated << " treated, " << info.n_control << " control)\n";
  s << "estimate: " << fmt(est.value);
  if (est.se) s << "   se: " << fmt(*est.se);
  if (est.ci)
    s << "   " << static_cast<int>(est.ci->level * 100 + 0.5) << "% ci (" << est.ci->kind
      << "): [" << fmt(est.ci->lower) << ", " << fmt(est.ci->upper) << "]";
  s << "\n";
  if (std::isfinite(est.mu1) || std::isfinite(est.mu0))
    s << "mu1: " << fmt(est.mu1) << "   mu0: " << fmt(est.mu0) << "\n";
  for (const auto& [k, v] : est.details) s << "  " << k << ": " << fmt(v) << "\n";
  for (const auto& w : est.warnings) s << "warning: " << w << "\n";
  return s.str();
}

std::string render_text(const BootstrapResult& boot, const EffectEstimate& est) {
  std::ostringstream s;
  s << "bootstrap (" << boot.n_requested << " replicates, " << boot.n_failed
    << " failed, seed " << boot.seed << ")\n";
  s << "point: " << fmt(est.value) << "   replicate mean: " << fmt(boot.replicate_mean)
    << "   se: " << fmt(boot.se) << "\n";
  for (const auto* ci : {&boot.normal, &boot.percentile, &boot.bias_corrected})
    s << "  " << std::left << std::setw(24) << ci->kind << "[" << fmt(ci->lower) << ", "
      << fmt(ci->upper) << "]\n";
  for (const auto& w : boot.warnings) s << "warning: " << w << "\n";
  return s.str();
}

std::string render_text(const BalanceReport& report) {
  std::ostringstream s;
  s << std::left << std::setw(16) << "covariate" << std::right << std::setw(14) << "std diff"
    << std::setw(14) << "std diff (w)" << std::setw(14) << "var ratio" << std::setw(16)
    << "var ratio (w)" << "\n";
  for (const auto& r : report.rows) {
    s << std::left << std::setw(16) << r.name << std::right << std::setw(14)
      << fmt(r.std_diff_raw, 7) << std::setw(14) << fmt(r.std_diff_weighted, 7)
      << std::setw(14) << fmt(r.var_ratio_raw, 7) << std::setw(16)
      << fmt(r.var_ratio_weighted, 7) << "\n";
  }
  s << "weights: min " << fmt(report.weights.min, 4) << ", p25 " << fmt(report.weights.p25, 4)
    << ", median " << fmt(report.weights.median, 4) << ", mean " << fmt(report.weights.mean, 4)
    << ", p75 " << fmt(report.weights.p75, 4) << ", max " << fmt(report.weights.max, 4) << "\n";
  for (const auto& w : report.warnings) s << "warning: " << w << "\n";
  return s.str();
}

std::string render_text(const BiasReport& report) {
  std::ostringstream s;
  s << "true psi: " << fmt(report.true_psi) << "   n: " << report.n
    << "   replications: " << report.replications << "   seed: " << report.seed << "\n";
  s << std::left << std::setw(10) << "estimator" << std::right << std::setw(14) << "mean"
    << std::setw(12) << "rel bias" << std::setw(12) << "emp se" << std::setw(12) << "coverage"
    << std::setw(9) << "failed" << "\n";
  for (const auto& r : report.rows) {
    s << std::left << std::setw(10) << r.name << std::right << std::setw(14)
      << fmt(r.mean_estimate) << std::setw(12) << fmt(r.rel_bias, 4) << std::setw(12)
      << fmt(r.emp_se, 5) << std::setw(12) << (r.has_coverage ? fmt(r.coverage, 3) : "-")
      << std::setw(9) << r.n_failed << "\n";
  }
  return s.str();
}

std::string to_csv(const BalanceReport& report) {
  std::ostringstream s;
  s << "covariate,std_diff_raw,std_diff_weighted,var_ratio_raw,var_ratio_weighted,zero_variance\n";
  for (const auto& r : report.rows) {
    s << r.name << "," << r.std_diff_raw << "," << r.std_diff_weighted << ","
      << r.var_ratio_raw << "," << r.var_ratio_weighted << "," << (r.zero_variance ? 1 : 0)
      << "\n";
  }
  return s.str();
}

std::string to_csv(const BiasReport& report) {
  std::ostringstream s;
  s << "estimator,mean_estimate,true_psi,rel_bias,empirical_se,coverage,failed\n";
  s.precision(12);
  for (const auto& r : report.rows) {
    s << r.name << "," << r.mean_estimate << "," << report.true_psi << "," << r.rel_bias << ","
      << r.emp_se << ",";
    if (r.has_coverage) s << r.coverage;
    s << "," << r.n_failed << "\n";
  }
  return s.str();
}

std::string to_csv(const DensityCurve& treated, const DensityCurve& control) {
  std::ostringstream s;
  s << "x,density,arm\n";
  s.precision(12);
  for (const auto* c : {&treated, &control})
    for (Eigen::Index i = 0; i < c->x.size(); ++i)
      s << c->x[i] << "," << c->density[i] << "," << c->arm << "\n";
  return s.str();
}

}  // namespace ce
