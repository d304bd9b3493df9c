// ce: causal effect estimation for a binary treatment and binary outcome.
//
// Subcommands: estimate, diagnose, bootstrap, simulate. Output is JSON when
// stdout is piped and a text table on a terminal; --format overrides. Exit
// codes: 0 ok, 2 configuration, 3 data, 4 positivity/instability,
// 5 convergence.
#include <unistd.h>

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ce/aipw.hpp"
#include "ce/diagnostics.hpp"
#include "ce/gformula.hpp"
#include "ce/inference.hpp"
#include "ce/iptw.hpp"
#include "ce/report.hpp"
#include "ce/simulate.hpp"
#include "ce/stats.hpp"
#include "ce/table.hpp"
#include "ce/tmle.hpp"
#include "ce/version.hpp"

namespace {

using namespace ce;

struct IoOptions {
  std::string format = "auto";  // auto | json | csv | table
  std::string output_path;
};

struct DataOptions {
  std::string input;
  std::string outcome;
  std::string treatment;
  std::string confounders;  // comma separated, may be empty
  std::string missing = "fail";
  bool expand_categorical = false;
};

struct MethodOptions {
  std::string method = "tmle";
  std::string estimand = "ate";
  std::string family = "logistic";
  bool stabilized = true;
  bool hajek = true;
  bool aipw_arm_models = false;
  bool aipw_stabilized_residual = false;
  std::string learners = "none";  // none | cv
  int cv_folds = 10;
  std::vector<double> truncate;  // lower,upper percentiles
};

std::vector<std::string> split_names(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

LoadResult load(const DataOptions& d) {
  CsvSpec spec;
  spec.outcome = d.outcome;
  spec.treatment = d.treatment;
  spec.confounders = split_names(d.confounders);
  if (d.missing == "fail") {
    spec.missing = MissingPolicy::fail;
  } else if (d.missing == "drop_rows") {
    spec.missing = MissingPolicy::drop_rows;
  } else {
    throw ConfigError("--missing must be fail or drop_rows");
  }
  spec.expand_categorical = d.expand_categorical;
  return load_csv(d.input, spec);
}

Family parse_family(const std::string& f) {
  if (f == "linear") return Family::linear;
  if (f == "logistic") return Family::logistic;
  throw ConfigError("--family must be linear or logistic");
}

Estimand parse_estimand(const std::string& e) {
  if (e == "ate") return Estimand::ate;
  if (e == "att") return Estimand::att;
  if (e == "rr") return Estimand::risk_ratio;
  if (e == "or") return Estimand::odds_ratio;
  throw ConfigError("--estimand must be one of ate, att, rr, or");
}

void validate_method(const MethodOptions& m) {
  static const std::vector<std::string> methods = {"np-g",    "g-comp", "iptw", "msm",
                                                   "iptw-ra", "aipw",   "tmle"};
  if (std::find(methods.begin(), methods.end(), m.method) == methods.end())
    throw ConfigError("unknown method '" + m.method + "'");
  const Estimand est = parse_estimand(m.estimand);
  if (est == Estimand::att && m.method != "np-g")
    throw ConfigError("att is only available with method np-g");
  if ((est == Estimand::risk_ratio || est == Estimand::odds_ratio)) {
    if (est == Estimand::odds_ratio && m.method != "tmle")
      throw ConfigError("or is only available with method tmle");
    static const std::vector<std::string> ratio_ok = {"g-comp", "iptw-ra", "aipw", "tmle"};
    if (std::find(ratio_ok.begin(), ratio_ok.end(), m.method) == ratio_ok.end())
      throw ConfigError("rr is only available with methods g-comp, iptw-ra, aipw, tmle");
  }
  if (!m.truncate.empty() && m.truncate.size() != 2)
    throw ConfigError("--truncate takes two percentiles: lower,upper");
}

WeightSet build_weights(const ObservationTable& table, const MethodOptions& m,
                        std::vector<std::string>* warnings) {
  const PropensityScores ps = fit_propensity(table);
  if (warnings)
    for (const auto& w : ps.warnings) warnings->push_back(w);
  WeightSet ws = make_weights(ps, table.a(),
                              m.stabilized ? WeightKind::stabilized : WeightKind::unstabilized);
  if (m.truncate.size() == 2) ws = truncate_weights(ws, m.truncate[0], m.truncate[1]);
  return ws;
}

EffectEstimate ratio_from_potentials(const PotentialOutcomePair& pair, const std::string& method) {
  EffectEstimate est = marginal_risk_ratio(pair);
  est.method = method;
  return est;
}

// One point estimate; shared by `estimate` and every bootstrap replicate.
EffectEstimate run_estimate(const ObservationTable& table, const MethodOptions& m) {
  const Estimand estimand = parse_estimand(m.estimand);
  const Family family = parse_family(m.family);

  if (m.method == "np-g") {
    return estimand == Estimand::att ? np_gformula_att(table) : np_gformula_ate(table);
  }
  if (m.method == "g-comp") {
    const ParametricGformulaResult r = parametric_gformula_ate(table, family);
    return estimand == Estimand::risk_ratio ? ratio_from_potentials(r.potentials, "g-comp")
                                            : r.estimate;
  }
  if (m.method == "iptw") {
    std::vector<std::string> warnings;
    const WeightSet ws = build_weights(table, m, &warnings);
    EffectEstimate est = ht_ate(table, ws, m.hajek);
    est.warnings.insert(est.warnings.end(), warnings.begin(), warnings.end());
    return est;
  }
  if (m.method == "msm") {
    std::vector<std::string> warnings;
    const WeightSet ws = build_weights(table, m, &warnings);
    EffectEstimate est = msm_fit(table, ws);
    est.warnings.insert(est.warnings.end(), warnings.begin(), warnings.end());
    return est;
  }
  if (m.method == "iptw-ra") {
    std::vector<std::string> warnings;
    const WeightSet ws = build_weights(table, m, &warnings);
    IptwRaResult r = iptw_ra_ate(table, ws, family);
    r.estimate.warnings.insert(r.estimate.warnings.end(), warnings.begin(), warnings.end());
    return estimand == Estimand::risk_ratio ? ratio_from_potentials(r.potentials, "iptw-ra")
                                            : r.estimate;
  }
  if (m.method == "aipw") {
    AipwOptions opt;
    opt.arm_models = m.aipw_arm_models;
    opt.stabilized_residual = m.aipw_stabilized_residual;
    opt.outcome_family = family;
    const AipwResult r = aipw_ate(table, opt);
    if (estimand == Estimand::risk_ratio) {
      if (r.components.mu0 <= 0.0) throw DataError("risk ratio undefined: mu0 <= 0");
      EffectEstimate est;
      est.estimand = Estimand::risk_ratio;
      est.method = "aipw";
      est.value = r.components.mu1 / r.components.mu0;
      est.mu1 = r.components.mu1;
      est.mu0 = r.components.mu0;
      est.details["excess_risk_pct"] = 100.0 * (est.value - 1.0);
      est.warnings = r.estimate.warnings;
      return est;
    }
    return r.estimate;
  }
  // tmle
  TmleOptions opt;
  if (m.learners == "cv") {
    LearnerMenu menu;
    menu.folds = m.cv_folds;
    opt.learners = menu;
  } else if (m.learners != "none") {
    throw ConfigError("--learners must be none or cv");
  }
  const TmleState state = tmle_fit(table, opt);
  if (estimand == Estimand::risk_ratio) return tmle_rr_or(state).first;
  if (estimand == Estimand::odds_ratio) return tmle_rr_or(state).second;
  return tmle_ate(state);
}

std::string resolve_format(const IoOptions& io) {
  if (io.format != "auto") return io.format;
  if (!io.output_path.empty()) return "json";
  return isatty(fileno(stdout)) ? "table" : "json";
}

void emit(const IoOptions& io, const std::string& text) {
  if (io.output_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream out(io.output_path);
  if (!out) throw DataError("cannot write '" + io.output_path + "'");
  out << text;
  if (!text.empty() && text.back() != '\n') out << "\n";
}

std::string estimate_csv(const EffectEstimate& est, const RunInfo& info) {
  std::ostringstream s;
  s.precision(12);
  s << "method,estimand,value,se,ci_lower,ci_upper,ci_kind,mu1,mu0,n\n";
  s << est.method << "," << to_string(est.estimand) << "," << est.value << ",";
  if (est.se) s << *est.se;
  s << ",";
  if (est.ci) s << est.ci->lower;
  s << ",";
  if (est.ci) s << est.ci->upper;
  s << ",";
  if (est.ci) s << est.ci->kind;
  s << "," << est.mu1 << "," << est.mu0 << "," << info.n << "\n";
  return s.str();
}

int dispatch(int argc, char** argv) {
  CLI::App app{"causal effect estimation for a binary treatment and binary outcome"};
  app.set_version_flag("--version", std::string("ce ") + kVersion);
  app.require_subcommand(1);

  IoOptions io;
  DataOptions data;
  MethodOptions method;
  int bootstrap_reps = 0;
  std::uint64_t seed = 1;
  int threads = 0;
  double level = 0.95;

  auto add_io = [&](CLI::App* cmd) {
    cmd->add_option("--format", io.format, "auto, json, csv, or table")
        ->check(CLI::IsMember({"auto", "json", "csv", "table"}));
    cmd->add_option("--output", io.output_path, "write the report to a file");
  };
  auto add_data = [&](CLI::App* cmd) {
    cmd->add_option("input", data.input, "CSV file with a header row")->required();
    cmd->add_option("--outcome", data.outcome, "binary outcome column")->required();
    cmd->add_option("--treatment", data.treatment, "binary treatment column")->required();
    cmd->add_option("--confounders", data.confounders, "comma-separated confounder columns");
    cmd->add_option("--missing", data.missing, "fail (default) or drop_rows");
    cmd->add_flag("--expand-categorical", data.expand_categorical,
                  "expand integer-coded confounders with 3+ levels into indicators");
  };
  auto add_method = [&](CLI::App* cmd) {
    cmd->add_option("--method", method.method, "np-g, g-comp, iptw, msm, iptw-ra, aipw, tmle");
    cmd->add_option("--estimand", method.estimand, "ate (default), att, rr, or");
    cmd->add_option("--family", method.family, "outcome family: logistic (default) or linear");
    cmd->add_flag("--stabilized,!--no-stabilized", method.stabilized,
                  "stabilized weights (default on)");
    cmd->add_flag("--hajek,!--ht-raw", method.hajek,
                  "weight-normalized contrast (default) vs raw Horvitz-Thompson");
    cmd->add_flag("--aipw-arm-models", method.aipw_arm_models,
                  "aipw: per-arm outcome regressions instead of one pooled model");
    cmd->add_flag("--aipw-stabilized-residual", method.aipw_stabilized_residual,
                  "aipw: stabilized combined weight on the residual term");
    cmd->add_option("--learners", method.learners,
                    "tmle initial fits: none (default) or cv (discrete selection)");
    cmd->add_option("--cv-folds", method.cv_folds, "folds for --learners cv (default 10)");
    cmd->add_option("--truncate", method.truncate,
                    "weight truncation percentiles: lower upper (e.g. 1 99)")
        ->expected(2);
  };

  CLI::App* est_cmd = app.add_subcommand("estimate", "point estimate with optional bootstrap");
  add_data(est_cmd);
  add_method(est_cmd);
  add_io(est_cmd);
  est_cmd->add_option("--bootstrap", bootstrap_reps, "bootstrap replicates (0 = off)");
  est_cmd->add_option("--seed", seed, "bootstrap seed (default 1)");
  est_cmd->add_option("--threads", threads, "worker threads (default: CE_THREADS or cores)");
  est_cmd->add_option("--level", level, "interval level (default 0.95)");

  CLI::App* boot_cmd = app.add_subcommand("bootstrap", "full bootstrap report for a method");
  add_data(boot_cmd);
  add_method(boot_cmd);
  add_io(boot_cmd);
  boot_cmd->add_option("-B,--replicates", bootstrap_reps, "bootstrap replicates (default 1000)");
  boot_cmd->add_option("--seed", seed, "bootstrap seed (default 1)");
  boot_cmd->add_option("--threads", threads, "worker threads (default: CE_THREADS or cores)");
  boot_cmd->add_option("--level", level, "interval level (default 0.95)");

  CLI::App* diag_cmd = app.add_subcommand("diagnose", "balance table and overlap diagnostics");
  add_data(diag_cmd);
  add_io(diag_cmd);
  std::string weights_kind = "stabilized";
  std::string density_out;
  int grid_points = 512;
  std::vector<double> diag_truncate;
  diag_cmd->add_option("--weights", weights_kind, "stabilized (default) or unstabilized");
  diag_cmd->add_option("--truncate", diag_truncate, "weight truncation percentiles")->expected(2);
  diag_cmd->add_option("--density-out", density_out, "write propensity density CSV here");
  diag_cmd->add_option("--grid", grid_points, "density grid points (default 512)");

  CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo bias study on the built-in DGP");
  add_io(sim_cmd);
  Eigen::Index sim_n = 1000;
  int sim_reps = 1;
  std::string estimators = "ra,iptw,iptw-ra,aipw,tmle";
  sim_cmd->add_option("--n", sim_n, "sample size per replication (default 1000)");
  sim_cmd->add_option("--reps", sim_reps, "replications (default 1)");
  sim_cmd->add_option("--seed", seed, "seed (default 1)");
  sim_cmd->add_option("--estimators", estimators, "comma-separated subset of ra,iptw,iptw-ra,aipw,tmle");
  sim_cmd->add_option("--threads", threads, "worker threads (default: CE_THREADS or cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    std::cout << "ce " << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  if (est_cmd->parsed() || boot_cmd->parsed()) {
    validate_method(method);
    const LoadResult loaded = load(data);
    const ObservationTable& table = loaded.table;
    if (boot_cmd->parsed() && bootstrap_reps <= 0) bootstrap_reps = 1000;
    const bool want_bootstrap = bootstrap_reps > 0;
    EffectEstimate est = run_estimate(table, method);
    if (loaded.rows_dropped > 0)
      est.warnings.push_back(std::to_string(loaded.rows_dropped) +
                             " row(s) with missing values dropped");
    RunInfo info = run_info(table, want_bootstrap ? std::optional<std::uint64_t>(seed)
                                                  : std::nullopt);
    const std::string format = resolve_format(io);
    if (!want_bootstrap) {
      if (format == "json") {
        emit(io, to_json(est, info).dump(2));
      } else if (format == "csv") {
        emit(io, estimate_csv(est, info));
      } else {
        emit(io, render_text(est, info));
      }
      return 0;
    }
    BootstrapOptions bopt;
    bopt.replicates = bootstrap_reps;
    bopt.seed = seed;
    bopt.level = level;
    bopt.threads = threads;
    const BootstrapResult boot = bootstrap(
        table, [&](const ObservationTable& t) { return run_estimate(t, method).value; }, bopt);
    est.se = boot.se;
    est.ci = boot.bias_corrected;
    if (format == "json") {
      emit(io, to_json(boot, est, info).dump(2));
    } else if (format == "csv") {
      emit(io, estimate_csv(est, info));
    } else {
      emit(io, render_text(est, info) + render_text(boot, est));
    }
    return 0;
  }

  if (diag_cmd->parsed()) {
    const LoadResult loaded = load(data);
    const ObservationTable& table = loaded.table;
    const PropensityScores ps = fit_propensity(table);
    WeightKind kind;
    if (weights_kind == "stabilized") {
      kind = WeightKind::stabilized;
    } else if (weights_kind == "unstabilized") {
      kind = WeightKind::unstabilized;
    } else {
      throw ConfigError("--weights must be stabilized or unstabilized");
    }
    WeightSet ws = make_weights(ps, table.a(), kind);
    if (diag_truncate.size() == 2) ws = truncate_weights(ws, diag_truncate[0], diag_truncate[1]);
    BalanceReport report = balance_table(table, ws);
    for (const auto& w : ps.warnings) report.warnings.push_back(w);
    if (!density_out.empty()) {
      const auto [treated, control] = overlap_densities(ps.g, table.a(), grid_points);
      std::ofstream out(density_out);
      if (!out) throw DataError("cannot write '" + density_out + "'");
      out << to_csv(treated, control);
    }
    const std::string format = resolve_format(io);
    if (format == "json") {
      emit(io, to_json(report, run_info(table)).dump(2));
    } else if (format == "csv") {
      emit(io, to_csv(report));
    } else {
      emit(io, render_text(report));
    }
    return 0;
  }

  // simulate
  std::vector<SimEstimator> suite;
  for (const auto& name : split_names(estimators)) {
    bool found = false;
    for (auto& e : default_estimator_suite())
      if (e.name == name) {
        suite.push_back(e);
        found = true;
        break;
      }
    if (!found) throw ConfigError("unknown estimator '" + name + "'");
  }
  const BiasReport report = monte_carlo(suite, sim_n, sim_reps, seed, threads);
  const std::string format = resolve_format(io);
  if (format == "json") {
    emit(io, to_json(report).dump(2));
  } else if (format == "csv") {
    emit(io, to_csv(report));
  } else {
    emit(io, render_text(report));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ce::ConfigError& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return 2;
  } catch (const ce::InferenceError& e) {
    std::cerr << "error (inference): " << e.what() << "\n";
    return 4;
  } catch (const ce::PositivityError& e) {
    std::cerr << "error (positivity): " << e.what() << "\n";
    return 4;
  } catch (const ce::ConvergenceError& e) {
    std::cerr << "error (convergence): " << e.what() << "\n";
    return 5;
  } catch (const ce::DataError& e) {
    std::cerr << "error (data): " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
