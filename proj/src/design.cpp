#include "ce/design.hpp"

#include <algorithm>
#include <cmath>

namespace ce {

bool ModelSpec::uses_treatment() const {
  for (const auto& t : terms)
    for (int f : t.factors)
      if (f == -1) return true;
  return false;
}

Eigen::MatrixXd ModelSpec::design(const ObservationTable& table,
                                  std::optional<double> a_override) const {
  const auto n = table.n();
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(terms.size()));
  Eigen::VectorXd a = table.a();
  if (a_override) a.setConstant(*a_override);
  for (std::size_t j = 0; j < terms.size(); ++j) {
    if (terms[j].factors.empty()) throw ConfigError("empty model term");
    Eigen::VectorXd col = Eigen::VectorXd::Ones(n);
    for (int f : terms[j].factors) {
      if (f == -1) {
        col.array() *= a.array();
      } else if (f >= 0 && f < table.n_confounders()) {
        col.array() *= table.w().col(f).array();
      } else {
        throw ConfigError("model term refers to confounder " + std::to_string(f) +
                          " but table has " + std::to_string(table.n_confounders()));
      }
    }
    x.col(static_cast<Eigen::Index>(j)) = col;
  }
  return x;
}

std::vector<std::string> ModelSpec::term_names(const ObservationTable& table) const {
  std::vector<std::string> names;
  for (const auto& t : terms) {
    // Name squared terms v^2, products v:u.
    if (t.factors.size() == 2 && t.factors[0] == t.factors[1] && t.factors[0] >= 0) {
      names.push_back(table.confounders()[static_cast<std::size_t>(t.factors[0])].name + "^2");
      continue;
    }
    std::string s;
    for (std::size_t k = 0; k < t.factors.size(); ++k) {
      if (k) s += ":";
      s += t.factors[k] == -1
               ? table.treatment_name()
               : table.confounders()[static_cast<std::size_t>(t.factors[k])].name;
    }
    names.push_back(s);
  }
  return names;
}

ModelSpec ModelSpec::main_terms(const ObservationTable& table, bool with_treatment) {
  ModelSpec spec;
  if (with_treatment) spec.terms.push_back({{-1}});
  for (int j = 0; j < table.n_confounders(); ++j) spec.terms.push_back({{j}});
  return spec;
}

ModelSpec ModelSpec::with_interactions(const ObservationTable& table, bool with_treatment) {
  ModelSpec spec = main_terms(table, with_treatment);
  std::vector<int> bases;
  if (with_treatment) bases.push_back(-1);
  for (int j = 0; j < table.n_confounders(); ++j) bases.push_back(j);
  for (std::size_t i = 0; i < bases.size(); ++i)
    for (std::size_t k = i + 1; k < bases.size(); ++k)
      spec.terms.push_back({{bases[i], bases[k]}});
  for (int j = 0; j < table.n_confounders(); ++j)
    if (table.confounders()[static_cast<std::size_t>(j)].kind == ColumnKind::continuous)
      spec.terms.push_back({{j, j}});
  return spec;
}

ModelSpec ModelSpec::saturated(const ObservationTable& table, bool with_treatment) {
  const int k = static_cast<int>(table.n_confounders());
  if (k > 10) throw ConfigError("saturated design limited to 10 binary confounders");
  for (int j = 0; j < k; ++j)
    if (table.confounders()[static_cast<std::size_t>(j)].kind != ColumnKind::binary)
      throw ConfigError("saturated design requires binary confounders (offending: " +
                        table.confounders()[static_cast<std::size_t>(j)].name + ")");
  ModelSpec spec;
  std::vector<Term> subsets;
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    Term t;
    for (int j = 0; j < k; ++j)
      if (mask & (1u << j)) t.factors.push_back(j);
    subsets.push_back(t);
  }
  std::sort(subsets.begin(), subsets.end(), [](const Term& a, const Term& b) {
    if (a.factors.size() != b.factors.size()) return a.factors.size() < b.factors.size();
    return a.factors < b.factors;
  });
  if (with_treatment) spec.terms.push_back({{-1}});
  for (const auto& s : subsets) spec.terms.push_back(s);
  if (with_treatment)
    for (const auto& s : subsets) {
      Term t;
      t.factors.push_back(-1);
      t.factors.insert(t.factors.end(), s.factors.begin(), s.factors.end());
      spec.terms.push_back(t);
    }
  return spec;
}

ModelSpec forward_stepwise(const ObservationTable& table,
                           const Eigen::Ref<const Eigen::VectorXd>& response,
                           bool with_treatment) {
  const ModelSpec pool = ModelSpec::main_terms(table, with_treatment);
  ModelSpec current;  // intercept only
  std::vector<bool> used(pool.terms.size(), false);

  auto aic_of = [&](const ModelSpec& m) -> double {
    GlmSpec gspec;
    gspec.family = Family::logistic;
    const FittedGlm fit = fit_logistic(m.design(table), response, gspec);
    return fit.deviance_trace.back() + 2.0 * static_cast<double>(m.terms.size() + 1);
  };

  double best_aic = aic_of(current);
  for (;;) {
    int best_j = -1;
    double best_candidate = best_aic;
    for (std::size_t j = 0; j < pool.terms.size(); ++j) {
      if (used[j]) continue;
      ModelSpec candidate = current;
      candidate.terms.push_back(pool.terms[j]);
      double aic;
      try {
        aic = aic_of(candidate);
      } catch (const std::runtime_error&) {
        continue;  // collinear or non-convergent candidate: skip
      }
      if (aic < best_candidate - 1e-10) {
        best_candidate = aic;
        best_j = static_cast<int>(j);
      }
    }
    if (best_j < 0) break;
    current.terms.push_back(pool.terms[static_cast<std::size_t>(best_j)]);
    used[static_cast<std::size_t>(best_j)] = true;
    best_aic = best_candidate;
  }
  return current;
}

}  // namespace ce
