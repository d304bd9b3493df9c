// Model specifications: which columns (and products of columns) enter a
// regression, plus counterfactual design construction with the treatment
// column overridden.
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ce/glm.hpp"
#include "ce/table.hpp"

namespace ce {

// A term is a product of base variables; index -1 is the treatment, indices
// >= 0 are confounder columns. {j, j} is a squared term.
struct Term {
  std::vector<int> factors;
};

struct ModelSpec {
  bool intercept = true;
  std::vector<Term> terms;

  bool uses_treatment() const;

  // Covariate block for fit_ols / fit_logistic (intercept handled by
  // GlmSpec). a_override replaces the treatment with a constant, giving
  // counterfactual designs.
  Eigen::MatrixXd design(const ObservationTable& table,
                         std::optional<double> a_override = {}) const;
  std::vector<std::string> term_names(const ObservationTable& table) const;

  // Main effects only: [A,] W1..Wk.
  static ModelSpec main_terms(const ObservationTable& table, bool with_treatment);
  // Main effects, all pairwise products, and squares of continuous
  // confounders.
  static ModelSpec with_interactions(const ObservationTable& table, bool with_treatment);
  // Full factorial in binary confounders (all subset products), optionally
  // crossed with the treatment. Requires every confounder to be binary.
  static ModelSpec saturated(const ObservationTable& table, bool with_treatment);
};

// Forward-stepwise selection over main-terms candidates by AIC: start from
// the intercept-only model, repeatedly add the candidate that lowers AIC
// most, stop when nothing improves. Logistic family.
ModelSpec forward_stepwise(const ObservationTable& table,
                           const Eigen::Ref<const Eigen::VectorXd>& response,
                           bool with_treatment);

}  // namespace ce
