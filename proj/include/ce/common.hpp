// Shared result types and the error taxonomy used across the library.
#pragma once

#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ce {

// Error taxonomy. The CLI maps each class to a distinct exit code; library
// code throws these and never calls exit().
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PositivityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Raised when resampling inference is too unstable to report (e.g. too many
// failed replicates). Treated as a positivity/stability problem by the CLI.
struct InferenceError : PositivityError {
  using PositivityError::PositivityError;
};

enum class Estimand { ate, att, risk_ratio, odds_ratio };

std::string to_string(Estimand e);

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  std::string kind;  // "wald", "ic", "normal", "percentile", "bc"
};

// Common currency of every estimator: a point estimate plus whatever
// inference and diagnostics the method produces.
struct EffectEstimate {
  Estimand estimand = Estimand::ate;
  std::string method;
  double value = 0.0;
  std::optional<double> se;
  std::optional<ConfidenceInterval> ci;
  // Potential-outcome means where the method defines them (NaN otherwise).
  double mu1 = std::numeric_limits<double>::quiet_NaN();
  double mu0 = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, double> details;
  std::vector<std::string> warnings;
};

}  // namespace ce
