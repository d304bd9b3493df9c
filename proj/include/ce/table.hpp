// Observational dataset: binary outcome, binary treatment, numeric
// confounders, stored column-wise as Eigen vectors/matrices.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ce/common.hpp"

namespace ce {

enum class ColumnKind { binary, integer, continuous };

struct ColumnInfo {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
};

enum class MissingPolicy { fail, drop_rows };

struct CsvSpec {
  std::string outcome;
  std::string treatment;
  std::vector<std::string> confounders;
  MissingPolicy missing = MissingPolicy::fail;
  // Expand integer-coded confounders with 3+ levels into indicator columns
  // (lowest level is the reference).
  bool expand_categorical = false;
};

class ObservationTable {
 public:
  // Validating constructor: y and a must be 0/1, both arms non-empty, n >= 2.
  static ObservationTable from_columns(Eigen::VectorXd y, Eigen::VectorXd a, Eigen::MatrixXd w,
                                       std::vector<ColumnInfo> confounders,
                                       std::string outcome_name = "y",
                                       std::string treatment_name = "a");

  // Structural checks only (sizes, finiteness). Used by resampling and the
  // simulation harness, where outcomes may be fractional and a resample may
  // be degenerate; estimators validate what they need.
  static ObservationTable from_columns_unchecked(Eigen::VectorXd y, Eigen::VectorXd a,
                                                 Eigen::MatrixXd w,
                                                 std::vector<ColumnInfo> confounders,
                                                 std::string outcome_name = "y",
                                                 std::string treatment_name = "a");

  Eigen::Index n() const { return y_.size(); }
  Eigen::Index n_confounders() const { return w_.cols(); }
  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::VectorXd& a() const { return a_; }
  const Eigen::MatrixXd& w() const { return w_; }
  const std::vector<ColumnInfo>& confounders() const { return confounders_; }
  const std::string& outcome_name() const { return outcome_name_; }
  const std::string& treatment_name() const { return treatment_name_; }

  int confounder_index(const std::string& name) const;  // -1 when absent

  ObservationTable select_rows(const std::vector<Eigen::Index>& rows) const;

 private:
  ObservationTable() = default;
  Eigen::VectorXd y_, a_;
  Eigen::MatrixXd w_;
  std::vector<ColumnInfo> confounders_;
  std::string outcome_name_ = "y", treatment_name_ = "a";
};

struct LoadResult {
  ObservationTable table;
  std::size_t rows_dropped = 0;
};

// Strict CSV reader: header row, comma-separated numeric fields. Empty
// fields and the tokens NA / NaN / . count as missing and are handled per
// policy; anything else non-numeric is a data error naming row and column.
LoadResult load_csv(const std::string& path, const CsvSpec& spec);

// Round-trips with load_csv: integer-valued cells print without a decimal
// point, everything else with shortest exact representation.
void write_csv(const ObservationTable& table, const std::string& path);

// (treated, control) row counts.
std::pair<Eigen::Index, Eigen::Index> arm_counts(const ObservationTable& table);

ColumnKind detect_kind(const Eigen::Ref<const Eigen::VectorXd>& column);

}  // namespace ce
