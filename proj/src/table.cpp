#include "ce/table.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ce {
namespace {

bool is_binary01(const Eigen::VectorXd& v) {
  return ((v.array() == 0.0) || (v.array() == 1.0)).all();
}

void check_structure(const Eigen::VectorXd& y, const Eigen::VectorXd& a, const Eigen::MatrixXd& w,
                     const std::vector<ColumnInfo>& confounders) {
  if (a.size() != y.size() || (w.size() > 0 && w.rows() != y.size()))
    throw DataError("column lengths disagree");
  if (static_cast<Eigen::Index>(confounders.size()) != w.cols())
    throw DataError("confounder metadata does not match matrix width");
  if (!y.allFinite() || !a.allFinite() || !w.allFinite())
    throw DataError("non-finite value in data columns");
}

}  // namespace

ObservationTable ObservationTable::from_columns(Eigen::VectorXd y, Eigen::VectorXd a,
                                                Eigen::MatrixXd w,
                                                std::vector<ColumnInfo> confounders,
                                                std::string outcome_name,
                                                std::string treatment_name) {
  check_structure(y, a, w, confounders);
  if (y.size() < 2) throw DataError("need at least two observations");
  if (!is_binary01(y)) throw DataError("outcome '" + outcome_name + "' must be coded 0/1");
  if (!is_binary01(a)) throw DataError("treatment '" + treatment_name + "' must be coded 0/1");
  const double n1 = a.sum();
  if (n1 == 0.0 || n1 == static_cast<double>(a.size()))
    throw DataError("both treatment arms must be non-empty");
  return from_columns_unchecked(std::move(y), std::move(a), std::move(w), std::move(confounders),
                                std::move(outcome_name), std::move(treatment_name));
}

ObservationTable ObservationTable::from_columns_unchecked(Eigen::VectorXd y, Eigen::VectorXd a,
                                                          Eigen::MatrixXd w,
                                                          std::vector<ColumnInfo> confounders,
                                                          std::string outcome_name,
                                                          std::string treatment_name) {
  check_structure(y, a, w, confounders);
  ObservationTable t;
  t.y_ = std::move(y);
  t.a_ = std::move(a);
  t.w_ = std::move(w);
  t.confounders_ = std::move(confounders);
  t.outcome_name_ = std::move(outcome_name);
  t.treatment_name_ = std::move(treatment_name);
  return t;
}

int ObservationTable::confounder_index(const std::string& name) const {
  for (std::size_t j = 0; j < confounders_.size(); ++j)
    if (confounders_[j].name == name) return static_cast<int>(j);
  return -1;
}

ObservationTable ObservationTable::select_rows(const std::vector<Eigen::Index>& rows) const {
  Eigen::VectorXd y(rows.size()), a(rows.size());
  Eigen::MatrixXd w(static_cast<Eigen::Index>(rows.size()), w_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Eigen::Index r = rows[i];
    if (r < 0 || r >= n()) throw DataError("row index out of range");
    y[static_cast<Eigen::Index>(i)] = y_[r];
    a[static_cast<Eigen::Index>(i)] = a_[r];
    w.row(static_cast<Eigen::Index>(i)) = w_.row(r);
  }
  return from_columns_unchecked(std::move(y), std::move(a), std::move(w), confounders_,
                                outcome_name_, treatment_name_);
}

ColumnKind detect_kind(const Eigen::Ref<const Eigen::VectorXd>& column) {
  bool binary = true, integral = true;
  for (Eigen::Index i = 0; i < column.size(); ++i) {
    const double v = column[i];
    if (v != 0.0 && v != 1.0) binary = false;
    if (v != std::floor(v) || std::abs(v) > 1e15) integral = false;
  }
  if (binary) return ColumnKind::binary;
  return integral ? ColumnKind::integer : ColumnKind::continuous;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trimmed(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool is_missing_token(const std::string& s) {
  if (s.empty() || s == ".") return true;
  std::string low;
  for (char c : s) low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return low == "na" || low == "nan";
}

// Parsed cell: missing flag + value.
struct Cell {
  bool missing = false;
  double value = 0.0;
};

Cell parse_cell(const std::string& raw, std::size_t row, const std::string& column) {
  const std::string s = trimmed(raw);
  if (is_missing_token(s)) return {true, 0.0};
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw DataError("non-numeric value '" + s + "' at data row " + std::to_string(row) +
                    ", column '" + column + "'");
  if (!std::isfinite(v))
    throw DataError("non-finite value at data row " + std::to_string(row) + ", column '" +
                    column + "'");
  return {false, v};
}

}  // namespace

LoadResult load_csv(const std::string& path, const CsvSpec& spec) {
  if (spec.outcome.empty() || spec.treatment.empty())
    throw ConfigError("outcome and treatment column names are required");
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
  const std::vector<std::string> header = split_line(line);

  auto column_of = [&](const std::string& name) {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (trimmed(header[j]) == name) return j;
    throw DataError("column '" + name + "' not found in '" + path + "'");
  };

  const std::size_t y_col = column_of(spec.outcome);
  const std::size_t a_col = column_of(spec.treatment);
  std::vector<std::size_t> w_cols;
  for (const auto& name : spec.confounders) {
    if (name == spec.outcome || name == spec.treatment)
      throw ConfigError("confounder '" + name + "' duplicates outcome or treatment");
    w_cols.push_back(column_of(name));
  }
  std::set<std::size_t> distinct(w_cols.begin(), w_cols.end());
  if (distinct.size() != w_cols.size()) throw ConfigError("duplicate confounder name");

  std::vector<double> ys, as;
  std::vector<std::vector<double>> ws(w_cols.size());
  std::size_t dropped = 0, row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trimmed(line).empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != header.size())
      throw DataError("data row " + std::to_string(row) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(header.size()));
    std::vector<Cell> cells;
    cells.push_back(parse_cell(fields[y_col], row, spec.outcome));
    cells.push_back(parse_cell(fields[a_col], row, spec.treatment));
    for (std::size_t j = 0; j < w_cols.size(); ++j)
      cells.push_back(parse_cell(fields[w_cols[j]], row, spec.confounders[j]));
    const bool any_missing =
        std::any_of(cells.begin(), cells.end(), [](const Cell& c) { return c.missing; });
    if (any_missing) {
      if (spec.missing == MissingPolicy::fail)
        throw DataError("missing value at data row " + std::to_string(row) +
                        " (policy is fail; use drop_rows to skip such rows)");
      ++dropped;
      continue;
    }
    ys.push_back(cells[0].value);
    as.push_back(cells[1].value);
    for (std::size_t j = 0; j < w_cols.size(); ++j) ws[j].push_back(cells[j + 2].value);
  }

  const auto n = static_cast<Eigen::Index>(ys.size());
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  Eigen::VectorXd a = Eigen::Map<Eigen::VectorXd>(as.data(), n);
  Eigen::MatrixXd w(n, static_cast<Eigen::Index>(ws.size()));
  std::vector<ColumnInfo> info;
  for (std::size_t j = 0; j < ws.size(); ++j) {
    w.col(static_cast<Eigen::Index>(j)) = Eigen::Map<Eigen::VectorXd>(ws[j].data(), n);
    info.push_back({spec.confounders[j], detect_kind(w.col(static_cast<Eigen::Index>(j)))});
  }

  if (spec.expand_categorical) {
    std::vector<Eigen::VectorXd> cols;
    std::vector<ColumnInfo> expanded;
    for (std::size_t j = 0; j < info.size(); ++j) {
      const Eigen::VectorXd c = w.col(static_cast<Eigen::Index>(j));
      std::set<double> levels(c.data(), c.data() + c.size());
      if (info[j].kind == ColumnKind::integer && levels.size() >= 3) {
        bool first = true;
        for (double lv : levels) {
          if (first) {  // lowest level is the reference
            first = false;
            continue;
          }
          std::ostringstream name;
          name << info[j].name << "_" << lv;
          cols.push_back((c.array() == lv).cast<double>());
          expanded.push_back({name.str(), ColumnKind::binary});
        }
      } else {
        cols.push_back(c);
        expanded.push_back(info[j]);
      }
    }
    Eigen::MatrixXd we(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) we.col(static_cast<Eigen::Index>(j)) = cols[j];
    w = std::move(we);
    info = std::move(expanded);
  }

  LoadResult out{ObservationTable::from_columns(std::move(y), std::move(a), std::move(w),
                                                std::move(info), spec.outcome, spec.treatment),
                 dropped};
  return out;
}

namespace {

std::string format_value(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, static_cast<long long>(v));
    (void)ec;
    return std::string(buf, ptr);
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

void write_csv(const ObservationTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << table.outcome_name() << "," << table.treatment_name();
  for (const auto& c : table.confounders()) out << "," << c.name;
  out << "\n";
  for (Eigen::Index i = 0; i < table.n(); ++i) {
    out << format_value(table.y()[i]) << "," << format_value(table.a()[i]);
    for (Eigen::Index j = 0; j < table.n_confounders(); ++j)
      out << "," << format_value(table.w()(i, j));
    out << "\n";
  }
  if (!out) throw DataError("write to '" + path + "' failed");
}

std::pair<Eigen::Index, Eigen::Index> arm_counts(const ObservationTable& table) {
  const auto n1 = static_cast<Eigen::Index>(table.a().sum());
  return {n1, table.n() - n1};
}

}  // namespace ce
