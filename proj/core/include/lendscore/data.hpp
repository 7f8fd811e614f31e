#pragma once

#include "lendscore/common.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lendscore::data {

enum class ColumnKind { numeric, categorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  /// Expected category levels, categorical columns only. May be left empty
  /// for columns whose levels are learned from training data.
  std::vector<std::string> categories;

  void validate() const;
};

/// Describes which raw columns are features, which is the target, and the two
/// retained target labels. Economics columns (loan principal and realized
/// payment) are named here when the table carries them; they are never
/// features.
struct FeatureSchema {
  std::vector<ColumnSpec> columns;
  std::string target_name;
  std::string positive_label;  // encoded as 1
  std::string negative_label;  // encoded as 0
  std::string funded_column;   // "" when absent
  std::string payment_column;  // "" when absent

  void validate() const;
  const ColumnSpec* find(const std::string& name) const;
};

/// Verbatim cells per row; the empty string marks a missing cell.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column_index(const std::string& name) const;
  std::size_t column_index_or_throw(const std::string& name) const;
};

struct Economics {
  std::vector<double> funded_amount;
  std::vector<double> total_payment;

  std::size_t size() const { return funded_amount.size(); }
};

/// Encoded feature matrix plus labels, ready for model fitting.
struct Dataset {
  Matrix X;
  std::vector<int> y;
  std::vector<std::string> feature_names;
  std::optional<Economics> economics;

  std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(X.cols()); }
  void validate() const;
  Dataset subset(const std::vector<std::size_t>& indices) const;
};

/// Loads a CSV file and checks the schema's target column is present.
/// Cells are preserved verbatim; ragged rows raise DataError with the row index.
RawTable load_csv(const std::filesystem::path& path, const FeatureSchema& schema);

/// Writes a RawTable with RFC-4180 quoting (atomic rename).
void write_csv(const RawTable& table, const std::filesystem::path& path);

struct TargetMap {
  std::vector<int> labels;               // one entry per kept row
  std::vector<std::size_t> kept_rows;    // indices into the raw table
  std::size_t dropped = 0;               // rows with a target outside the two labels
};

/// Maps positive_label -> 1 and negative_label -> 0; any other target value
/// drops the row. Throws DataError when nothing survives.
TargetMap map_target(const RawTable& raw, const FeatureSchema& schema);

/// Pulls the economics columns for the given raw rows. Throws DataError when
/// a named column is absent or holds a non-numeric/invalid amount.
Economics extract_economics(const RawTable& raw, const FeatureSchema& schema,
                            const std::vector<std::size_t>& rows);

}  // namespace lendscore::data
