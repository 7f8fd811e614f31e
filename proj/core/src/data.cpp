#include "lendscore/data.hpp"

#include "lendscore/csv.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lendscore::data {

void ColumnSpec::validate() const {
  if (name.empty()) throw ConfigError("column spec with empty name");
  if (kind == ColumnKind::categorical) {
    if (!categories.empty()) {
      std::set<std::string> seen(categories.begin(), categories.end());
      if (seen.size() != categories.size()) {
        throw ConfigError("column '" + name + "': duplicate category levels");
      }
    }
  }
}

void FeatureSchema::validate() const {
  if (target_name.empty()) throw ConfigError("schema: empty target name");
  if (positive_label == negative_label) {
    throw ConfigError("schema: positive and negative labels must differ");
  }
  std::set<std::string> names;
  for (const auto& col : columns) {
    col.validate();
    if (!names.insert(col.name).second) {
      throw ConfigError("schema: duplicate column name '" + col.name + "'");
    }
    if (col.name == target_name) {
      throw ConfigError("schema: target '" + target_name + "' listed among feature columns");
    }
  }
}

const ColumnSpec* FeatureSchema::find(const std::string& name) const {
  for (const auto& col : columns) {
    if (col.name == name) return &col;
  }
  return nullptr;
}

std::optional<std::size_t> RawTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t RawTable::column_index_or_throw(const std::string& name) const {
  auto idx = column_index(name);
  if (!idx) throw DataError("column not found: '" + name + "'");
  return *idx;
}

void Dataset::validate() const {
  const auto n = rows();
  if (y.size() != n) throw DataError("dataset: |y| != rows(X)");
  if (feature_names.size() != cols()) throw DataError("dataset: |feature_names| != cols(X)");
  if (economics) {
    if (economics->funded_amount.size() != n || economics->total_payment.size() != n) {
      throw DataError("dataset: economics length != rows(X)");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (economics->funded_amount[i] <= 0.0) {
        throw DataError("dataset: funded_amount must be > 0 (row " + std::to_string(i) + ")");
      }
      if (economics->total_payment[i] < 0.0) {
        throw DataError("dataset: total_payment must be >= 0 (row " + std::to_string(i) + ")");
      }
    }
  }
  for (int label : y) {
    if (label != 0 && label != 1) throw DataError("dataset: labels must be 0/1");
  }
  if (!X.allFinite()) throw DataError("dataset: X contains NaN or inf");
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.feature_names = feature_names;
  out.X.resize(static_cast<Eigen::Index>(indices.size()), X.cols());
  out.y.reserve(indices.size());
  if (economics) out.economics.emplace();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = static_cast<Eigen::Index>(indices[i]);
    out.X.row(static_cast<Eigen::Index>(i)) = X.row(src);
    out.y.push_back(y[indices[i]]);
    if (economics) {
      out.economics->funded_amount.push_back(economics->funded_amount[indices[i]]);
      out.economics->total_payment.push_back(economics->total_payment[indices[i]]);
    }
  }
  return out;
}

RawTable load_csv(const std::filesystem::path& path, const FeatureSchema& schema) {
  schema.validate();
  csv::Table parsed = csv::read(path);
  RawTable table{std::move(parsed.header), std::move(parsed.rows)};
  if (!table.column_index(schema.target_name)) {
    throw DataError(path.string() + ": target column '" + schema.target_name +
                    "' not present in header");
  }
  return table;
}

void write_csv(const RawTable& table, const std::filesystem::path& path) {
  csv::Table out{table.header, table.rows};
  csv::write(path, out);
}

TargetMap map_target(const RawTable& raw, const FeatureSchema& schema) {
  const std::size_t target = raw.column_index_or_throw(schema.target_name);
  TargetMap result;
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    const std::string& value = raw.rows[r][target];
    if (value == schema.positive_label) {
      result.labels.push_back(1);
      result.kept_rows.push_back(r);
    } else if (value == schema.negative_label) {
      result.labels.push_back(0);
      result.kept_rows.push_back(r);
    } else {
      ++result.dropped;
    }
  }
  if (result.labels.empty()) {
    throw DataError("map_target: no rows with target '" + schema.positive_label + "' or '" +
                    schema.negative_label + "' (dropped " + std::to_string(result.dropped) + ")");
  }
  return result;
}

Economics extract_economics(const RawTable& raw, const FeatureSchema& schema,
                            const std::vector<std::size_t>& rows) {
  if (schema.funded_column.empty() || schema.payment_column.empty()) {
    throw DataError("economics columns not configured (funded/payment)");
  }
  auto funded_idx = raw.column_index(schema.funded_column);
  if (!funded_idx) throw DataError("economics column missing: '" + schema.funded_column + "'");
  auto payment_idx = raw.column_index(schema.payment_column);
  if (!payment_idx) throw DataError("economics column missing: '" + schema.payment_column + "'");
  Economics econ;
  econ.funded_amount.reserve(rows.size());
  econ.total_payment.reserve(rows.size());
  for (std::size_t r : rows) {
    auto funded = parse_double(raw.rows[r][*funded_idx]);
    auto payment = parse_double(raw.rows[r][*payment_idx]);
    if (!funded || *funded <= 0.0) {
      throw DataError("row " + std::to_string(r) + ": invalid funded amount '" +
                      raw.rows[r][*funded_idx] + "'");
    }
    if (!payment || *payment < 0.0) {
      throw DataError("row " + std::to_string(r) + ": invalid total payment '" +
                      raw.rows[r][*payment_idx] + "'");
    }
    econ.funded_amount.push_back(*funded);
    econ.total_payment.push_back(*payment);
  }
  return econ;
}

}  // namespace lendscore::data
