#include "lendscore/csv.hpp"

#include "lendscore/common.hpp"

#include <fstream>
#include <sstream>

namespace lendscore::csv {

namespace {

// Splits raw CSV text into records of fields, honoring RFC-4180 quoting.
std::vector<std::vector<std::string>> parse_records(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;   // true once the current record has any content
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field += '"';
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field += c;
        ++i;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        ++i;
        break;
      case ',':
        fields.push_back(std::move(field));
        field.clear();
        field_started = true;
        ++i;
        break;
      case '\r':
        ++i;
        break;
      case '\n':
        if (field_started || !field.empty() || !fields.empty()) {
          fields.push_back(std::move(field));
          field.clear();
          records.push_back(std::move(fields));
          fields.clear();
          field_started = false;
        }
        ++i;
        break;
      default:
        field += c;
        field_started = true;
        ++i;
        break;
    }
  }
  if (in_quotes) throw DataError("csv: unterminated quoted field");
  if (field_started || !field.empty() || !fields.empty()) {
    fields.push_back(std::move(field));
    records.push_back(std::move(fields));
  }
  return records;
}

}  // namespace

Table parse(const std::string& text) {
  auto records = parse_records(text);
  if (records.empty()) throw DataError("csv: empty input (missing header row)");
  Table table;
  table.header = std::move(records.front());
  const std::size_t width = table.header.size();
  table.rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != width) {
      throw DataError("csv: ragged row " + std::to_string(r - 1) + ": expected " +
                      std::to_string(width) + " fields, got " + std::to_string(records[r].size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

Table read(const std::filesystem::path& path) {
  try {
    return parse(read_text(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw DataError("read failure: " + path.string());
  return ss.str();
}

std::string escape_field(const std::string& field) {
  const bool needs_quotes =
      field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::string to_string(const Table& table) {
  std::string out;
  auto emit_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += escape_field(row[i]);
    }
    out += '\n';
  };
  emit_row(table.header);
  for (const auto& row : table.rows) emit_row(row);
  return out;
}

void write(const std::filesystem::path& path, const Table& table) {
  write_text_atomic(path, to_string(table));
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  namespace fs = std::filesystem;
  fs::path dir = path.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for write: " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("write failure: " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace lendscore::csv
