#pragma once

#include "lendscore/common.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace lendscore::csv {

/// Parsed CSV contents. Rows are rectangular (enforced by read()).
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads an RFC-4180 CSV file (quoted fields, doubled quotes, CR/LF or LF).
/// First record is the header. Throws DataError on IO failure or on a ragged
/// row, naming the 0-based data row index.
Table read(const std::filesystem::path& path);

/// Parses CSV from a string (same rules as read()).
Table parse(const std::string& text);

/// Quotes a field iff it contains a comma, quote, CR, or LF.
std::string escape_field(const std::string& field);

std::string to_string(const Table& table);

/// Writes atomically: the content lands under a temporary name in the target
/// directory and is renamed into place.
void write(const std::filesystem::path& path, const Table& table);

/// Writes arbitrary text atomically (used for JSON and report artifacts too).
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

std::string read_text(const std::filesystem::path& path);

}  // namespace lendscore::csv
