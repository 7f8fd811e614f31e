#include "lendscore/kvconfig.hpp"

#include "lendscore/common.hpp"
#include "lendscore/csv.hpp"

#include <algorithm>
#include <cctype>

namespace lendscore {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    std::size_t comma = value.find(',', start);
    if (comma == std::string::npos) comma = value.size();
    std::string item = trim(value.substr(start, comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    start = comma + 1;
  }
  return out;
}

KvConfig KvConfig::parse_string(const std::string& text) {
  KvConfig cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = trim(text.substr(pos, eol - pos));
    ++line_no;
    pos = eol + 1;
    if (line.empty() || line[0] == '#') {
      if (pos > text.size()) break;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value, got '" +
                        line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    }
    cfg.values_[key] = value;
    if (pos > text.size()) break;
  }
  return cfg;
}

KvConfig KvConfig::parse_file(const std::filesystem::path& path) {
  try {
    return parse_string(csv::read_text(path));
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

std::optional<std::string> KvConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto v = get(key);
  return v ? *v : fallback;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  auto parsed = parse_double(*v);
  if (!parsed) throw ConfigError("config key '" + key + "': not a number: '" + *v + "'");
  return *parsed;
}

long long KvConfig::get_int(const std::string& key, long long fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  auto parsed = parse_int(*v);
  if (!parsed) throw ConfigError("config key '" + key + "': not an integer: '" + *v + "'");
  return *parsed;
}

std::uint64_t KvConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  auto parsed = parse_int(*v);
  if (!parsed || *parsed < 0) {
    throw ConfigError("config key '" + key + "': not a non-negative integer: '" + *v + "'");
  }
  return static_cast<std::uint64_t>(*parsed);
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::string s = *v;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config key '" + key + "': not a boolean: '" + *v + "'");
}

std::vector<std::string> KvConfig::get_list(const std::string& key,
                                            const std::vector<std::string>& fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  return split_list(*v);
}

std::string KvConfig::require_string(const std::string& key) const {
  auto v = get(key);
  if (!v || v->empty()) throw ConfigError("missing required config key '" + key + "'");
  return *v;
}

double KvConfig::require_double(const std::string& key) const {
  if (!has(key)) throw ConfigError("missing required config key '" + key + "'");
  return get_double(key, 0.0);
}

std::uint64_t KvConfig::require_u64(const std::string& key) const {
  if (!has(key)) throw ConfigError("missing required config key '" + key + "'");
  return get_u64(key, 0);
}

}  // namespace lendscore
