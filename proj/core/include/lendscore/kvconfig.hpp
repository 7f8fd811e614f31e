#pragma once

#include "lendscore/common.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lendscore {

/// Flat key=value configuration with dotted section prefixes, e.g.
///   preprocess.missing_threshold=0.30
///   models=logistic_l2,random_forest
/// Lines starting with '#' (after whitespace) are comments. Values keep
/// embedded spaces; surrounding whitespace is trimmed.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig parse_file(const std::filesystem::path& path);
  static KvConfig parse_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list; empty value or absent key yields fallback.
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback = {}) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  /// Required variants: throw ConfigError naming the key when absent/invalid.
  std::string require_string(const std::string& key) const;
  double require_double(const std::string& key) const;
  std::uint64_t require_u64(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::vector<std::string> split_list(const std::string& value);

}  // namespace lendscore
