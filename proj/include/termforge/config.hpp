#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace termforge {

/// Flat `dotted.key = value` configuration. Lines starting with '#' are
/// comments; later assignments override earlier ones.
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  /// Applies a `key=value` override; throws UsageError when malformed.
  void apply_override(std::string_view assignment);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  /// Throws UsageError when the key is missing.
  const std::string& require(const std::string& key) const;

  std::string get(const std::string& key, const std::string& fallback) const;
  long get_int(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list; empty items are dropped.
  std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback = {}) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string format() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace termforge
