#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace keyrep {

// Flat `key = value` configuration with dotted keys. Blank lines and lines
// starting with '#' are ignored. Reads are tracked so callers can reject
// keys nobody consumed.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  // Accepts "key=value"; later calls override earlier values.
  void set(const std::string& key, const std::string& value);
  void set_assignment(std::string_view assignment);

  bool has(const std::string& key) const;
  const std::string& raw(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Whitespace- or comma-separated list.
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const noexcept { return values_; }
  // Keys present but never read.
  std::vector<std::string> unused_keys() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

double parse_double(std::string_view text, std::string_view what);
long parse_int(std::string_view text, std::string_view what);

}  // namespace keyrep
