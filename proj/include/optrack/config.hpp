#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace optrack {

/// Plain-text configuration: one `key = value` per line, `#` starts a
/// comment, blank lines ignored. Values may be scalars or comma-separated
/// lists. Lookups fall back to the given default when the key is absent.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace optrack
