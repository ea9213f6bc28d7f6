#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace psygen {

/// Flat key=value config file. '#' starts a comment, blank lines ignored,
/// later assignments win. CLI overrides are applied with set().
class KvConfig {
 public:
  static KvConfig from_file(const std::string& path);
  static KvConfig from_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get(const std::string& key, const std::string& fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& items() const { return values_; }

  // Sorted key=value lines; stable content for manifest hashing.
  std::string canonical() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace psygen
