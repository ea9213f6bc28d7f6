#include "psygen/kvconfig.hpp"

#include <sstream>

#include "psygen/common.hpp"

namespace psygen {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

KvConfig KvConfig::from_string(const std::string& text) {
  KvConfig cfg;
  std::istringstream is(text);
  std::string line;
  size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    PSYGEN_CHECK(eq != std::string::npos, Status::Config,
                 "config line " + std::to_string(row) + " has no '=': " + line);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    PSYGEN_CHECK(!key.empty(), Status::Config,
                 "config line " + std::to_string(row) + " has an empty key");
    cfg.values_[key] = value;
  }
  return cfg;
}

KvConfig KvConfig::from_file(const std::string& path) { return from_string(read_file(path)); }

std::string KvConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

int64_t KvConfig::get_int(const std::string& key, int64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    size_t used = 0;
    int64_t v = std::stoll(it->second, &used);
    PSYGEN_CHECK(used == it->second.size(), Status::Config,
                 "config key " + key + " is not an integer: " + it->second);
    return v;
  } catch (const std::invalid_argument&) {
    fail(Status::Config, "config key " + key + " is not an integer: " + it->second);
  } catch (const std::out_of_range&) {
    fail(Status::Config, "config key " + key + " is out of integer range: " + it->second);
  }
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    size_t used = 0;
    double v = std::stod(it->second, &used);
    PSYGEN_CHECK(used == it->second.size(), Status::Config,
                 "config key " + key + " is not a number: " + it->second);
    return v;
  } catch (const std::invalid_argument&) {
    fail(Status::Config, "config key " + key + " is not a number: " + it->second);
  } catch (const std::out_of_range&) {
    fail(Status::Config, "config key " + key + " is out of range: " + it->second);
  }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  fail(Status::Config, "config key " + key + " is not a boolean: " + v);
}

std::string KvConfig::canonical() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << '=' << v << '\n';
  return os.str();
}

}  // namespace psygen
