#include "psygen/common.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace psygen {

const char* status_name(Status s) {
  switch (s) {
    case Status::Ok: return "OK";
    case Status::Usage: return "ERR_USAGE";
    case Status::Io: return "ERR_IO";
    case Status::Data: return "ERR_DATA";
    case Status::Config: return "ERR_CONFIG";
    case Status::Contract: return "ERR_CONTRACT";
    case Status::Diverged: return "ERR_DIVERGED";
    case Status::Internal: return "ERR_INTERNAL";
  }
  return "ERR_INTERNAL";
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  double u1 = 0.0;
  while (u1 <= 0.0) u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

size_t Rng::index(size_t n) {
  PSYGEN_CONTRACT(n > 0, "Rng::index requires n > 0");
  return static_cast<size_t>(next() % n);
}

uint64_t fnv1a(const void* data, size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 1469598103934665603ULL;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

std::string hex64(uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string to_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (char raw : text) {
    auto c = static_cast<unsigned char>(raw);
    if (std::isalnum(c) || c == '\'') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
      if (!std::isspace(c) && std::isprint(c)) out.emplace_back(1, static_cast<char>(c));
    }
  }
  flush();
  return out;
}

std::string join_tokens(const std::vector<std::string>& toks) {
  std::string out;
  for (size_t i = 0; i < toks.size(); ++i) {
    if (i) out.push_back(' ');
    out += toks[i];
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  PSYGEN_CHECK(f.good(), Status::Io, "cannot open file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  PSYGEN_CHECK(f.good(), Status::Io, "cannot write file: " + path);
  f << content;
  PSYGEN_CHECK(f.good(), Status::Io, "write failed: " + path);
}

uint64_t hash_file(const std::string& path) {
  std::string data = read_file(path);
  return fnv1a(data);
}

}  // namespace psygen
