#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace psygen {

// Mirrors the psygen_status values of the C API.
enum class Status : int {
  Ok = 0,
  Usage = 1,
  Io = 2,
  Data = 3,
  Config = 4,
  Contract = 5,
  Diverged = 6,
  Internal = 7,
};

const char* status_name(Status s);

class Error : public std::runtime_error {
 public:
  Error(Status status, const std::string& msg) : std::runtime_error(msg), status_(status) {}
  Status status() const { return status_; }

 private:
  Status status_;
};

[[noreturn]] inline void fail(Status s, const std::string& msg) { throw Error(s, msg); }

#define PSYGEN_CHECK(cond, status, msg) \
  do {                                  \
    if (!(cond)) ::psygen::fail((status), (msg)); \
  } while (0)

#define PSYGEN_CONTRACT(cond, msg) PSYGEN_CHECK(cond, ::psygen::Status::Contract, (msg))

/// Deterministic RNG. All draws are pinned to mt19937_64 output so that a
/// fixed seed yields identical streams on any platform (no use of
/// implementation-defined std distributions).
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next() { return gen_(); }

  // [0, 1) with 53 bits of randomness.
  double uniform() { return (next() >> 11) * 0x1.0p-53; }

  // Box-Muller, second value cached.
  double normal();

  // Uniform in [0, n). n must be positive.
  size_t index(size_t n);

  bool coin(double p_true) { return uniform() < p_true; }

  // Fisher-Yates with pinned draws.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

// FNV-1a over bytes; used for manifest input/config hashes.
uint64_t fnv1a(const void* data, size_t len);
uint64_t fnv1a(const std::string& s);
std::string hex64(uint64_t h);

std::string to_lower(std::string s);

// Lowercased word/punctuation tokens: alnum+apostrophe runs are words,
// any other printable character is a single-token.
std::vector<std::string> tokenize(const std::string& text);

std::string join_tokens(const std::vector<std::string>& toks);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
uint64_t hash_file(const std::string& path);

}  // namespace psygen
