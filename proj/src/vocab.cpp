#include "psygen/vocab.hpp"

#include <sstream>

#include "psygen/common.hpp"

namespace psygen {

Vocabulary::Vocabulary() {
  auto reserve = [this](const std::string& t) {
    index_.emplace(t, static_cast<int>(tokens_.size()));
    tokens_.push_back(t);
  };
  reserve("<pad>");
  reserve("<bos>");
  reserve("<eos>");
  reserve("<unk>");
  reserve("<ned>");
  reserve("<emo>");
  reserve("<pgt>");
  reserve("<cxt>");
  for (int i = 0; i < kNumNeeds; ++i) reserve("<need:" + std::string(kNeedNames[i]) + ">");
  for (int i = 0; i < kNumEmotions; ++i) reserve("<emotion:" + std::string(kEmotionNames[i]) + ">");
  PSYGEN_CONTRACT(size() == kReservedCount, "reserved vocab block size mismatch");
}

int Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(token);
  return id;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  PSYGEN_CONTRACT(id >= 0 && id < size(), "token id out of range");
  return tokens_[static_cast<size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<int> Vocabulary::encode_text(const std::string& text) const {
  return encode(tokenize(text));
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

std::string Vocabulary::decode_text(const std::vector<int>& ids) const {
  return join_tokens(decode(ids));
}

std::string Vocabulary::to_text() const {
  std::ostringstream os;
  for (const auto& t : tokens_) os << t << '\n';
  return os.str();
}

Vocabulary Vocabulary::from_text(const std::string& text) {
  Vocabulary v;
  std::istringstream is(text);
  std::string line;
  int row = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (row < kReservedCount) {
      PSYGEN_CHECK(line == v.tokens_[static_cast<size_t>(row)], Status::Data,
                   "vocab reserved block mismatch at row " + std::to_string(row));
    } else {
      PSYGEN_CHECK(v.index_.find(line) == v.index_.end(), Status::Data,
                   "duplicate vocab token: " + line);
      v.add(line);
    }
    ++row;
  }
  PSYGEN_CHECK(row >= kReservedCount, Status::Data, "vocab text truncated");
  return v;
}

void Vocabulary::save(const std::string& path) const { write_file(path, to_text()); }

Vocabulary Vocabulary::load(const std::string& path) { return from_text(read_file(path)); }

}  // namespace psygen
