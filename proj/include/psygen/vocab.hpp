#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "psygen/labels.hpp"

namespace psygen {

/// Token <-> id bijection with a fixed reserved block at the front:
/// pad/bos/eos/unk, the four structural markers, and one token per
/// need/emotion label value. Corpus tokens follow.
class Vocabulary {
 public:
  Vocabulary();

  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNedMarker = 4;
  static constexpr int kEmoMarker = 5;
  static constexpr int kPgtMarker = 6;
  static constexpr int kCxtMarker = 7;
  static constexpr int kNeedBase = 8;                    // 6 ids
  static constexpr int kEmotionBase = kNeedBase + kNumNeeds;  // 9 ids
  static constexpr int kReservedCount = kEmotionBase + kNumEmotions;

  int need_id(Need n) const { return kNeedBase + static_cast<int>(n); }
  int emotion_id(Emotion e) const { return kEmotionBase + static_cast<int>(e); }

  // Adds a corpus token if absent; returns its id.
  int add(const std::string& token);
  // Id lookup; unknown tokens map to kUnk.
  int id(const std::string& token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<int> encode_text(const std::string& text) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;
  std::string decode_text(const std::vector<int>& ids) const;

  std::string to_text() const;            // one token per line
  static Vocabulary from_text(const std::string& text);
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace psygen
