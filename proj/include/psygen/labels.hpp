#pragma once

#include <array>
#include <optional>
#include <string>

#include "psygen/common.hpp"

namespace psygen {

// Maslow needs plus "none". Enum order (after None) is the low->high
// hierarchy used by the tie-break rule.
enum class Need : int {
  None = 0,
  Physiological = 1,
  Stability = 2,
  Love = 3,
  Esteem = 4,
  SelfActualization = 5,
};
inline constexpr int kNumNeeds = 6;

// Plutchik basic emotions plus "none".
enum class Emotion : int {
  None = 0,
  Joy = 1,
  Trust = 2,
  Anger = 3,
  Surprise = 4,
  Sadness = 5,
  Disgust = 6,
  Fear = 7,
  Anticipation = 8,
};
inline constexpr int kNumEmotions = 9;

inline constexpr std::array<const char*, kNumNeeds> kNeedNames = {
    "none", "physiological", "stability", "love", "esteem", "self_actualization"};

inline constexpr std::array<const char*, kNumEmotions> kEmotionNames = {
    "none", "joy", "trust", "anger", "surprise", "sadness", "disgust", "fear", "anticipation"};

inline const char* need_name(Need n) { return kNeedNames[static_cast<int>(n)]; }
inline const char* emotion_name(Emotion e) { return kEmotionNames[static_cast<int>(e)]; }

inline std::optional<Need> need_from_name(const std::string& name) {
  for (int i = 0; i < kNumNeeds; ++i)
    if (name == kNeedNames[i]) return static_cast<Need>(i);
  return std::nullopt;
}

inline std::optional<Emotion> emotion_from_name(const std::string& name) {
  for (int i = 0; i < kNumEmotions; ++i)
    if (name == kEmotionNames[i]) return static_cast<Emotion>(i);
  return std::nullopt;
}

// Position in the low->high hierarchy; None sits outside the order.
inline int need_rank(Need n) { return static_cast<int>(n); }

using NeedChain = std::array<Need, 5>;
using EmotionChain = std::array<Emotion, 5>;

std::string valid_need_names();
std::string valid_emotion_names();

}  // namespace psygen
