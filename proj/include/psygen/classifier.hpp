#pragma once

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "psygen/corpus.hpp"
#include "psygen/labels.hpp"
#include "psygen/nn.hpp"
#include "psygen/synth.hpp"

namespace psygen {

/// Anything that maps an event text to a label index. Index 0 is the
/// "none" label in both the need and emotion spaces.
class TextLabeler {
 public:
  virtual ~TextLabeler() = default;
  virtual int num_labels() const = 0;
  virtual int predict(const std::string& text) const = 0;
};

struct LabeledEvent {
  std::string text;
  int label = 0;
};

struct ClassifierConfig {
  int d_embed = 32;
  int min_freq = 1;
  double lr = 1e-2;
  int epochs = 30;
  int batch_size = 16;
  uint64_t seed = 1;
};

struct ClassifierEval {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

/// Mean-of-embeddings text encoder with a linear head. Small enough to train
/// in seconds on desk-scale corpora; index 0 of the token table is the
/// unknown-word row, used for out-of-vocabulary and empty inputs.
class BagClassifier : public TextLabeler {
 public:
  BagClassifier(int num_labels, ClassifierConfig cfg);

  /// Builds the token table from the train split, then optimizes with Adam.
  /// Refuses degenerate data that carries fewer than two distinct labels.
  ClassifierEval fit(const std::vector<LabeledEvent>& train,
                     const std::vector<LabeledEvent>& dev);

  int num_labels() const override { return num_labels_; }
  int predict(const std::string& text) const override;

  /// Softmax over the head logits; sums to 1.
  Eigen::VectorXd probs(const std::string& text) const;

 private:
  std::vector<int> token_ids(const std::string& text) const;
  Eigen::RowVectorXd encode(const std::string& text) const;

  int num_labels_;
  ClassifierConfig cfg_;
  std::unordered_map<std::string, int> token_to_id_;
  nn::ParamStore store_;
  nn::Param* emb_ = nullptr;
  nn::Param* head_w_ = nullptr;
  nn::Param* head_b_ = nullptr;
};

/// Accuracy and macro-F1 of any labeler over gold data. F1 is averaged over
/// the labels that occur in the gold set or in the predictions.
ClassifierEval evaluate_labeler(const TextLabeler& labeler,
                                const std::vector<LabeledEvent>& data);

/// Exact scorer for synthetic data: predicts the label whose keyword appears
/// in the event, none when no keyword does. Two keywords from different
/// labels in one event violate the generator's contract and raise Data.
class KeywordScorer : public TextLabeler {
 public:
  enum class Kind { Need, Emotion };

  KeywordScorer(Kind kind, const Lexicon& lexicon);

  int num_labels() const override { return num_labels_; }
  int predict(const std::string& text) const override;

 private:
  int num_labels_;
  std::unordered_map<std::string, int> keyword_to_label_;
};

struct ConsistencyResult {
  double nc = 0.0;
  double ec = 0.0;
};

/// Fraction of events whose predicted label matches the chain label, taken
/// over generated positions (indices 1..4 of each 5-event story) unless
/// all_positions also scores the given first event.
ConsistencyResult nc_ec(const std::vector<std::array<std::string, kEventsPerStory>>& stories,
                        const std::vector<NeedChain>& need_chains,
                        const std::vector<EmotionChain>& emotion_chains,
                        const TextLabeler& need_labeler, const TextLabeler& emotion_labeler,
                        bool all_positions = false);

}  // namespace psygen
