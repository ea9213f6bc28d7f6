#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psygen/labels.hpp"
#include "psygen/vocab.hpp"

namespace psygen {

constexpr int kEventsPerStory = 5;

/// One five-event story with a protagonist track: per event the surface
/// mention of the protagonist plus that event's need and emotion label.
struct StoryRecord {
  std::string story_id;
  std::string protagonist;
  std::array<std::string, kEventsPerStory> mentions;
  std::array<std::string, kEventsPerStory> events;
  NeedChain needs;
  EmotionChain emotions;
};

/// Teacher-forcing sample: predict event m from events 1..m-1 plus the
/// protagonist's label history and the full story-level chains.
struct TrainingSample {
  std::string story_id;
  int m = 2;  // 1-based index of the target event, 2..5
  std::vector<std::string> context;   // events 1..m-1
  std::vector<std::string> mentions;  // protagonist mentions 1..m
  std::vector<Need> needs;            // n_1..n_m
  std::vector<Emotion> emotions;      // e_1..e_m
  NeedChain need_chain;
  EmotionChain emotion_chain;
  std::string target;  // event m
};

/// Raw annotation row: three annotators voted per character appearance.
struct CharacterAnnotation {
  struct Appearance {
    int sentence = 0;  // 0-based event index
    std::string mention;
    std::array<int, kNumNeeds> need_votes{};
    std::array<int, kNumEmotions> emotion_votes{};
  };
  std::string name;
  std::vector<Appearance> appearances;
};

struct AnnotationStory {
  std::string story_id;
  std::array<std::string, kEventsPerStory> sentences;
  std::vector<CharacterAnnotation> characters;
};

enum class LabelKind { Need, Emotion };

// Plurality vote with fixed tie handling: tied needs resolve to the lowest
// tied label in the Maslow order, tied emotions to a seeded uniform draw.
// All-zero votes resolve to the none label of the kind.
Need select_top1_need(const std::array<int, kNumNeeds>& votes);
Emotion select_top1_emotion(const std::array<int, kNumEmotions>& votes, uint64_t seed);
std::string select_top1(const std::map<std::string, int>& votes, LabelKind kind,
                        uint64_t seed);

// Protagonist choice and per-event label track for one annotated story.
// Returns nullopt when no character is annotated in all five sentences.
std::optional<StoryRecord> extract_record(const AnnotationStory& story, uint64_t seed);

struct ExtractStats {
  size_t stories_in = 0;
  size_t records_out = 0;
  size_t no_protagonist = 0;
};

std::vector<StoryRecord> extract_records(const std::vector<AnnotationStory>& stories,
                                         uint64_t seed, ExtractStats* stats = nullptr);

struct DatasetSplit {
  std::vector<StoryRecord> train, dev, test;
};

// Seeded shuffle at story granularity; dev and test each take floor(N/10)
// stories, the rest train. Requires at least ten stories.
DatasetSplit split_dataset(std::vector<StoryRecord> records, uint64_t seed);

// Four samples per story, target events 2..5.
std::vector<TrainingSample> expand_samples(const StoryRecord& record);
std::vector<TrainingSample> expand_samples(const std::vector<StoryRecord>& records);

// Corpus tokens from events and mentions, frequency-filtered.
Vocabulary build_vocab(const std::vector<StoryRecord>& records, int min_freq);

// JSONL round-trip for extracted stories and expanded samples.
std::string record_to_json(const StoryRecord& record);
StoryRecord record_from_json(const std::string& line);
void save_records(const std::vector<StoryRecord>& records, const std::string& path);
std::vector<StoryRecord> load_records(const std::string& path);

std::string sample_to_json(const TrainingSample& sample);
TrainingSample sample_from_json(const std::string& line);
void save_samples(const std::vector<TrainingSample>& samples, const std::string& path);
std::vector<TrainingSample> load_samples(const std::string& path);

std::string annotation_to_json(const AnnotationStory& story);

/// Mixed-format ingestion: each JSONL row is either a raw annotation story
/// (has "characters") or an already-extracted record (has "protagonist").
/// Malformed rows are counted and skipped, not fatal.
struct RawLoadResult {
  std::vector<AnnotationStory> annotated;
  std::vector<StoryRecord> records;
  size_t rows = 0;
  size_t malformed = 0;
  std::string first_error;  // diagnostic for the first skipped row
};

RawLoadResult load_raw_dataset(const std::string& path);

}  // namespace psygen
