#pragma once

#include <array>
#include <string>
#include <vector>

#include "psygen/corpus.hpp"
#include "psygen/kvconfig.hpp"

namespace psygen {

/// Keyword lexicon for the synthetic corpus. Index 0 of each table is the
/// none label and stays empty; every other label needs at least three
/// keywords, and all keyword sets are pairwise disjoint across both kinds.
struct Lexicon {
  std::array<std::vector<std::string>, kNumNeeds> need_keywords;
  std::array<std::vector<std::string>, kNumEmotions> emotion_keywords;
};

Lexicon default_lexicon();
void validate_lexicon(const Lexicon& lex);

// Config keys: need.<label> / emotion.<label> = comma-separated keywords.
Lexicon lexicon_from_config(const KvConfig& cfg);
std::string lexicon_to_config(const Lexicon& lex);
Lexicon load_lexicon(const std::string& path);
void save_lexicon(const Lexicon& lex, const std::string& path);

struct SynthOptions {
  int n = 100;
  uint64_t seed = 1;
  double persistence = 0.6;  // probability a chain repeats its previous label
};

// Deterministic corpus with exact planted labels: event i embeds exactly one
// keyword of needs[i] and one of emotions[i] (none labels embed none).
std::vector<StoryRecord> synth_generate(const SynthOptions& opts, const Lexicon& lex);

// Re-render a record as a raw annotation story with unanimous 3-0 votes,
// optionally adding a non-qualifying side character.
AnnotationStory record_to_annotation(const StoryRecord& record, Rng& rng);

}  // namespace psygen
