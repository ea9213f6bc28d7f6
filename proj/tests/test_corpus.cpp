#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "psygen/corpus.hpp"

using namespace psygen;

namespace {

// Five-event record with distinct per-event words plus shared filler.
StoryRecord make_record(int i) {
  StoryRecord r;
  r.story_id = "story-" + std::to_string(i);
  r.protagonist = "alice";
  for (int e = 0; e < kEventsPerStory; ++e) {
    r.events[e] = "alice did thing " + std::to_string(e) + " again";
    r.mentions[e] = e == 0 ? "alice" : "she";
    r.needs[e] = static_cast<Need>((e + i) % kNumNeeds);
    r.emotions[e] = static_cast<Emotion>((e + i) % kNumEmotions);
  }
  return r;
}

CharacterAnnotation::Appearance appear(int sentence, const std::string& mention,
                                       std::array<int, kNumNeeds> nv = {},
                                       std::array<int, kNumEmotions> ev = {}) {
  CharacterAnnotation::Appearance a;
  a.sentence = sentence;
  a.mention = mention;
  a.need_votes = nv;
  a.emotion_votes = ev;
  return a;
}

AnnotationStory make_annotation() {
  AnnotationStory st;
  st.story_id = "anno-1";
  for (int i = 0; i < kEventsPerStory; ++i)
    st.sentences[i] = "sentence number " + std::to_string(i);
  CharacterAnnotation alice;
  alice.name = "Alice";
  for (int i = 0; i < kEventsPerStory; ++i) {
    std::array<int, kNumNeeds> nv{};
    nv[1 + i % 5] = 3;  // unanimous real need per event
    std::array<int, kNumEmotions> ev{};
    ev[1 + i % 8] = 3;
    alice.appearances.push_back(appear(i, i == 0 ? "Alice" : "she", nv, ev));
  }
  CharacterAnnotation bob;
  bob.name = "Bob";
  bob.appearances.push_back(appear(0, "Bob"));
  bob.appearances.push_back(appear(2, "he"));
  st.characters = {alice, bob};
  return st;
}

}  // namespace

TEST_CASE("corpus: need plurality vote with hierarchy tie-break") {
  CHECK(select_top1_need({0, 0, 0, 1, 3, 0}) == Need::Esteem);
  CHECK(select_top1_need({0, 2, 0, 0, 2, 0}) == Need::Physiological);
  CHECK(select_top1_need({0, 0, 0, 0, 0, 0}) == Need::None);
  CHECK(select_top1_need({3, 0, 0, 0, 0, 0}) == Need::None);
  // A real label on a shared maximum beats the none column.
  CHECK(select_top1_need({2, 0, 0, 2, 0, 0}) == Need::Love);
  CHECK(select_top1_need({1, 1, 1, 0, 0, 0}) == Need::Physiological);
}

TEST_CASE("corpus: emotion plurality vote breaks ties by seeded draw") {
  std::array<int, kNumEmotions> votes{};
  votes[static_cast<int>(Emotion::Joy)] = 2;
  votes[static_cast<int>(Emotion::Fear)] = 2;

  bool saw_joy = false, saw_fear = false;
  for (uint64_t seed = 0; seed < 64; ++seed) {
    Emotion pick = select_top1_emotion(votes, seed);
    CHECK((pick == Emotion::Joy || pick == Emotion::Fear));
    CHECK(select_top1_emotion(votes, seed) == pick);  // same seed, same pick
    saw_joy = saw_joy || pick == Emotion::Joy;
    saw_fear = saw_fear || pick == Emotion::Fear;
  }
  CHECK(saw_joy);
  CHECK(saw_fear);

  CHECK(select_top1_emotion({}, 5) == Emotion::None);
  std::array<int, kNumEmotions> none_only{};
  none_only[0] = 3;
  CHECK(select_top1_emotion(none_only, 5) == Emotion::None);
  std::array<int, kNumEmotions> clear{};
  clear[static_cast<int>(Emotion::Sadness)] = 2;
  clear[static_cast<int>(Emotion::Joy)] = 1;
  for (uint64_t seed = 0; seed < 8; ++seed)
    CHECK(select_top1_emotion(clear, seed) == Emotion::Sadness);
}

TEST_CASE("corpus: string-keyed vote selection validates label names") {
  std::map<std::string, int> votes = {{"esteem", 3}, {"love", 1}};
  CHECK(select_top1(votes, LabelKind::Need, 1) == "esteem");
  std::map<std::string, int> emo = {{"joy", 2}};
  CHECK(select_top1(emo, LabelKind::Emotion, 1) == "joy");
  std::map<std::string, int> bad = {{"hunger", 2}};
  CHECK(oracle::thrown_status([&] { select_top1(bad, LabelKind::Need, 1); }) ==
        Status::Data);
}

TEST_CASE("corpus: extract_record picks the fully-annotated character") {
  AnnotationStory st = make_annotation();
  auto rec = extract_record(st, 7);
  REQUIRE(rec.has_value());
  CHECK(rec->story_id == "anno-1");
  CHECK(rec->protagonist == "Alice");
  CHECK(rec->mentions[0] == "Alice");
  CHECK(rec->mentions[1] == "she");
  for (int e = 0; e < kEventsPerStory; ++e) {
    CHECK(rec->events[e] == st.sentences[e]);
    CHECK(rec->needs[e] == static_cast<Need>(1 + e % 5));
    CHECK(rec->emotions[e] == static_cast<Emotion>(1 + e % 8));
  }

  // Determinism at fixed seed.
  auto again = extract_record(st, 7);
  REQUIRE(again.has_value());
  CHECK(again->emotions == rec->emotions);
}

TEST_CASE("corpus: extract_record frequency and listing-order tie rules") {
  AnnotationStory st = make_annotation();
  // Give Bob full coverage plus an extra appearance: he outranks Alice.
  st.characters[1].appearances = {appear(0, "Bob"), appear(1, "he"), appear(2, "he"),
                                  appear(3, "he"), appear(4, "he"), appear(2, "Bob")};
  auto rec = extract_record(st, 7);
  REQUIRE(rec.has_value());
  CHECK(rec->protagonist == "Bob");

  // Equal frequency: the first listed qualifier wins.
  st.characters[1].appearances.pop_back();
  rec = extract_record(st, 7);
  REQUIRE(rec.has_value());
  CHECK(rec->protagonist == "Alice");
}

TEST_CASE("corpus: extract_record merges same-sentence votes and falls back on names") {
  AnnotationStory st = make_annotation();
  // Second appearance of Alice in sentence 0 with different votes; sums decide.
  std::array<int, kNumNeeds> nv{};
  nv[static_cast<int>(Need::Love)] = 2;
  st.characters[0].appearances[0].need_votes = {};
  st.characters[0].appearances[0].need_votes[static_cast<int>(Need::Esteem)] = 1;
  st.characters[0].appearances.push_back(appear(0, "her", nv, {}));
  auto rec = extract_record(st, 7);
  REQUIRE(rec.has_value());
  CHECK(rec->needs[0] == Need::Love);       // 2 beats 1 after merging
  CHECK(rec->mentions[0] == "Alice");       // first appearance's mention wins

  // Empty mention falls back to the character name.
  st.characters[0].appearances[1].mention = "";
  rec = extract_record(st, 7);
  REQUIRE(rec.has_value());
  CHECK(rec->mentions[1] == "Alice");
}

TEST_CASE("corpus: extract_record returns nothing without a qualified character") {
  AnnotationStory st = make_annotation();
  st.characters.erase(st.characters.begin());  // only Bob, seen twice
  CHECK_FALSE(extract_record(st, 7).has_value());

  ExtractStats stats;
  std::vector<AnnotationStory> both = {make_annotation(), st};
  auto recs = extract_records(both, 7, &stats);
  CHECK(recs.size() == 1);
  CHECK(stats.stories_in == 2);
  CHECK(stats.records_out == 1);
  CHECK(stats.no_protagonist == 1);
}

TEST_CASE("corpus: split sizes, partition, and determinism") {
  std::vector<StoryRecord> ten;
  for (int i = 0; i < 10; ++i) ten.push_back(make_record(i));
  DatasetSplit s = split_dataset(ten, 42);
  CHECK(s.train.size() == 8);
  CHECK(s.dev.size() == 1);
  CHECK(s.test.size() == 1);

  std::vector<StoryRecord> many;
  for (int i = 0; i < 25; ++i) many.push_back(make_record(i));
  DatasetSplit m = split_dataset(many, 42);
  CHECK(m.train.size() == 21);
  CHECK(m.dev.size() == 2);
  CHECK(m.test.size() == 2);

  std::set<std::string> ids;
  for (const auto& r : m.train) ids.insert(r.story_id);
  for (const auto& r : m.dev) ids.insert(r.story_id);
  for (const auto& r : m.test) ids.insert(r.story_id);
  CHECK(ids.size() == 25);

  DatasetSplit m2 = split_dataset(many, 42);
  for (size_t i = 0; i < m.dev.size(); ++i) CHECK(m2.dev[i].story_id == m.dev[i].story_id);
  for (size_t i = 0; i < m.test.size(); ++i) CHECK(m2.test[i].story_id == m.test[i].story_id);

  std::vector<StoryRecord> nine(many.begin(), many.begin() + 9);
  CHECK(oracle::thrown_status([&] { split_dataset(nine, 1); }) == Status::Data);
}

TEST_CASE("corpus: sample expansion covers targets 2..5") {
  StoryRecord r = make_record(3);
  std::vector<TrainingSample> samples = expand_samples(r);
  REQUIRE(samples.size() == 4);
  for (int k = 0; k < 4; ++k) {
    const TrainingSample& s = samples[k];
    const int m = k + 2;
    CHECK(s.story_id == r.story_id);
    CHECK(s.m == m);
    REQUIRE(s.context.size() == static_cast<size_t>(m - 1));
    REQUIRE(s.mentions.size() == static_cast<size_t>(m));
    REQUIRE(s.needs.size() == static_cast<size_t>(m));
    REQUIRE(s.emotions.size() == static_cast<size_t>(m));
    for (int i = 0; i < m - 1; ++i) CHECK(s.context[i] == r.events[i]);
    for (int i = 0; i < m; ++i) {
      CHECK(s.mentions[i] == r.mentions[i]);
      CHECK(s.needs[i] == r.needs[i]);
      CHECK(s.emotions[i] == r.emotions[i]);
    }
    CHECK(s.target == r.events[m - 1]);
    CHECK(s.need_chain == r.needs);
    CHECK(s.emotion_chain == r.emotions);
  }

  std::vector<StoryRecord> three = {make_record(0), make_record(1), make_record(2)};
  CHECK(expand_samples(three).size() == 12);
}

TEST_CASE("corpus: vocabulary honours the frequency floor and is deterministic") {
  std::vector<StoryRecord> recs = {make_record(0)};
  recs[0].events[0] = "solitary appears once";
  // "solitary"/"appears"/"once" occur once; "thing" occurs in events 1..4.
  Vocabulary v1 = build_vocab(recs, 1);
  CHECK(v1.id("solitary") != Vocabulary::kUnk);
  CHECK(v1.id("thing") != Vocabulary::kUnk);
  Vocabulary v2 = build_vocab(recs, 2);
  CHECK(v2.id("solitary") == Vocabulary::kUnk);
  CHECK(v2.id("thing") != Vocabulary::kUnk);
  CHECK(v2.id("she") != Vocabulary::kUnk);  // mentions count too

  CHECK(build_vocab(recs, 2).to_text() == v2.to_text());
  CHECK(oracle::thrown_status([&] { build_vocab({}, 1); }) == Status::Data);
}

TEST_CASE("corpus: record JSON round trip and rejection of broken rows") {
  StoryRecord r = make_record(5);
  StoryRecord back = record_from_json(record_to_json(r));
  CHECK(back.story_id == r.story_id);
  CHECK(back.protagonist == r.protagonist);
  CHECK(back.events == r.events);
  CHECK(back.mentions == r.mentions);
  CHECK(back.needs == r.needs);
  CHECK(back.emotions == r.emotions);

  CHECK(oracle::thrown_status([&] { record_from_json("{not json"); }) == Status::Data);
  CHECK(oracle::thrown_status([&] { record_from_json("{\"story_id\":\"x\"}"); }) ==
        Status::Data);
}

TEST_CASE("corpus: sample JSON round trip enforces the history contract") {
  TrainingSample s = oracle::tiny_sample(3);
  TrainingSample back = sample_from_json(sample_to_json(s));
  CHECK(back.story_id == s.story_id);
  CHECK(back.m == s.m);
  CHECK(back.context == s.context);
  CHECK(back.mentions == s.mentions);
  CHECK(back.needs == s.needs);
  CHECK(back.emotions == s.emotions);
  CHECK(back.need_chain == s.need_chain);
  CHECK(back.emotion_chain == s.emotion_chain);
  CHECK(back.target == s.target);

  // History labels must be a prefix of the story chain.
  TrainingSample broken = s;
  broken.needs[0] = broken.need_chain[0] == Need::Love ? Need::Esteem : Need::Love;
  std::string line = sample_to_json(broken);
  CHECK(oracle::thrown_status([&] { sample_from_json(line); }) == Status::Data);

  TrainingSample bad_m = s;
  bad_m.m = 6;
  bad_m.context.resize(5, "x");
  bad_m.mentions.resize(6, "x");
  bad_m.needs.resize(6, Need::None);
  bad_m.emotions.resize(6, Emotion::None);
  std::string line2 = sample_to_json(bad_m);
  CHECK(oracle::thrown_status([&] { sample_from_json(line2); }) == Status::Data);
}

TEST_CASE("corpus: record and sample files round trip") {
  oracle::TempDir dir;
  std::vector<StoryRecord> recs = {make_record(0), make_record(1)};
  save_records(recs, dir.file("r.jsonl"));
  auto back = load_records(dir.file("r.jsonl"));
  REQUIRE(back.size() == 2);
  CHECK(back[1].story_id == recs[1].story_id);

  std::vector<TrainingSample> samples = expand_samples(recs);
  save_samples(samples, dir.file("s.jsonl"));
  auto sback = load_samples(dir.file("s.jsonl"));
  REQUIRE(sback.size() == samples.size());
  CHECK(sback[3].target == samples[3].target);
}

TEST_CASE("corpus: raw ingestion mixes formats and tolerates malformed rows") {
  oracle::TempDir dir;
  const std::string path = dir.file("raw.jsonl");
  {
    std::ofstream out(path);
    out << annotation_to_json(make_annotation()) << "\n";
    out << "\n";  // blank, not counted
    out << record_to_json(make_record(1)) << "\n";
    out << "{\"neither\": true}\n";
    out << "this is not json\n";
  }
  RawLoadResult res = load_raw_dataset(path);
  CHECK(res.rows == 4);
  CHECK(res.annotated.size() == 1);
  CHECK(res.records.size() == 1);
  CHECK(res.malformed == 2);
  CHECK(res.first_error == path + ":4: row is neither an annotation story nor an extracted record");
  CHECK(res.annotated[0].story_id == "anno-1");
  CHECK(res.annotated[0].characters.size() == 2);
}

TEST_CASE("corpus: raw ingestion rejects vote sums above the annotator count") {
  oracle::TempDir dir;
  AnnotationStory st = make_annotation();
  st.characters[0].appearances[0].need_votes = {1, 1, 1, 1, 0, 0};  // sums to 4
  const std::string path = dir.file("raw.jsonl");
  {
    std::ofstream out(path);
    out << annotation_to_json(st) << "\n";
  }
  RawLoadResult res = load_raw_dataset(path);
  CHECK(res.rows == 1);
  CHECK(res.malformed == 1);
  CHECK(res.annotated.empty());
  CHECK_FALSE(res.first_error.empty());
}
