#include "psygen/corpus.hpp"

#include <algorithm>
#include <json.hpp>
#include <map>
#include <sstream>
#include <unordered_map>

#include "psygen/common.hpp"

namespace psygen {

using json = nlohmann::json;

std::string valid_need_names() {
  std::string out;
  for (int i = 0; i < kNumNeeds; ++i) {
    if (i) out += ", ";
    out += kNeedNames[i];
  }
  return out;
}

std::string valid_emotion_names() {
  std::string out;
  for (int i = 0; i < kNumEmotions; ++i) {
    if (i) out += ", ";
    out += kEmotionNames[i];
  }
  return out;
}

namespace {

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Per-event tie-break stream: independent of map iteration order and of
// how many ties earlier events had.
uint64_t event_seed(uint64_t base, const std::string& story_id, int event) {
  return mix64(base ^ fnv1a(story_id) ^ (0x100000001b3ull * static_cast<uint64_t>(event + 1)));
}

template <size_t N>
int vote_max(const std::array<int, N>& votes) {
  int best = 0;
  for (int v : votes) best = std::max(best, v);
  return best;
}

}  // namespace

Need select_top1_need(const std::array<int, kNumNeeds>& votes) {
  for (int v : votes) PSYGEN_CONTRACT(v >= 0, "negative vote count");
  int best = vote_max(votes);
  if (best == 0) return Need::None;
  // None carries no rank, so a real need wins any tie against it.
  Need pick = Need::None;
  bool have_real = false;
  for (int i = 1; i < kNumNeeds; ++i) {
    if (votes[i] == best && !have_real) {
      pick = static_cast<Need>(i);
      have_real = true;  // enum order is already the Maslow low->high order
    }
  }
  if (!have_real) return Need::None;
  return pick;
}

Emotion select_top1_emotion(const std::array<int, kNumEmotions>& votes, uint64_t seed) {
  for (int v : votes) PSYGEN_CONTRACT(v >= 0, "negative vote count");
  int best = vote_max(votes);
  if (best == 0) return Emotion::None;
  std::vector<Emotion> tied;
  for (int i = 0; i < kNumEmotions; ++i)
    if (votes[i] == best) tied.push_back(static_cast<Emotion>(i));
  if (tied.size() == 1) return tied[0];
  Rng rng(seed);
  return tied[rng.index(tied.size())];
}

std::string select_top1(const std::map<std::string, int>& votes, LabelKind kind,
                        uint64_t seed) {
  PSYGEN_CHECK(!votes.empty(), Status::Data, "empty vote map");
  if (kind == LabelKind::Need) {
    std::array<int, kNumNeeds> typed{};
    for (const auto& [name, count] : votes) {
      auto n = need_from_name(name);
      PSYGEN_CHECK(n.has_value(), Status::Data,
                   "unknown need label '" + name + "' (valid: " + valid_need_names() + ")");
      PSYGEN_CHECK(count >= 0, Status::Data, "negative vote count for '" + name + "'");
      typed[static_cast<int>(*n)] += count;
    }
    return need_name(select_top1_need(typed));
  }
  std::array<int, kNumEmotions> typed{};
  for (const auto& [name, count] : votes) {
    auto e = emotion_from_name(name);
    PSYGEN_CHECK(e.has_value(), Status::Data,
                 "unknown emotion label '" + name + "' (valid: " + valid_emotion_names() + ")");
    PSYGEN_CHECK(count >= 0, Status::Data, "negative vote count for '" + name + "'");
    typed[static_cast<int>(*e)] += count;
  }
  return emotion_name(select_top1_emotion(typed, seed));
}

std::optional<StoryRecord> extract_record(const AnnotationStory& story, uint64_t seed) {
  // Qualify: annotated in all five sentences (strictly more than four).
  int best_idx = -1;
  size_t best_freq = 0;
  int best_first = kEventsPerStory;
  for (size_t ci = 0; ci < story.characters.size(); ++ci) {
    const auto& ch = story.characters[ci];
    std::array<bool, kEventsPerStory> seen{};
    int first = kEventsPerStory;
    for (const auto& ap : ch.appearances) {
      seen[static_cast<size_t>(ap.sentence)] = true;
      first = std::min(first, ap.sentence);
    }
    int distinct = 0;
    for (bool s : seen) distinct += s ? 1 : 0;
    if (distinct <= 4) continue;
    size_t freq = ch.appearances.size();
    if (best_idx < 0 || freq > best_freq || (freq == best_freq && first < best_first)) {
      best_idx = static_cast<int>(ci);
      best_freq = freq;
      best_first = first;
    }
  }
  if (best_idx < 0) return std::nullopt;

  const auto& ch = story.characters[static_cast<size_t>(best_idx)];
  StoryRecord rec;
  rec.story_id = story.story_id;
  rec.protagonist = ch.name;
  rec.events = story.sentences;
  for (int ev = 0; ev < kEventsPerStory; ++ev) {
    std::array<int, kNumNeeds> nv{};
    std::array<int, kNumEmotions> emv{};
    std::string mention;
    for (const auto& ap : ch.appearances) {
      if (ap.sentence != ev) continue;
      if (mention.empty()) mention = ap.mention;
      for (int i = 0; i < kNumNeeds; ++i) nv[i] += ap.need_votes[i];
      for (int i = 0; i < kNumEmotions; ++i) emv[i] += ap.emotion_votes[i];
    }
    rec.mentions[static_cast<size_t>(ev)] = mention.empty() ? ch.name : mention;
    rec.needs[static_cast<size_t>(ev)] = select_top1_need(nv);
    rec.emotions[static_cast<size_t>(ev)] =
        select_top1_emotion(emv, event_seed(seed, story.story_id, ev));
  }
  return rec;
}

std::vector<StoryRecord> extract_records(const std::vector<AnnotationStory>& stories,
                                         uint64_t seed, ExtractStats* stats) {
  std::vector<StoryRecord> out;
  ExtractStats local;
  local.stories_in = stories.size();
  for (const auto& st : stories) {
    auto rec = extract_record(st, seed);
    if (rec.has_value()) {
      out.push_back(std::move(*rec));
    } else {
      ++local.no_protagonist;
    }
  }
  local.records_out = out.size();
  if (stats) *stats = local;
  return out;
}

DatasetSplit split_dataset(std::vector<StoryRecord> records, uint64_t seed) {
  size_t n = records.size();
  PSYGEN_CHECK(n >= 10, Status::Data,
               "split needs at least 10 stories, got " + std::to_string(n));
  Rng rng(seed);
  rng.shuffle(records);
  size_t hold = n / 10;
  DatasetSplit split;
  split.train.assign(records.begin(), records.end() - 2 * static_cast<long>(hold));
  split.dev.assign(records.end() - 2 * static_cast<long>(hold),
                   records.end() - static_cast<long>(hold));
  split.test.assign(records.end() - static_cast<long>(hold), records.end());
  return split;
}

std::vector<TrainingSample> expand_samples(const StoryRecord& record) {
  std::vector<TrainingSample> out;
  out.reserve(4);
  for (int m = 2; m <= kEventsPerStory; ++m) {
    TrainingSample s;
    s.story_id = record.story_id;
    s.m = m;
    for (int i = 0; i < m - 1; ++i) s.context.push_back(record.events[static_cast<size_t>(i)]);
    for (int i = 0; i < m; ++i) {
      s.mentions.push_back(record.mentions[static_cast<size_t>(i)]);
      s.needs.push_back(record.needs[static_cast<size_t>(i)]);
      s.emotions.push_back(record.emotions[static_cast<size_t>(i)]);
    }
    s.need_chain = record.needs;
    s.emotion_chain = record.emotions;
    s.target = record.events[static_cast<size_t>(m - 1)];
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TrainingSample> expand_samples(const std::vector<StoryRecord>& records) {
  std::vector<TrainingSample> out;
  out.reserve(records.size() * 4);
  for (const auto& r : records) {
    auto s = expand_samples(r);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

Vocabulary build_vocab(const std::vector<StoryRecord>& records, int min_freq) {
  PSYGEN_CHECK(!records.empty(), Status::Data, "cannot build vocabulary from zero records");
  std::unordered_map<std::string, int> freq;
  auto count = [&freq](const std::string& text) {
    for (auto& tok : tokenize(text)) ++freq[tok];
  };
  for (const auto& r : records) {
    count(r.protagonist);
    for (const auto& e : r.events) count(e);
    for (const auto& m : r.mentions) count(m);
  }
  std::vector<std::string> kept;
  kept.reserve(freq.size());
  for (const auto& [tok, c] : freq)
    if (c >= min_freq) kept.push_back(tok);
  std::sort(kept.begin(), kept.end());
  Vocabulary vocab;
  for (const auto& tok : kept) vocab.add(tok);
  return vocab;
}

namespace {

json record_to_obj(const StoryRecord& r) {
  json needs = json::array(), emotions = json::array();
  for (auto n : r.needs) needs.push_back(need_name(n));
  for (auto e : r.emotions) emotions.push_back(emotion_name(e));
  return json{{"story_id", r.story_id}, {"protagonist", r.protagonist},
              {"mentions", r.mentions}, {"events", r.events},
              {"needs", needs},         {"emotions", emotions}};
}

template <size_t N>
std::array<std::string, N> string_array(const json& j, const char* field) {
  PSYGEN_CHECK(j.is_array() && j.size() == N, Status::Data,
               std::string(field) + " must be an array of " + std::to_string(N) + " strings");
  std::array<std::string, N> out;
  for (size_t i = 0; i < N; ++i) {
    PSYGEN_CHECK(j[i].is_string(), Status::Data, std::string(field) + " entries must be strings");
    out[i] = j[i].get<std::string>();
  }
  return out;
}

StoryRecord record_from_obj(const json& j) {
  StoryRecord r;
  PSYGEN_CHECK(j.contains("story_id") && j["story_id"].is_string(), Status::Data,
               "record missing story_id");
  r.story_id = j["story_id"].get<std::string>();
  PSYGEN_CHECK(j.contains("protagonist") && j["protagonist"].is_string(), Status::Data,
               "record missing protagonist");
  r.protagonist = j["protagonist"].get<std::string>();
  r.mentions = string_array<kEventsPerStory>(j.value("mentions", json()), "mentions");
  r.events = string_array<kEventsPerStory>(j.value("events", json()), "events");
  auto needs = string_array<kEventsPerStory>(j.value("needs", json()), "needs");
  auto emotions = string_array<kEventsPerStory>(j.value("emotions", json()), "emotions");
  for (size_t i = 0; i < kEventsPerStory; ++i) {
    PSYGEN_CHECK(!r.events[i].empty(), Status::Data,
                 "record " + r.story_id + " has an empty event");
    auto n = need_from_name(needs[i]);
    PSYGEN_CHECK(n.has_value(), Status::Data,
                 "unknown need label '" + needs[i] + "' (valid: " + valid_need_names() + ")");
    r.needs[i] = *n;
    auto e = emotion_from_name(emotions[i]);
    PSYGEN_CHECK(e.has_value(), Status::Data,
                 "unknown emotion label '" + emotions[i] + "' (valid: " + valid_emotion_names() + ")");
    r.emotions[i] = *e;
  }
  return r;
}

CharacterAnnotation::Appearance appearance_from_obj(const json& j) {
  CharacterAnnotation::Appearance ap;
  PSYGEN_CHECK(j.contains("sentence") && j["sentence"].is_number_integer(), Status::Data,
               "appearance missing sentence index");
  ap.sentence = j["sentence"].get<int>();
  PSYGEN_CHECK(ap.sentence >= 0 && ap.sentence < kEventsPerStory, Status::Data,
               "appearance sentence index out of range: " + std::to_string(ap.sentence));
  ap.mention = j.value("mention", std::string());
  auto read_votes = [&j](const char* field, auto& out, auto from_name, auto valid) {
    if (!j.contains(field)) return;
    PSYGEN_CHECK(j[field].is_object(), Status::Data,
                 std::string(field) + " must be a label->count object");
    int total = 0;
    for (const auto& [name, count] : j[field].items()) {
      const json& cv = count;
      auto lab = from_name(name);
      PSYGEN_CHECK(lab.has_value(), Status::Data,
                   "unknown label '" + name + "' in " + field + " (valid: " + valid() + ")");
      PSYGEN_CHECK(cv.is_number_integer() && cv.get<int>() >= 0, Status::Data,
                   "vote count for '" + name + "' must be a non-negative integer");
      out[static_cast<size_t>(*lab)] += cv.get<int>();
      total += cv.get<int>();
    }
    PSYGEN_CHECK(total <= 3, Status::Data,
                 std::string(field) + " votes sum to " + std::to_string(total) + " (> 3 annotators)");
  };
  read_votes("needs", ap.need_votes, need_from_name, valid_need_names);
  read_votes("emotions", ap.emotion_votes, emotion_from_name, valid_emotion_names);
  return ap;
}

AnnotationStory annotation_from_obj(const json& j) {
  AnnotationStory st;
  PSYGEN_CHECK(j.contains("story_id") && j["story_id"].is_string(), Status::Data,
               "annotation row missing story_id");
  st.story_id = j["story_id"].get<std::string>();
  st.sentences = string_array<kEventsPerStory>(j.value("sentences", json()), "sentences");
  for (size_t i = 0; i < kEventsPerStory; ++i)
    PSYGEN_CHECK(!st.sentences[i].empty(), Status::Data,
                 "annotation " + st.story_id + " has an empty sentence");
  PSYGEN_CHECK(j.contains("characters") && j["characters"].is_array(), Status::Data,
               "annotation row missing characters array");
  for (const auto& cj : j["characters"]) {
    CharacterAnnotation ch;
    PSYGEN_CHECK(cj.contains("name") && cj["name"].is_string(), Status::Data,
                 "character missing name");
    ch.name = cj["name"].get<std::string>();
    PSYGEN_CHECK(cj.contains("appearances") && cj["appearances"].is_array(), Status::Data,
                 "character '" + ch.name + "' missing appearances array");
    for (const auto& aj : cj["appearances"]) ch.appearances.push_back(appearance_from_obj(aj));
    st.characters.push_back(std::move(ch));
  }
  return st;
}

}  // namespace

std::string record_to_json(const StoryRecord& record) { return record_to_obj(record).dump(); }

StoryRecord record_from_json(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  PSYGEN_CHECK(!j.is_discarded() && j.is_object(), Status::Data, "record row is not a JSON object");
  return record_from_obj(j);
}

void save_records(const std::vector<StoryRecord>& records, const std::string& path) {
  std::ostringstream os;
  for (const auto& r : records) os << record_to_json(r) << '\n';
  write_file(path, os.str());
}

std::vector<StoryRecord> load_records(const std::string& path) {
  std::istringstream is(read_file(path));
  std::vector<StoryRecord> out;
  std::string line;
  size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const std::exception& e) {
      fail(Status::Data, path + ":" + std::to_string(row) + ": " + e.what());
    }
  }
  return out;
}

std::string sample_to_json(const TrainingSample& s) {
  json needs = json::array(), emotions = json::array();
  for (auto n : s.needs) needs.push_back(need_name(n));
  for (auto e : s.emotions) emotions.push_back(emotion_name(e));
  json chain_n = json::array(), chain_e = json::array();
  for (auto n : s.need_chain) chain_n.push_back(need_name(n));
  for (auto e : s.emotion_chain) chain_e.push_back(emotion_name(e));
  json j{{"story_id", s.story_id}, {"m", s.m},
         {"context", s.context},   {"mentions", s.mentions},
         {"needs", needs},         {"emotions", emotions},
         {"need_chain", chain_n},  {"emotion_chain", chain_e},
         {"target", s.target}};
  return j.dump();
}

TrainingSample sample_from_json(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  PSYGEN_CHECK(!j.is_discarded() && j.is_object(), Status::Data, "sample row is not a JSON object");
  TrainingSample s;
  s.story_id = j.value("story_id", std::string());
  PSYGEN_CHECK(j.contains("m") && j["m"].is_number_integer(), Status::Data, "sample missing m");
  s.m = j["m"].get<int>();
  PSYGEN_CHECK(s.m >= 2 && s.m <= kEventsPerStory, Status::Data,
               "sample m out of range: " + std::to_string(s.m));
  s.context = j.value("context", std::vector<std::string>());
  s.mentions = j.value("mentions", std::vector<std::string>());
  PSYGEN_CHECK(s.context.size() == static_cast<size_t>(s.m - 1), Status::Data,
               "sample context length must be m-1");
  PSYGEN_CHECK(s.mentions.size() == static_cast<size_t>(s.m), Status::Data,
               "sample mentions length must be m");
  auto read_labels = [&j](const char* field, size_t want, auto from_name, auto valid, auto& out) {
    PSYGEN_CHECK(j.contains(field) && j[field].is_array() && (want == 0 || j[field].size() == want),
                 Status::Data, std::string("sample field ") + field + " has wrong shape");
    size_t i = 0;
    for (const auto& v : j[field]) {
      PSYGEN_CHECK(v.is_string(), Status::Data, std::string(field) + " entries must be strings");
      auto lab = from_name(v.get<std::string>());
      PSYGEN_CHECK(lab.has_value(), Status::Data,
                   "unknown label '" + v.get<std::string>() + "' in " + field +
                       " (valid: " + valid() + ")");
      out[i++] = *lab;
    }
  };
  s.needs.resize(static_cast<size_t>(s.m));
  s.emotions.resize(static_cast<size_t>(s.m));
  read_labels("needs", static_cast<size_t>(s.m), need_from_name, valid_need_names, s.needs);
  read_labels("emotions", static_cast<size_t>(s.m), emotion_from_name, valid_emotion_names,
              s.emotions);
  read_labels("need_chain", kEventsPerStory, need_from_name, valid_need_names, s.need_chain);
  read_labels("emotion_chain", kEventsPerStory, emotion_from_name, valid_emotion_names,
              s.emotion_chain);
  PSYGEN_CHECK(j.contains("target") && j["target"].is_string(), Status::Data,
               "sample missing target");
  s.target = j["target"].get<std::string>();
  PSYGEN_CHECK(!s.target.empty(), Status::Data, "sample target must be nonempty");
  for (int i = 0; i < s.m; ++i) {
    PSYGEN_CHECK(s.needs[static_cast<size_t>(i)] == s.need_chain[static_cast<size_t>(i)] &&
                     s.emotions[static_cast<size_t>(i)] == s.emotion_chain[static_cast<size_t>(i)],
                 Status::Data, "sample history must be a prefix of its chain");
  }
  return s;
}

void save_samples(const std::vector<TrainingSample>& samples, const std::string& path) {
  std::ostringstream os;
  for (const auto& s : samples) os << sample_to_json(s) << '\n';
  write_file(path, os.str());
}

std::vector<TrainingSample> load_samples(const std::string& path) {
  std::istringstream is(read_file(path));
  std::vector<TrainingSample> out;
  std::string line;
  size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    try {
      out.push_back(sample_from_json(line));
    } catch (const std::exception& e) {
      fail(Status::Data, path + ":" + std::to_string(row) + ": " + e.what());
    }
  }
  return out;
}

std::string annotation_to_json(const AnnotationStory& story) {
  json chars = json::array();
  for (const auto& ch : story.characters) {
    json aps = json::array();
    for (const auto& ap : ch.appearances) {
      json needs = json::object(), emotions = json::object();
      for (int i = 0; i < kNumNeeds; ++i)
        if (ap.need_votes[static_cast<size_t>(i)] > 0)
          needs[kNeedNames[i]] = ap.need_votes[static_cast<size_t>(i)];
      for (int i = 0; i < kNumEmotions; ++i)
        if (ap.emotion_votes[static_cast<size_t>(i)] > 0)
          emotions[kEmotionNames[i]] = ap.emotion_votes[static_cast<size_t>(i)];
      aps.push_back(json{{"sentence", ap.sentence},
                         {"mention", ap.mention},
                         {"needs", needs},
                         {"emotions", emotions}});
    }
    chars.push_back(json{{"name", ch.name}, {"appearances", aps}});
  }
  json j{{"story_id", story.story_id}, {"sentences", story.sentences}, {"characters", chars}};
  return j.dump();
}

RawLoadResult load_raw_dataset(const std::string& path) {
  std::istringstream is(read_file(path));
  RawLoadResult res;
  std::string line;
  size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++res.rows;
    json j = json::parse(line, nullptr, false);
    auto note = [&res, &path, row](const std::string& what) {
      ++res.malformed;
      if (res.first_error.empty())
        res.first_error = path + ":" + std::to_string(row) + ": " + what;
    };
    if (j.is_discarded() || !j.is_object()) {
      note("not a JSON object");
      continue;
    }
    try {
      if (j.contains("characters")) {
        res.annotated.push_back(annotation_from_obj(j));
      } else if (j.contains("protagonist")) {
        res.records.push_back(record_from_obj(j));
      } else {
        note("row is neither an annotation story nor an extracted record");
      }
    } catch (const std::exception& e) {
      note(e.what());
    }
  }
  return res;
}

}  // namespace psygen
