#include "psygen/synth.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "psygen/common.hpp"

namespace psygen {

namespace {

struct NameEntry {
  const char* name;
  const char* pronoun;
};

constexpr NameEntry kNames[] = {
    {"Alice", "She"}, {"Bob", "He"},   {"Carol", "She"}, {"David", "He"},  {"Emma", "She"},
    {"Frank", "He"},  {"Grace", "She"}, {"Henry", "He"},  {"Ivy", "She"},   {"Jack", "He"},
};
constexpr size_t kNumNames = sizeof(kNames) / sizeof(kNames[0]);

// {p} mention, {n} need keyword, {e} emotion keyword. Filler vocabulary is
// kept disjoint from the default lexicon so keyword scans stay exact.
const std::vector<std::string> kBothTemplates = {
    "{p} was {n} and {e} that day .",
    "that morning {p} seemed {n} and quite {e} .",
    "{p} grew {n} and then {e} by evening .",
    "everyone noticed {p} was {n} yet {e} .",
};
const std::vector<std::string> kNeedTemplates = {
    "{p} was {n} for most of the day .",
    "by noon {p} seemed truly {n} .",
    "{p} stayed {n} through the long hours .",
};
const std::vector<std::string> kEmotionTemplates = {
    "{p} felt {e} for a long while .",
    "later {p} turned {e} near the market .",
    "{p} sounded {e} when the neighbours called .",
};
const std::vector<std::string> kPlainTemplates = {
    "{p} wandered around the small town .",
    "{p} watched the river from the old bridge .",
    "{p} tidied the kitchen before supper .",
};

std::string substitute(std::string text, const std::string& key, const std::string& value) {
  auto pos = text.find(key);
  while (pos != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos = text.find(key, pos + value.size());
  }
  return text;
}

// Exact scan used as a rendering contract: one keyword per non-none label,
// zero stray keywords of any other label.
void check_event_keywords(const std::string& event, const Lexicon& lex, Need need,
                          Emotion emotion) {
  auto tokens = tokenize(event);
  auto count_hits = [&tokens](const std::vector<std::string>& kws) {
    int hits = 0;
    for (const auto& t : tokens)
      if (std::find(kws.begin(), kws.end(), t) != kws.end()) ++hits;
    return hits;
  };
  for (int i = 0; i < kNumNeeds; ++i) {
    int want = (i == static_cast<int>(need) && i != 0) ? 1 : 0;
    PSYGEN_CHECK(count_hits(lex.need_keywords[static_cast<size_t>(i)]) == want, Status::Config,
                 "rendered event violates the keyword contract (need " +
                     std::string(kNeedNames[i]) + "): " + event);
  }
  for (int i = 0; i < kNumEmotions; ++i) {
    int want = (i == static_cast<int>(emotion) && i != 0) ? 1 : 0;
    PSYGEN_CHECK(count_hits(lex.emotion_keywords[static_cast<size_t>(i)]) == want, Status::Config,
                 "rendered event violates the keyword contract (emotion " +
                     std::string(kEmotionNames[i]) + "): " + event);
  }
}

}  // namespace

Lexicon default_lexicon() {
  Lexicon lex;
  lex.need_keywords[static_cast<int>(Need::Physiological)] = {"hungry", "thirsty", "famished"};
  lex.need_keywords[static_cast<int>(Need::Stability)] = {"safe", "secure", "sheltered"};
  lex.need_keywords[static_cast<int>(Need::Love)] = {"beloved", "hugged", "adored"};
  lex.need_keywords[static_cast<int>(Need::Esteem)] = {"praised", "admired", "victorious"};
  lex.need_keywords[static_cast<int>(Need::SelfActualization)] = {"masterful", "inventive",
                                                                  "accomplished"};
  lex.emotion_keywords[static_cast<int>(Emotion::Joy)] = {"happy", "cheerful", "delighted"};
  lex.emotion_keywords[static_cast<int>(Emotion::Trust)] = {"trusting", "faithful", "reliant"};
  lex.emotion_keywords[static_cast<int>(Emotion::Anger)] = {"angry", "furious", "outraged"};
  lex.emotion_keywords[static_cast<int>(Emotion::Surprise)] = {"surprised", "astonished",
                                                               "startled"};
  lex.emotion_keywords[static_cast<int>(Emotion::Sadness)] = {"sad", "gloomy", "mournful"};
  lex.emotion_keywords[static_cast<int>(Emotion::Disgust)] = {"disgusted", "nauseated",
                                                              "repulsed"};
  lex.emotion_keywords[static_cast<int>(Emotion::Fear)] = {"afraid", "terrified", "panicked"};
  lex.emotion_keywords[static_cast<int>(Emotion::Anticipation)] = {"eager", "expectant",
                                                                   "hopeful"};
  return lex;
}

void validate_lexicon(const Lexicon& lex) {
  std::set<std::string> seen;
  auto check_set = [&seen](const std::vector<std::string>& kws, const std::string& label) {
    PSYGEN_CHECK(kws.size() >= 3, Status::Config,
                 "label " + label + " needs at least 3 keywords, has " +
                     std::to_string(kws.size()));
    for (const auto& kw : kws) {
      auto toks = tokenize(kw);
      PSYGEN_CHECK(toks.size() == 1 && toks[0] == kw, Status::Config,
                   "keyword must be a single lowercase token: '" + kw + "'");
      PSYGEN_CHECK(seen.insert(kw).second, Status::Config,
                   "keyword '" + kw + "' appears under more than one label");
    }
  };
  PSYGEN_CHECK(lex.need_keywords[0].empty() && lex.emotion_keywords[0].empty(), Status::Config,
               "the none label must have no keywords");
  for (int i = 1; i < kNumNeeds; ++i)
    check_set(lex.need_keywords[static_cast<size_t>(i)], std::string("need ") + kNeedNames[i]);
  for (int i = 1; i < kNumEmotions; ++i)
    check_set(lex.emotion_keywords[static_cast<size_t>(i)],
              std::string("emotion ") + kEmotionNames[i]);
}

Lexicon lexicon_from_config(const KvConfig& cfg) {
  Lexicon lex;
  auto split_csv = [](const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
      size_t a = item.find_first_not_of(" \t");
      size_t b = item.find_last_not_of(" \t");
      if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
    }
    return out;
  };
  for (int i = 1; i < kNumNeeds; ++i) {
    std::string key = std::string("need.") + kNeedNames[i];
    PSYGEN_CHECK(cfg.has(key), Status::Config, "lexicon config missing key " + key);
    lex.need_keywords[static_cast<size_t>(i)] = split_csv(cfg.get(key, ""));
  }
  for (int i = 1; i < kNumEmotions; ++i) {
    std::string key = std::string("emotion.") + kEmotionNames[i];
    PSYGEN_CHECK(cfg.has(key), Status::Config, "lexicon config missing key " + key);
    lex.emotion_keywords[static_cast<size_t>(i)] = split_csv(cfg.get(key, ""));
  }
  validate_lexicon(lex);
  return lex;
}

std::string lexicon_to_config(const Lexicon& lex) {
  std::ostringstream os;
  auto emit = [&os](const std::string& key, const std::vector<std::string>& kws) {
    os << key << '=';
    for (size_t i = 0; i < kws.size(); ++i) os << (i ? "," : "") << kws[i];
    os << '\n';
  };
  for (int i = 1; i < kNumNeeds; ++i)
    emit(std::string("need.") + kNeedNames[i], lex.need_keywords[static_cast<size_t>(i)]);
  for (int i = 1; i < kNumEmotions; ++i)
    emit(std::string("emotion.") + kEmotionNames[i], lex.emotion_keywords[static_cast<size_t>(i)]);
  return os.str();
}

Lexicon load_lexicon(const std::string& path) {
  return lexicon_from_config(KvConfig::from_file(path));
}

void save_lexicon(const Lexicon& lex, const std::string& path) {
  write_file(path, lexicon_to_config(lex));
}

std::vector<StoryRecord> synth_generate(const SynthOptions& opts, const Lexicon& lex) {
  PSYGEN_CHECK(opts.n > 0, Status::Config, "synth story count must be positive");
  PSYGEN_CHECK(opts.persistence >= 0.0 && opts.persistence <= 1.0, Status::Config,
               "persistence must lie in [0,1]");
  validate_lexicon(lex);
  Rng rng(opts.seed);
  std::vector<StoryRecord> out;
  out.reserve(static_cast<size_t>(opts.n));
  for (int s = 0; s < opts.n; ++s) {
    StoryRecord rec;
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "synth-%06d", s + 1);
    rec.story_id = idbuf;
    const NameEntry& who = kNames[rng.index(kNumNames)];
    rec.protagonist = who.name;

    // Markov chains: uniform start, then repeat with the persistence
    // probability, otherwise move uniformly to a different label.
    auto walk = [&rng, &opts](int prev, int k) {
      if (prev >= 0 && rng.uniform() < opts.persistence) return prev;
      int pick = static_cast<int>(rng.index(static_cast<size_t>(prev >= 0 ? k - 1 : k)));
      if (prev >= 0 && pick >= prev) ++pick;
      return pick;
    };
    int n_prev = -1, e_prev = -1;
    for (int ev = 0; ev < kEventsPerStory; ++ev) {
      n_prev = walk(n_prev, kNumNeeds);
      e_prev = walk(e_prev, kNumEmotions);
      rec.needs[static_cast<size_t>(ev)] = static_cast<Need>(n_prev);
      rec.emotions[static_cast<size_t>(ev)] = static_cast<Emotion>(e_prev);
    }

    for (int ev = 0; ev < kEventsPerStory; ++ev) {
      rec.mentions[static_cast<size_t>(ev)] =
          (ev == 0 || rng.coin(0.5)) ? who.name : who.pronoun;
      Need need = rec.needs[static_cast<size_t>(ev)];
      Emotion emotion = rec.emotions[static_cast<size_t>(ev)];
      const std::vector<std::string>* pool;
      if (need != Need::None && emotion != Emotion::None)
        pool = &kBothTemplates;
      else if (need != Need::None)
        pool = &kNeedTemplates;
      else if (emotion != Emotion::None)
        pool = &kEmotionTemplates;
      else
        pool = &kPlainTemplates;
      std::string text = (*pool)[rng.index(pool->size())];
      text = substitute(text, "{p}", rec.mentions[static_cast<size_t>(ev)]);
      if (need != Need::None) {
        const auto& kws = lex.need_keywords[static_cast<size_t>(need)];
        text = substitute(text, "{n}", kws[rng.index(kws.size())]);
      }
      if (emotion != Emotion::None) {
        const auto& kws = lex.emotion_keywords[static_cast<size_t>(emotion)];
        text = substitute(text, "{e}", kws[rng.index(kws.size())]);
      }
      check_event_keywords(text, lex, need, emotion);
      rec.events[static_cast<size_t>(ev)] = text;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

AnnotationStory record_to_annotation(const StoryRecord& record, Rng& rng) {
  AnnotationStory st;
  st.story_id = record.story_id;
  st.sentences = record.events;
  CharacterAnnotation hero;
  hero.name = record.protagonist;
  for (int ev = 0; ev < kEventsPerStory; ++ev) {
    CharacterAnnotation::Appearance ap;
    ap.sentence = ev;
    ap.mention = record.mentions[static_cast<size_t>(ev)];
    ap.need_votes[static_cast<size_t>(record.needs[static_cast<size_t>(ev)])] = 3;
    ap.emotion_votes[static_cast<size_t>(record.emotions[static_cast<size_t>(ev)])] = 3;
    hero.appearances.push_back(ap);
  }
  st.characters.push_back(std::move(hero));

  // A side character in at most four sentences never qualifies as
  // protagonist, exercising the extraction filter.
  if (rng.uniform() < 0.4) {
    CharacterAnnotation side;
    do {
      side.name = kNames[rng.index(kNumNames)].name;
    } while (side.name == record.protagonist);
    size_t count = 1 + rng.index(4);
    std::vector<int> order = {0, 1, 2, 3, 4};
    rng.shuffle(order);
    std::vector<int> chosen(order.begin(), order.begin() + static_cast<long>(count));
    std::sort(chosen.begin(), chosen.end());
    for (int ev : chosen) {
      CharacterAnnotation::Appearance ap;
      ap.sentence = ev;
      ap.mention = side.name;
      ap.need_votes[rng.index(kNumNeeds)] = 3;
      ap.emotion_votes[rng.index(kNumEmotions)] = 3;
      side.appearances.push_back(ap);
    }
    st.characters.push_back(std::move(side));
  }
  return st;
}

}  // namespace psygen
