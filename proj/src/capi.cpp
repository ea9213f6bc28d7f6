#include "psygen.h"

#include <json.hpp>

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "psygen/pipeline.hpp"

namespace {

using nlohmann::json;
using namespace psygen;

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void deliver(char** out_json, const std::string& text) {
  if (out_json != nullptr) *out_json = dup_string(text);
}

// Runs a command body, translating exceptions into status codes.
template <typename Fn>
psygen_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return PSYGEN_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<psygen_status>(static_cast<int>(e.status()));
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PSYGEN_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return PSYGEN_INTERNAL;
  }
}

std::string require_arg(const char* value, const char* name) {
  PSYGEN_CHECK(value != nullptr && *value != '\0', Status::Usage,
               std::string(name) + " must not be empty");
  return value;
}

KvConfig parse_cfg(const char* cfg_text) {
  return KvConfig::from_string(cfg_text == nullptr ? "" : cfg_text);
}

NeedChain chain_needs(const json& j, const char* key) {
  PSYGEN_CHECK(j.contains(key), Status::Usage, std::string("request needs ") + key);
  NeedChain chain;
  const json& node = j.at(key);
  std::vector<std::string> names;
  if (node.is_array()) {
    for (const json& item : node) names.push_back(item.get<std::string>());
  } else if (node.is_string()) {
    std::string text = node.get<std::string>();
    std::string cur;
    for (char c : text) {
      if (c == ',') {
        names.push_back(cur);
        cur.clear();
      } else if (c != ' ') {
        cur += c;
      }
    }
    names.push_back(cur);
  } else {
    fail(Status::Usage, std::string(key) + " must be an array or csv string");
  }
  PSYGEN_CHECK(names.size() == kEventsPerStory, Status::Usage,
               std::string(key) + " needs exactly 5 labels");
  for (int i = 0; i < kEventsPerStory; ++i) {
    auto n = need_from_name(names[static_cast<size_t>(i)]);
    PSYGEN_CHECK(n.has_value(), Status::Usage,
                 "unknown need label '" + names[static_cast<size_t>(i)] +
                     "'; valid: " + valid_need_names());
    chain[static_cast<size_t>(i)] = *n;
  }
  return chain;
}

EmotionChain chain_emotions(const json& j, const char* key) {
  PSYGEN_CHECK(j.contains(key), Status::Usage, std::string("request needs ") + key);
  EmotionChain chain;
  const json& node = j.at(key);
  std::vector<std::string> names;
  if (node.is_array()) {
    for (const json& item : node) names.push_back(item.get<std::string>());
  } else if (node.is_string()) {
    std::string text = node.get<std::string>();
    std::string cur;
    for (char c : text) {
      if (c == ',') {
        names.push_back(cur);
        cur.clear();
      } else if (c != ' ') {
        cur += c;
      }
    }
    names.push_back(cur);
  } else {
    fail(Status::Usage, std::string(key) + " must be an array or csv string");
  }
  PSYGEN_CHECK(names.size() == kEventsPerStory, Status::Usage,
               std::string(key) + " needs exactly 5 labels");
  for (int i = 0; i < kEventsPerStory; ++i) {
    auto e = emotion_from_name(names[static_cast<size_t>(i)]);
    PSYGEN_CHECK(e.has_value(), Status::Usage,
                 "unknown emotion label '" + names[static_cast<size_t>(i)] +
                     "'; valid: " + valid_emotion_names());
    chain[static_cast<size_t>(i)] = *e;
  }
  return chain;
}

}  // namespace

extern "C" {

struct psygen_model {
  psygen::Checkpoint checkpoint;
};

const char* psygen_status_name(psygen_status s) {
  return psygen::status_name(static_cast<psygen::Status>(static_cast<int>(s)));
}

const char* psygen_last_error(void) { return g_last_error.c_str(); }

void psygen_string_free(char* s) { std::free(s); }

psygen_status psygen_prepare(const char* raw_path, const char* out_dir, const char* cfg_text,
                             char** out_json) {
  return guarded([&] {
    deliver(out_json, cmd_prepare(require_arg(raw_path, "raw_path"),
                                  require_arg(out_dir, "out_dir"), parse_cfg(cfg_text)));
  });
}

psygen_status psygen_synth(const char* out_dir, const char* cfg_text, char** out_json) {
  return guarded([&] {
    deliver(out_json, cmd_synth(require_arg(out_dir, "out_dir"), parse_cfg(cfg_text)));
  });
}

psygen_status psygen_train(const char* data_dir, const char* out_dir, const char* cfg_text,
                           char** out_json) {
  return guarded([&] {
    deliver(out_json, cmd_train(require_arg(data_dir, "data_dir"),
                                require_arg(out_dir, "out_dir"), parse_cfg(cfg_text)));
  });
}

psygen_status psygen_generate(const char* checkpoint_path, const char* out_path,
                              const char* cfg_text, char** out_json) {
  return guarded([&] {
    deliver(out_json, cmd_generate(require_arg(checkpoint_path, "checkpoint_path"),
                                   require_arg(out_path, "out_path"), parse_cfg(cfg_text)));
  });
}

psygen_status psygen_evaluate(const char* data_dir, const char* checkpoint_path,
                              const char* out_dir, const char* cfg_text, char** out_json) {
  return guarded([&] {
    deliver(out_json,
            cmd_evaluate(require_arg(data_dir, "data_dir"),
                         require_arg(checkpoint_path, "checkpoint_path"),
                         require_arg(out_dir, "out_dir"), parse_cfg(cfg_text)));
  });
}

psygen_status psygen_ablate_suite(const char* data_dir, const char* checkpoint_path,
                                  const char* out_dir, const char* cfg_text, char** out_json) {
  return guarded([&] {
    deliver(out_json,
            cmd_ablate_suite(require_arg(data_dir, "data_dir"),
                             require_arg(checkpoint_path, "checkpoint_path"),
                             require_arg(out_dir, "out_dir"), parse_cfg(cfg_text)));
  });
}

psygen_status psygen_model_open(const char* checkpoint_path, psygen_model** out_model) {
  return guarded([&] {
    PSYGEN_CHECK(out_model != nullptr, Status::Usage, "out_model must not be null");
    auto handle = std::make_unique<psygen_model>();
    handle->checkpoint = load_checkpoint(require_arg(checkpoint_path, "checkpoint_path"));
    *out_model = handle.release();
  });
}

void psygen_model_close(psygen_model* model) { delete model; }

int psygen_model_vocab_size(const psygen_model* model) {
  if (model == nullptr || model->checkpoint.model == nullptr) return -1;
  return model->checkpoint.model->vocab().size();
}

psygen_status psygen_model_generate(psygen_model* model, const char* request_json,
                                    char** out_json) {
  return guarded([&] {
    PSYGEN_CHECK(model != nullptr && model->checkpoint.model != nullptr, Status::Usage,
                 "model handle is null");
    json req;
    try {
      req = json::parse(require_arg(request_json, "request_json"));
    } catch (const json::exception& e) {
      fail(Status::Usage, std::string("request is not valid JSON: ") + e.what());
    }
    StoryModel& sm = *model->checkpoint.model;

    StoryRecord given;
    given.story_id = req.value("story_id", std::string("gen-1"));
    PSYGEN_CHECK(req.contains("leading") && req.at("leading").is_string(), Status::Usage,
                 "request needs a leading event string");
    PSYGEN_CHECK(req.contains("protagonist") && req.at("protagonist").is_string(), Status::Usage,
                 "request needs a protagonist string");
    given.events[0] = req.at("leading").get<std::string>();
    given.protagonist = req.at("protagonist").get<std::string>();
    given.needs = chain_needs(req, "need_chain");
    given.emotions = chain_emotions(req, "emotion_chain");
    if (req.contains("mentions")) {
      const json& men = req.at("mentions");
      PSYGEN_CHECK(men.is_array() && men.size() == kEventsPerStory, Status::Usage,
                   "mentions must be an array of 5 strings");
      for (int i = 0; i < kEventsPerStory; ++i)
        given.mentions[static_cast<size_t>(i)] = men.at(static_cast<size_t>(i)).get<std::string>();
    } else {
      given.mentions.fill(given.protagonist);
    }

    AblationFlags flags;
    if (req.contains("ablations")) {
      const json& ab = req.at("ablations");
      for (const auto& [key, value] : ab.items()) {
        bool v = value.get<bool>();
        if (key == "no_pst") flags.no_tracker = v;
        else if (key == "no_psp") flags.no_planner = v;
        else if (key == "no_pc") flags.no_controller = v;
        else if (key == "no_need") flags.no_need = v;
        else if (key == "no_emotion") flags.no_emotion = v;
        else fail(Status::Usage, "unknown ablation flag: " + key);
      }
    }

    BeamOptions opts;
    opts.beam = req.value("beam", opts.beam);
    opts.max_len = req.value("gen_max_len", sm.config().max_target_len);
    opts.min_len = req.value("gen_min_len", opts.min_len);
    PSYGEN_CHECK(opts.beam >= 1, Status::Usage, "beam must be >= 1");

    auto events_json = [](const StoryRecord& rec) {
      json arr = json::array();
      for (int i = 0; i < kEventsPerStory; ++i) arr.push_back(rec.events[static_cast<size_t>(i)]);
      return arr;
    };

    std::vector<bool> fallbacks;
    StoryRecord gen = sm.rollout(given, flags, opts, &fallbacks);
    json fell = json::array();
    for (size_t i = 0; i < fallbacks.size(); ++i)
      if (fallbacks[i]) fell.push_back(static_cast<int>(i) + 2);
    json reply{{"story_id", given.story_id},
               {"events", events_json(gen)},
               {"flags",
                {{"no_pst", flags.no_tracker},
                 {"no_psp", flags.no_planner},
                 {"no_pc", flags.no_controller},
                 {"no_need", flags.no_need},
                 {"no_emotion", flags.no_emotion},
                 {"fallback_events", fell}}}};

    if (req.contains("cf_need_chain") || req.contains("cf_emotion_chain")) {
      StoryRecord twin = given;
      twin.story_id = given.story_id + "-cf";
      if (req.contains("cf_need_chain")) twin.needs = chain_needs(req, "cf_need_chain");
      if (req.contains("cf_emotion_chain"))
        twin.emotions = chain_emotions(req, "cf_emotion_chain");
      StoryRecord cf = sm.rollout(twin, flags, opts, nullptr);
      reply["counterfactual_events"] = events_json(cf);
    }
    deliver(out_json, reply.dump());
  });
}

}  // extern "C"
