#include "psygen/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>

#include "psygen/classifier.hpp"
#include "psygen/corpus.hpp"
#include "psygen/metrics.hpp"
#include "psygen/synth.hpp"
#include "psygen/train.hpp"

namespace psygen {

namespace {

using nlohmann::json;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  PSYGEN_CHECK(!ec, Status::Io, "cannot create directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::string hash_str(uint64_t h) { return std::to_string(h); }

double round6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return std::atof(buf);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& part : out) {
    size_t b = part.find_first_not_of(" \t");
    size_t e = part.find_last_not_of(" \t");
    part = b == std::string::npos ? "" : part.substr(b, e - b + 1);
  }
  return out;
}

NeedChain parse_need_chain(const std::string& text) {
  auto parts = split_csv(text);
  PSYGEN_CHECK(parts.size() == kEventsPerStory, Status::Usage,
               "a need chain needs exactly 5 comma-separated labels, got '" + text + "'");
  NeedChain chain;
  for (int i = 0; i < kEventsPerStory; ++i) {
    auto n = need_from_name(parts[static_cast<size_t>(i)]);
    PSYGEN_CHECK(n.has_value(), Status::Usage,
                 "unknown need label '" + parts[static_cast<size_t>(i)] +
                     "'; valid: " + valid_need_names());
    chain[static_cast<size_t>(i)] = *n;
  }
  return chain;
}

EmotionChain parse_emotion_chain(const std::string& text) {
  auto parts = split_csv(text);
  PSYGEN_CHECK(parts.size() == kEventsPerStory, Status::Usage,
               "an emotion chain needs exactly 5 comma-separated labels, got '" + text + "'");
  EmotionChain chain;
  for (int i = 0; i < kEventsPerStory; ++i) {
    auto e = emotion_from_name(parts[static_cast<size_t>(i)]);
    PSYGEN_CHECK(e.has_value(), Status::Usage,
                 "unknown emotion label '" + parts[static_cast<size_t>(i)] +
                     "'; valid: " + valid_emotion_names());
    chain[static_cast<size_t>(i)] = *e;
  }
  return chain;
}

BeamOptions beam_from_kv(const KvConfig& cfg, const ModelConfig& mc) {
  BeamOptions opts;
  opts.beam = static_cast<int>(cfg.get_int("beam", opts.beam));
  opts.max_len = static_cast<int>(cfg.get_int("gen_max_len", mc.max_target_len));
  opts.min_len = static_cast<int>(cfg.get_int("gen_min_len", opts.min_len));
  opts.length_exponent = cfg.get_double("length_exponent", opts.length_exponent);
  opts.block_trigrams = cfg.get_bool("block_trigrams", opts.block_trigrams);
  PSYGEN_CHECK(opts.beam >= 1, Status::Usage, "beam must be >= 1");
  return opts;
}

json ablations_to_json(const AblationFlags& f) {
  return json{{"no_pst", f.no_tracker},
              {"no_psp", f.no_planner},
              {"no_pc", f.no_controller},
              {"no_need", f.no_need},
              {"no_emotion", f.no_emotion}};
}

json chains_to_json(const NeedChain& needs, const EmotionChain& emotions) {
  json need_arr = json::array(), emo_arr = json::array();
  for (int i = 0; i < kEventsPerStory; ++i) {
    need_arr.push_back(need_name(needs[static_cast<size_t>(i)]));
    emo_arr.push_back(emotion_name(emotions[static_cast<size_t>(i)]));
  }
  return json{{"need", need_arr}, {"emotion", emo_arr}};
}

std::string write_json(const std::string& path, const json& j) {
  std::string text = j.dump(2) + "\n";
  write_file(path, text);
  return text;
}

// ----- evaluation core shared by cmd_evaluate and cmd_ablate_suite -----

struct Labelers {
  std::unique_ptr<TextLabeler> need;
  std::unique_ptr<TextLabeler> emotion;
  json info;
};

ClassifierConfig classifier_config_from_kv(const KvConfig& cfg) {
  ClassifierConfig c;
  c.d_embed = static_cast<int>(cfg.get_int("cls_d_embed", c.d_embed));
  c.min_freq = static_cast<int>(cfg.get_int("cls_min_freq", c.min_freq));
  c.lr = cfg.get_double("cls_lr", c.lr);
  c.epochs = static_cast<int>(cfg.get_int("cls_epochs", c.epochs));
  c.batch_size = static_cast<int>(cfg.get_int("cls_batch_size", c.batch_size));
  c.seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
  return c;
}

void labeled_events(const std::vector<StoryRecord>& records, std::vector<LabeledEvent>* needs,
                    std::vector<LabeledEvent>* emotions) {
  for (const auto& rec : records) {
    for (int i = 0; i < kEventsPerStory; ++i) {
      auto idx = static_cast<size_t>(i);
      needs->push_back({rec.events[idx], static_cast<int>(rec.needs[idx])});
      emotions->push_back({rec.events[idx], static_cast<int>(rec.emotions[idx])});
    }
  }
}

Labelers build_labelers(const KvConfig& cfg, const std::string& data_dir) {
  Labelers out;
  if (cfg.has("lexicon")) {
    std::string path = cfg.get("lexicon", "");
    Lexicon lex = load_lexicon(path);
    out.need = std::make_unique<KeywordScorer>(KeywordScorer::Kind::Need, lex);
    out.emotion = std::make_unique<KeywordScorer>(KeywordScorer::Kind::Emotion, lex);
    out.info = json{{"kind", "oracle"}, {"lexicon", path}};
    return out;
  }
  auto train = load_records(join(data_dir, "stories_train.jsonl"));
  auto dev = load_records(join(data_dir, "stories_dev.jsonl"));
  std::vector<LabeledEvent> need_train, emo_train, need_dev, emo_dev;
  labeled_events(train, &need_train, &emo_train);
  labeled_events(dev, &need_dev, &emo_dev);
  ClassifierConfig ccfg = classifier_config_from_kv(cfg);
  auto need_cls = std::make_unique<BagClassifier>(kNumNeeds, ccfg);
  auto emo_cls = std::make_unique<BagClassifier>(kNumEmotions, ccfg);
  ClassifierEval ne = need_cls->fit(need_train, need_dev);
  ClassifierEval ee = emo_cls->fit(emo_train, emo_dev);
  out.info = json{{"kind", "classifier"},
                  {"need_dev_accuracy", round6(ne.accuracy)},
                  {"need_dev_macro_f1", round6(ne.macro_f1)},
                  {"emotion_dev_accuracy", round6(ee.accuracy)},
                  {"emotion_dev_macro_f1", round6(ee.macro_f1)}};
  out.need = std::move(need_cls);
  out.emotion = std::move(emo_cls);
  return out;
}

struct EvalOut {
  MetricReport report;
  double control_nc = 0.0;
  double control_ec = 0.0;
  long fallback_events = 0;
  std::string per_story_csv;
};

EvalOut run_eval(const StoryModel& model, const std::vector<StoryRecord>& stories,
                 const std::vector<TrainingSample>& samples, const AblationFlags& flags,
                 const BeamOptions& bopts, const TextLabeler& need_labeler,
                 const TextLabeler& emotion_labeler, uint64_t control_seed) {
  PSYGEN_CHECK(!stories.empty(), Status::Data, "evaluation needs at least one story");
  EvalOut out;
  out.report.ppl = perplexity(model, samples, flags);

  std::vector<std::string> hyps, refs;
  std::vector<std::array<std::string, kEventsPerStory>> generated;
  std::vector<NeedChain> need_chains;
  std::vector<EmotionChain> emotion_chains;
  std::ostringstream csv;
  csv << "story_id,bleu1,bleu2,rouge1,rouge2,rougeL,nc,ec\n";
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  for (const auto& story : stories) {
    std::vector<bool> fallbacks;
    StoryRecord gen = model.rollout(story, flags, bopts, &fallbacks);
    for (bool fb : fallbacks)
      if (fb) ++out.fallback_events;
    std::vector<std::string> h, r;
    for (int i = 1; i < kEventsPerStory; ++i) {
      h.push_back(gen.events[static_cast<size_t>(i)]);
      r.push_back(story.events[static_cast<size_t>(i)]);
    }
    hyps.insert(hyps.end(), h.begin(), h.end());
    refs.insert(refs.end(), r.begin(), r.end());
    generated.push_back(gen.events);
    need_chains.push_back(story.needs);
    emotion_chains.push_back(story.emotions);
    ConsistencyResult one =
        nc_ec({gen.events}, {story.needs}, {story.emotions}, need_labeler, emotion_labeler);
    csv << story.story_id << ',' << fmt(bleu_corpus(h, r, 1)) << ',' << fmt(bleu_corpus(h, r, 2))
        << ',' << fmt(rouge_corpus(h, r, 1)) << ',' << fmt(rouge_corpus(h, r, 2)) << ','
        << fmt(rouge_corpus(h, r, 0)) << ',' << fmt(one.nc) << ',' << fmt(one.ec) << "\n";
  }
  out.report.bleu1 = bleu_corpus(hyps, refs, 1);
  out.report.bleu2 = bleu_corpus(hyps, refs, 2);
  out.report.rouge1 = rouge_corpus(hyps, refs, 1);
  out.report.rouge2 = rouge_corpus(hyps, refs, 2);
  out.report.rougeL = rouge_corpus(hyps, refs, 0);

  ConsistencyResult cons =
      nc_ec(generated, need_chains, emotion_chains, need_labeler, emotion_labeler);
  out.report.nc = cons.nc;
  out.report.ec = cons.ec;

  // Control: score the same generations against chains shuffled across
  // stories. The gap to the true-chain score isolates the chains' effect.
  Rng rng(control_seed);
  std::vector<size_t> perm(stories.size());
  std::iota(perm.begin(), perm.end(), size_t{0});
  rng.shuffle(perm);
  std::vector<NeedChain> ctrl_needs;
  std::vector<EmotionChain> ctrl_emotions;
  for (size_t i = 0; i < perm.size(); ++i) {
    ctrl_needs.push_back(need_chains[perm[i]]);
    ctrl_emotions.push_back(emotion_chains[perm[i]]);
  }
  ConsistencyResult ctrl =
      nc_ec(generated, ctrl_needs, ctrl_emotions, need_labeler, emotion_labeler);
  out.control_nc = ctrl.nc;
  out.control_ec = ctrl.ec;
  out.per_story_csv = csv.str();
  return out;
}

json report_to_json(const EvalOut& e) {
  return json{{"ppl", round6(e.report.ppl)},
              {"bleu1", round6(e.report.bleu1)},
              {"bleu2", round6(e.report.bleu2)},
              {"rouge1", round6(e.report.rouge1)},
              {"rouge2", round6(e.report.rouge2)},
              {"rougeL", round6(e.report.rougeL)},
              {"nc", round6(e.report.nc)},
              {"ec", round6(e.report.ec)},
              {"control_nc", round6(e.control_nc)},
              {"control_ec", round6(e.control_ec)},
              {"fallback_events", e.fallback_events}};
}

struct EvalInputs {
  std::vector<StoryRecord> stories;
  std::vector<TrainingSample> samples;
  std::string split;
};

EvalInputs load_eval_inputs(const std::string& data_dir, const KvConfig& cfg) {
  EvalInputs in;
  in.split = cfg.get("split", "test");
  in.stories = load_records(join(data_dir, "stories_" + in.split + ".jsonl"));
  in.samples = load_samples(join(data_dir, "samples_" + in.split + ".jsonl"));
  auto cap = static_cast<size_t>(cfg.get_int("eval_stories", 0));
  if (cap > 0 && cap < in.stories.size()) {
    in.stories.resize(cap);
    std::set<std::string> keep;
    for (const auto& s : in.stories) keep.insert(s.story_id);
    std::vector<TrainingSample> kept;
    for (auto& s : in.samples)
      if (keep.count(s.story_id)) kept.push_back(std::move(s));
    in.samples = std::move(kept);
  }
  return in;
}

}  // namespace

AblationFlags ablations_from_kv(const KvConfig& cfg) {
  static const std::set<std::string> known = {"no_pst", "no_psp", "no_pc", "no_need",
                                              "no_emotion"};
  for (const auto& [key, value] : cfg.items())
    PSYGEN_CHECK(key.rfind("no_", 0) != 0 || known.count(key), Status::Usage,
                 "unknown ablation flag: " + key);
  AblationFlags flags;
  flags.no_tracker = cfg.get_bool("no_pst", false);
  flags.no_planner = cfg.get_bool("no_psp", false);
  flags.no_controller = cfg.get_bool("no_pc", false);
  flags.no_need = cfg.get_bool("no_need", false);
  flags.no_emotion = cfg.get_bool("no_emotion", false);
  return flags;
}

std::string cmd_prepare(const std::string& raw_path, const std::string& out_dir,
                        const KvConfig& cfg) {
  auto seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
  int min_freq = static_cast<int>(cfg.get_int("min_freq", 1));
  RawLoadResult raw = load_raw_dataset(raw_path);
  PSYGEN_CHECK(raw.rows > 0, Status::Data, "raw dataset holds no rows: " + raw_path);
  PSYGEN_CHECK(2 * raw.malformed <= raw.rows, Status::Data,
               "more than half the raw rows are malformed; first error: " + raw.first_error);

  ExtractStats stats;
  std::vector<StoryRecord> records = extract_records(raw.annotated, seed, &stats);
  records.insert(records.end(), raw.records.begin(), raw.records.end());

  DatasetSplit split = split_dataset(std::move(records), seed);
  Vocabulary vocab = build_vocab(split.train, min_freq);

  ensure_dir(out_dir);
  save_records(split.train, join(out_dir, "stories_train.jsonl"));
  save_records(split.dev, join(out_dir, "stories_dev.jsonl"));
  save_records(split.test, join(out_dir, "stories_test.jsonl"));
  auto train_samples = expand_samples(split.train);
  auto dev_samples = expand_samples(split.dev);
  auto test_samples = expand_samples(split.test);
  save_samples(train_samples, join(out_dir, "samples_train.jsonl"));
  save_samples(dev_samples, join(out_dir, "samples_dev.jsonl"));
  save_samples(test_samples, join(out_dir, "samples_test.jsonl"));
  vocab.save(join(out_dir, "vocab.txt"));

  json manifest{
      {"command", "prepare"},
      {"seed", seed},
      {"min_freq", min_freq},
      {"config_hash", hash_str(fnv1a(cfg.canonical()))},
      {"input",
       {{"path", raw_path},
        {"hash", hash_str(hash_file(raw_path))},
        {"rows", raw.rows},
        {"malformed", raw.malformed},
        {"first_error", raw.first_error},
        {"annotated", raw.annotated.size()},
        {"pre_extracted", raw.records.size()},
        {"no_protagonist", stats.no_protagonist}}},
      {"stories",
       {{"total", split.train.size() + split.dev.size() + split.test.size()},
        {"train", split.train.size()},
        {"dev", split.dev.size()},
        {"test", split.test.size()}}},
      {"samples",
       {{"train", train_samples.size()},
        {"dev", dev_samples.size()},
        {"test", test_samples.size()}}},
      {"vocab_size", vocab.size()},
      {"outputs",
       {{"stories_train", "stories_train.jsonl"},
        {"stories_dev", "stories_dev.jsonl"},
        {"stories_test", "stories_test.jsonl"},
        {"samples_train", "samples_train.jsonl"},
        {"samples_dev", "samples_dev.jsonl"},
        {"samples_test", "samples_test.jsonl"},
        {"vocab", "vocab.txt"}}}};
  return write_json(join(out_dir, "manifest.json"), manifest);
}

std::string cmd_synth(const std::string& out_dir, const KvConfig& cfg) {
  SynthOptions opts;
  opts.n = static_cast<int>(cfg.get_int("synth_n", 100));
  opts.seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
  opts.persistence = cfg.get_double("persistence", opts.persistence);
  bool emit_votes = cfg.get_bool("emit_votes", true);
  Lexicon lex = cfg.has("lexicon") ? load_lexicon(cfg.get("lexicon", "")) : default_lexicon();

  std::vector<StoryRecord> records = synth_generate(opts, lex);
  ensure_dir(out_dir);
  std::string raw_path = join(out_dir, "raw.jsonl");
  if (emit_votes) {
    Rng rng(opts.seed ^ fnv1a("votes"));
    std::ostringstream os;
    for (const auto& rec : records) os << annotation_to_json(record_to_annotation(rec, rng)) << "\n";
    write_file(raw_path, os.str());
  } else {
    save_records(records, raw_path);
  }
  std::string lex_path = join(out_dir, "lexicon.txt");
  save_lexicon(lex, lex_path);

  json manifest{{"command", "synth"},
                {"stories", records.size()},
                {"seed", opts.seed},
                {"persistence", opts.persistence},
                {"emit_votes", emit_votes},
                {"config_hash", hash_str(fnv1a(cfg.canonical()))},
                {"outputs",
                 {{"raw", "raw.jsonl"},
                  {"lexicon", "lexicon.txt"},
                  {"raw_hash", hash_str(hash_file(raw_path))}}}};
  return write_json(join(out_dir, "manifest.json"), manifest);
}

std::string cmd_train(const std::string& data_dir, const std::string& out_dir,
                      const KvConfig& cfg) {
  auto train_samples = load_samples(join(data_dir, "samples_train.jsonl"));
  auto dev_samples = load_samples(join(data_dir, "samples_dev.jsonl"));
  Vocabulary vocab = Vocabulary::load(join(data_dir, "vocab.txt"));

  ModelConfig mc = ModelConfig::from_kv(cfg);
  mc.vocab_size = vocab.size();
  mc.validate();
  TrainConfig tc = TrainConfig::from_kv(cfg);
  AblationFlags flags = ablations_from_kv(cfg);

  ensure_dir(out_dir);
  std::string ckpt_path = join(out_dir, "model.ckpt");
  StoryModel model(mc, std::move(vocab));
  TrainResult result = train_model(model, train_samples, dev_samples, tc, flags, ckpt_path);
  write_file(join(out_dir, "train_log.csv"), result.log_csv);

  json manifest{{"command", "train"},
                {"steps", result.steps},
                {"best_dev", round6(result.best_dev)},
                {"best_step", result.best_step},
                {"early_stopped", result.early_stopped},
                {"nll_target_hit", result.nll_target_hit},
                {"train_samples", train_samples.size()},
                {"dev_samples", dev_samples.size()},
                {"vocab_size", mc.vocab_size},
                {"config_hash", hash_str(fnv1a(cfg.canonical()))},
                {"ablations", ablations_to_json(flags)},
                {"data",
                 {{"train_hash", hash_str(hash_file(join(data_dir, "samples_train.jsonl")))},
                  {"dev_hash", hash_str(hash_file(join(data_dir, "samples_dev.jsonl")))},
                  {"vocab_hash", hash_str(hash_file(join(data_dir, "vocab.txt")))}}},
                {"outputs", {{"checkpoint", "model.ckpt"}, {"log", "train_log.csv"}}}};
  return write_json(join(out_dir, "manifest.json"), manifest);
}

std::string cmd_generate(const std::string& checkpoint_path, const std::string& out_path,
                         const KvConfig& cfg) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  StoryModel& model = *ckpt.model;

  PSYGEN_CHECK(cfg.has("leading"), Status::Usage, "generation needs a leading event (leading=)");
  PSYGEN_CHECK(cfg.has("protagonist"), Status::Usage,
               "generation needs a protagonist (protagonist=)");
  PSYGEN_CHECK(cfg.has("need_chain"), Status::Usage,
               "generation needs a need chain (need_chain=), labels: " + valid_need_names());
  PSYGEN_CHECK(
      cfg.has("emotion_chain"), Status::Usage,
      "generation needs an emotion chain (emotion_chain=), labels: " + valid_emotion_names());

  StoryRecord given;
  given.story_id = cfg.get("story_id", "gen-1");
  given.protagonist = cfg.get("protagonist", "");
  given.events[0] = cfg.get("leading", "");
  given.needs = parse_need_chain(cfg.get("need_chain", ""));
  given.emotions = parse_emotion_chain(cfg.get("emotion_chain", ""));
  if (cfg.has("mentions")) {
    auto parts = split_csv(cfg.get("mentions", ""));
    PSYGEN_CHECK(parts.size() == kEventsPerStory, Status::Usage,
                 "mentions needs exactly 5 comma-separated surface forms");
    for (int i = 0; i < kEventsPerStory; ++i)
      given.mentions[static_cast<size_t>(i)] = parts[static_cast<size_t>(i)];
  } else {
    given.mentions.fill(given.protagonist);
  }

  AblationFlags flags = ablations_from_kv(cfg);
  BeamOptions bopts = beam_from_kv(cfg, model.config());

  auto roll_to_json = [&](const StoryRecord& input) {
    std::vector<bool> fallbacks;
    StoryRecord gen = model.rollout(input, flags, bopts, &fallbacks);
    json events = json::array(), fell = json::array();
    for (int i = 0; i < kEventsPerStory; ++i) events.push_back(gen.events[static_cast<size_t>(i)]);
    for (size_t i = 0; i < fallbacks.size(); ++i)
      if (fallbacks[i]) fell.push_back(static_cast<int>(i) + 2);  // 1-based event number
    json flags_obj = ablations_to_json(flags);
    flags_obj["fallback_events"] = fell;
    return json{{"story_id", input.story_id},
                {"chains", chains_to_json(input.needs, input.emotions)},
                {"events", events},
                {"flags", flags_obj}};
  };

  json stories = json::array();
  stories.push_back(roll_to_json(given));

  bool counterfactual = cfg.has("cf_need_chain") || cfg.has("cf_emotion_chain");
  if (counterfactual) {
    StoryRecord twin = given;
    twin.story_id = given.story_id + "-cf";
    if (cfg.has("cf_need_chain")) twin.needs = parse_need_chain(cfg.get("cf_need_chain", ""));
    if (cfg.has("cf_emotion_chain"))
      twin.emotions = parse_emotion_chain(cfg.get("cf_emotion_chain", ""));
    stories.push_back(roll_to_json(twin));
  }

  std::ostringstream lines;
  for (const auto& st : stories) lines << st.dump() << "\n";
  write_file(out_path, lines.str());

  json report{{"command", "generate"},
              {"output", out_path},
              {"counterfactual", counterfactual},
              {"checkpoint", checkpoint_path},
              {"stories", stories}};
  return report.dump(2) + "\n";
}

std::string cmd_evaluate(const std::string& data_dir, const std::string& checkpoint_path,
                         const std::string& out_dir, const KvConfig& cfg) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  StoryModel& model = *ckpt.model;
  EvalInputs in = load_eval_inputs(data_dir, cfg);
  AblationFlags flags = ablations_from_kv(cfg);
  BeamOptions bopts = beam_from_kv(cfg, model.config());
  Labelers labelers = build_labelers(cfg, data_dir);
  auto control_seed = static_cast<uint64_t>(
      cfg.get_int("control_seed", static_cast<int64_t>(cfg.get_int("seed", 1) ^ 0x9e3779b9)));

  EvalOut ev = run_eval(model, in.stories, in.samples, flags, bopts, *labelers.need,
                        *labelers.emotion, control_seed);
  ensure_dir(out_dir);
  write_file(join(out_dir, "per_story.csv"), ev.per_story_csv);

  json report{{"command", "evaluate"},
              {"split", in.split},
              {"stories", in.stories.size()},
              {"samples", in.samples.size()},
              {"checkpoint", checkpoint_path},
              {"config_hash", hash_str(fnv1a(cfg.canonical()))},
              {"ablations", ablations_to_json(flags)},
              {"labelers", labelers.info},
              {"metrics", report_to_json(ev)},
              {"outputs", {{"report", "report.json"}, {"per_story", "per_story.csv"}}}};
  return write_json(join(out_dir, "report.json"), report);
}

std::string cmd_ablate_suite(const std::string& data_dir, const std::string& checkpoint_path,
                             const std::string& out_dir, const KvConfig& cfg) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  StoryModel& model = *ckpt.model;
  EvalInputs in = load_eval_inputs(data_dir, cfg);
  BeamOptions bopts = beam_from_kv(cfg, model.config());
  Labelers labelers = build_labelers(cfg, data_dir);
  auto control_seed = static_cast<uint64_t>(
      cfg.get_int("control_seed", static_cast<int64_t>(cfg.get_int("seed", 1) ^ 0x9e3779b9)));

  struct Variant {
    const char* name;
    AblationFlags flags;
  };
  std::vector<Variant> variants(6);
  variants[0].name = "full";
  variants[1].name = "no_pst";
  variants[1].flags.no_tracker = true;
  variants[2].name = "no_psp";
  variants[2].flags.no_planner = true;
  variants[3].name = "no_pc";
  variants[3].flags.no_controller = true;
  variants[4].name = "no_need";
  variants[4].flags.no_need = true;
  variants[5].name = "no_emotion";
  variants[5].flags.no_emotion = true;

  json table = json::object();
  for (const auto& v : variants) {
    EvalOut ev = run_eval(model, in.stories, in.samples, v.flags, bopts, *labelers.need,
                          *labelers.emotion, control_seed);
    table[v.name] = report_to_json(ev);
  }

  ensure_dir(out_dir);
  json report{{"command", "ablate-suite"},
              {"split", in.split},
              {"stories", in.stories.size()},
              {"checkpoint", checkpoint_path},
              {"config_hash", hash_str(fnv1a(cfg.canonical()))},
              {"labelers", labelers.info},
              {"variants", table}};
  return write_json(join(out_dir, "ablations.json"), report);
}

}  // namespace psygen
