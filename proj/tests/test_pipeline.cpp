#include <algorithm>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "doctest.h"
#include "oracles.hpp"
#include "psygen/pipeline.hpp"
#include "psygen/synth.hpp"
#include "psygen/vocab.hpp"

using namespace psygen;
using nlohmann::json;

namespace {

bool exists(const std::string& path) { return std::filesystem::exists(path); }

KvConfig tiny_model_kv() {
  return KvConfig::from_string(
      "d_model = 16\nn_layers = 1\nn_heads = 2\nffn_width = 32\nd_plan = 8\n"
      "max_len = 96\nmax_target_len = 12\nseed = 7\n"
      "lr = 0.001\nbatch_size = 4\nmax_steps = 6\neval_every = 3\npatience = 10\n");
}

}  // namespace

TEST_CASE("pipeline: synth to ablation suite, end to end") {
  oracle::TempDir dir;
  const std::string synth_dir = dir.file("synth");
  const std::string data_dir = dir.file("data");
  const std::string run_dir = dir.file("run");

  // --- synth ---
  KvConfig scfg = KvConfig::from_string("synth_n = 25\nseed = 3\n");
  json smani = json::parse(cmd_synth(synth_dir, scfg));
  CHECK(smani["command"] == "synth");
  CHECK(smani["stories"] == 25);
  CHECK(smani["emit_votes"] == true);
  REQUIRE(exists(synth_dir + "/raw.jsonl"));
  REQUIRE(exists(synth_dir + "/lexicon.txt"));
  REQUIRE(exists(synth_dir + "/manifest.json"));

  // --- prepare ---
  KvConfig pcfg = KvConfig::from_string("seed = 3\n");
  json pmani = json::parse(cmd_prepare(synth_dir + "/raw.jsonl", data_dir, pcfg));
  CHECK(pmani["input"]["rows"] == 25);
  CHECK(pmani["input"]["malformed"] == 0);
  CHECK(pmani["stories"]["train"] == 21);
  CHECK(pmani["stories"]["dev"] == 2);
  CHECK(pmani["stories"]["test"] == 2);
  CHECK(pmani["samples"]["train"] == 84);
  CHECK(pmani["samples"]["dev"] == 8);
  CHECK(pmani["samples"]["test"] == 8);
  CHECK(pmani["vocab_size"].get<int>() > Vocabulary::kReservedCount);
  for (const char* f : {"stories_train.jsonl", "stories_dev.jsonl", "stories_test.jsonl",
                        "samples_train.jsonl", "samples_dev.jsonl", "samples_test.jsonl",
                        "vocab.txt", "manifest.json"})
    CHECK(exists(data_dir + "/" + f));

  // --- train ---
  json tmani = json::parse(cmd_train(data_dir, run_dir, tiny_model_kv()));
  CHECK(tmani["steps"] == 6);
  CHECK(tmani["train_samples"] == 84);
  CHECK(tmani["vocab_size"] == pmani["vocab_size"]);
  REQUIRE(exists(run_dir + "/model.ckpt"));
  REQUIRE(exists(run_dir + "/train_log.csv"));

  // --- generate, with a counterfactual twin ---
  KvConfig gcfg = KvConfig::from_string(
      "leading = alice was hungry and happy that day .\n"
      "protagonist = alice\n"
      "need_chain = physiological, stability, love, esteem, self_actualization\n"
      "emotion_chain = joy, trust, anger, fear, sadness\n"
      "cf_need_chain = love, love, love, love, love\n"
      "beam = 2\ngen_max_len = 8\n");
  const std::string gen_path = dir.file("gen.jsonl");
  json greport = json::parse(cmd_generate(run_dir + "/model.ckpt", gen_path, gcfg));
  CHECK(greport["counterfactual"] == true);
  REQUIRE(greport["stories"].size() == 2);
  CHECK(greport["stories"][0]["story_id"] == "gen-1");
  CHECK(greport["stories"][1]["story_id"] == "gen-1-cf");
  CHECK(greport["stories"][0]["events"].size() == 5);
  CHECK(greport["stories"][0]["events"][0] == "alice was hungry and happy that day .");
  CHECK(greport["stories"][0]["chains"]["need"][4] == "self_actualization");
  CHECK(greport["stories"][1]["chains"]["need"][4] == "love");
  CHECK(greport["stories"][1]["chains"]["emotion"][2] == "anger");

  // The JSONL mirror holds one parseable object per story.
  std::istringstream lines(read_file(gen_path));
  std::string line;
  int n_lines = 0;
  while (std::getline(lines, line)) {
    json row = json::parse(line);
    CHECK(row["events"].size() == 5);
    ++n_lines;
  }
  CHECK(n_lines == 2);

  // --- evaluate with the oracle lexicon ---
  KvConfig ecfg = KvConfig::from_string("beam = 2\ngen_max_len = 8\neval_stories = 0\n");
  ecfg.set("lexicon", synth_dir + "/lexicon.txt");
  json ereport = json::parse(cmd_evaluate(data_dir, run_dir + "/model.ckpt", dir.file("eval"), ecfg));
  CHECK(ereport["split"] == "test");
  CHECK(ereport["stories"] == 2);
  CHECK(ereport["samples"] == 8);
  CHECK(ereport["labelers"]["kind"] == "oracle");
  for (const char* k : {"ppl", "bleu1", "bleu2", "rouge1", "rouge2", "rougeL", "nc", "ec",
                        "control_nc", "control_ec", "fallback_events"})
    CHECK(ereport["metrics"].contains(k));
  CHECK(ereport["metrics"]["ppl"].get<double>() > 1.0);
  std::string csv = read_file(dir.file("eval") + "/per_story.csv");
  CHECK(csv.rfind("story_id,bleu1,bleu2,rouge1,rouge2,rougeL,nc,ec\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 stories

  // --- evaluate again with trained classifier labelers and a story cap ---
  KvConfig ccfg = KvConfig::from_string(
      "beam = 2\ngen_max_len = 8\neval_stories = 1\ncls_epochs = 10\ncls_d_embed = 16\n");
  json creport = json::parse(cmd_evaluate(data_dir, run_dir + "/model.ckpt", dir.file("eval2"), ccfg));
  CHECK(creport["stories"] == 1);
  CHECK(creport["samples"] == 4);
  CHECK(creport["labelers"]["kind"] == "classifier");
  CHECK(creport["labelers"].contains("need_dev_accuracy"));

  // --- ablation suite ---
  KvConfig acfg = KvConfig::from_string("beam = 2\ngen_max_len = 8\n");
  acfg.set("lexicon", synth_dir + "/lexicon.txt");
  json areport = json::parse(cmd_ablate_suite(data_dir, run_dir + "/model.ckpt", dir.file("abl"), acfg));
  REQUIRE(areport["variants"].size() == 6);
  for (const char* v : {"full", "no_pst", "no_psp", "no_pc", "no_need", "no_emotion"}) {
    REQUIRE(areport["variants"].contains(v));
    CHECK(areport["variants"][v].contains("ppl"));
    CHECK(areport["variants"][v].contains("nc"));
  }
  CHECK(exists(dir.file("abl") + "/ablations.json"));
}

TEST_CASE("pipeline: identical seeds give byte-identical outputs") {
  oracle::TempDir a, b;
  KvConfig scfg = KvConfig::from_string("synth_n = 12\nseed = 9\n");
  cmd_synth(a.file("synth"), scfg);
  cmd_synth(b.file("synth"), scfg);
  CHECK(read_file(a.file("synth") + "/raw.jsonl") == read_file(b.file("synth") + "/raw.jsonl"));

  KvConfig pcfg = KvConfig::from_string("seed = 2\n");
  cmd_prepare(a.file("synth") + "/raw.jsonl", a.file("data"), pcfg);
  cmd_prepare(b.file("synth") + "/raw.jsonl", b.file("data"), pcfg);
  for (const char* f : {"stories_train.jsonl", "samples_test.jsonl", "vocab.txt"})
    CHECK(read_file(a.file("data") + "/" + f) == read_file(b.file("data") + "/" + f));

  cmd_train(a.file("data"), a.file("run"), tiny_model_kv());
  cmd_train(b.file("data"), b.file("run"), tiny_model_kv());
  CHECK(read_file(a.file("run") + "/train_log.csv") == read_file(b.file("run") + "/train_log.csv"));
  CHECK(hash_file(a.file("run") + "/model.ckpt") == hash_file(b.file("run") + "/model.ckpt"));

  KvConfig gcfg = KvConfig::from_string(
      "leading = bob watched the river .\nprotagonist = bob\n"
      "need_chain = none, stability, stability, esteem, love\n"
      "emotion_chain = none, joy, trust, sadness, fear\nbeam = 2\ngen_max_len = 8\n");
  cmd_generate(a.file("run") + "/model.ckpt", a.file("gen.jsonl"), gcfg);
  cmd_generate(b.file("run") + "/model.ckpt", b.file("gen.jsonl"), gcfg);
  CHECK(read_file(a.file("gen.jsonl")) == read_file(b.file("gen.jsonl")));
}

TEST_CASE("pipeline: ablation key parsing") {
  AblationFlags f = ablations_from_kv(
      KvConfig::from_string("no_pst = true\nno_need = 1\nbeam = 3\n"));
  CHECK(f.no_tracker);
  CHECK(f.no_need);
  CHECK_FALSE(f.no_planner);
  CHECK_FALSE(f.no_controller);
  CHECK_FALSE(f.no_emotion);
  CHECK(oracle::thrown_status([] {
          ablations_from_kv(KvConfig::from_string("no_tracker = 1\n"));
        }) == Status::Usage);
}

TEST_CASE("pipeline: bad inputs map to the right status") {
  oracle::TempDir dir;

  // Majority-malformed raw data aborts with the first parse error.
  SynthOptions one;
  one.n = 1;
  one.seed = 4;
  auto records = synth_generate(one, default_lexicon());
  std::string raw = record_to_json(records[0]) + "\n{\"neither\": true}\nnot json at all\n";
  write_file(dir.file("bad.jsonl"), raw);
  CHECK(oracle::thrown_status([&] {
          cmd_prepare(dir.file("bad.jsonl"), dir.file("out"), KvConfig{});
        }) == Status::Data);

  write_file(dir.file("empty.jsonl"), "");
  CHECK(oracle::thrown_status([&] {
          cmd_prepare(dir.file("empty.jsonl"), dir.file("out"), KvConfig{});
        }) == Status::Data);

  CHECK(oracle::thrown_status([&] {
          cmd_train(dir.file("missing"), dir.file("run"), KvConfig{});
        }) == Status::Io);

  CHECK(oracle::thrown_status([&] {
          cmd_generate(dir.file("no.ckpt"), dir.file("g.jsonl"), KvConfig{});
        }) == Status::Io);
}

TEST_CASE("pipeline: generation argument validation") {
  // Build one real checkpoint to get past loading.
  oracle::TempDir dir;
  StoryModel model(oracle::tiny_config(5), oracle::tiny_vocab());
  save_checkpoint(model, dir.file("m.ckpt"), false, 0, KvConfig());
  const std::string ckpt = dir.file("m.ckpt");

  auto gen = [&](const std::string& text) {
    return oracle::thrown_status(
        [&] { cmd_generate(ckpt, dir.file("g.jsonl"), KvConfig::from_string(text)); });
  };
  CHECK(gen("protagonist = a\nneed_chain = none,none,none,none,none\n"
            "emotion_chain = none,none,none,none,none\n") == Status::Usage);
  CHECK(gen("leading = x\nneed_chain = none,none,none,none,none\n"
            "emotion_chain = none,none,none,none,none\n") == Status::Usage);
  CHECK(gen("leading = x\nprotagonist = a\n"
            "emotion_chain = none,none,none,none,none\n") == Status::Usage);
  CHECK(gen("leading = x\nprotagonist = a\nneed_chain = none,none,none,none,none\n") ==
        Status::Usage);
  // Wrong arity and unknown labels.
  CHECK(gen("leading = x\nprotagonist = a\nneed_chain = none,none,none\n"
            "emotion_chain = none,none,none,none,none\n") == Status::Usage);
  CHECK(gen("leading = x\nprotagonist = a\nneed_chain = none,none,none,none,hunger\n"
            "emotion_chain = none,none,none,none,none\n") == Status::Usage);
  CHECK(gen("leading = x\nprotagonist = a\nneed_chain = none,none,none,none,none\n"
            "emotion_chain = none,none,none,none,none\nmentions = a,b\n") == Status::Usage);
  CHECK(gen("leading = x\nprotagonist = a\nneed_chain = none,none,none,none,none\n"
            "emotion_chain = none,none,none,none,none\nbeam = 0\n") == Status::Usage);

  // The unknown-label message teaches the valid vocabulary.
  try {
    cmd_generate(ckpt, dir.file("g.jsonl"),
                 KvConfig::from_string("leading = x\nprotagonist = a\n"
                                       "need_chain = none,none,none,none,hunger\n"
                                       "emotion_chain = none,none,none,none,none\n"));
    FAIL("expected Usage");
  } catch (const Error& e) {
    CHECK(e.status() == Status::Usage);
    CHECK(std::string(e.what()).find("physiological") != std::string::npos);
  }

  CHECK(oracle::thrown_status([&] {
          cmd_evaluate(dir.file("nodata"), ckpt, dir.file("eval"),
                       KvConfig::from_string("split = nope\n"));
        }) == Status::Io);
}
