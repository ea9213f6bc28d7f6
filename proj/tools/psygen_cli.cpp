// Command-line front end. Talks to the library exclusively through the C
// API so it doubles as a smoke test of the shared-library surface.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "psygen.h"

namespace {

// Flat key=value config assembled from an optional file plus flag
// overrides. Later lines win inside the library parser, so appending the
// flag values after the file content gives flags precedence.
struct ConfigText {
  std::string file_path;
  std::vector<std::string> overrides;

  std::string assemble() const {
    std::string text;
    if (!file_path.empty()) {
      std::ifstream in(file_path, std::ios::binary);
      if (!in) {
        std::fprintf(stderr, "psygen: error: IO: cannot read config file %s\n",
                     file_path.c_str());
        std::exit(PSYGEN_IO);
      }
      std::ostringstream os;
      os << in.rdbuf();
      text = os.str();
      if (!text.empty() && text.back() != '\n') text += '\n';
    }
    for (const auto& line : overrides) text += line + "\n";
    return text;
  }
};

int finish(psygen_status st, char* out) {
  if (st != PSYGEN_OK) {
    std::fprintf(stderr, "psygen: error: %s: %s\n", psygen_status_name(st), psygen_last_error());
    return static_cast<int>(st);
  }
  if (out != nullptr) {
    std::fputs(out, stdout);
    psygen_string_free(out);
  }
  return 0;
}

void add_common(CLI::App* cmd, ConfigText& cfg) {
  cmd->add_option("--config", cfg.file_path, "key=value config file merged under the flags");
  cmd->add_option_function<std::vector<std::string>>(
      "--set",
      [&cfg](const std::vector<std::string>& pairs) {
        for (const auto& kv : pairs) {
          if (kv.find('=') == std::string::npos)
            throw CLI::ValidationError("--set expects key=value, got '" + kv + "'");
          cfg.overrides.push_back(kv);
        }
      },
      "extra key=value override (repeatable)");
}

void add_kv_option(CLI::App* cmd, ConfigText& cfg, const std::string& flag, const std::string& key,
                   const std::string& desc) {
  cmd->add_option_function<std::string>(
      flag, [&cfg, key](const std::string& v) { cfg.overrides.push_back(key + "=" + v); }, desc);
}

void add_kv_flag(CLI::App* cmd, ConfigText& cfg, const std::string& flag, const std::string& key,
                 const std::string& value, const std::string& desc) {
  cmd->add_flag_function(
      flag,
      [&cfg, key, value](int64_t count) {
        if (count > 0) cfg.overrides.push_back(key + "=" + value);
      },
      desc);
}

void add_ablations(CLI::App* cmd, ConfigText& cfg) {
  add_kv_flag(cmd, cfg, "--no-pst", "no_pst", "true", "disable the psychological state trackers");
  add_kv_flag(cmd, cfg, "--no-psp", "no_psp", "true", "disable the psychological state planners");
  add_kv_flag(cmd, cfg, "--no-pc", "no_pc", "true", "disable the psychology controller");
  add_kv_flag(cmd, cfg, "--no-need", "no_need", "true", "replace all need labels by none");
  add_kv_flag(cmd, cfg, "--no-emotion", "no_emotion", "true",
              "replace all emotion labels by none");
}

void add_model_options(CLI::App* cmd, ConfigText& cfg) {
  add_kv_option(cmd, cfg, "--d-model", "d_model", "model width");
  add_kv_option(cmd, cfg, "--n-layers", "n_layers", "encoder/decoder layers");
  add_kv_option(cmd, cfg, "--n-heads", "n_heads", "attention heads");
  add_kv_option(cmd, cfg, "--ffn-width", "ffn_width", "feed-forward width");
  add_kv_option(cmd, cfg, "--d-plan", "d_plan", "planner label-vector width");
  add_kv_option(cmd, cfg, "--max-len", "max_len", "serialized input length cap");
  add_kv_option(cmd, cfg, "--max-target-len", "max_target_len", "target event length cap");
  add_kv_option(cmd, cfg, "--dropout", "dropout", "dropout rate");
  add_kv_option(cmd, cfg, "--label-smoothing", "label_smoothing", "label smoothing mass");
}

void add_eval_options(CLI::App* cmd, ConfigText& cfg) {
  add_kv_option(cmd, cfg, "--split", "split", "data split to score (default test)");
  add_kv_option(cmd, cfg, "--lexicon", "lexicon",
                "keyword lexicon path; scores with the exact oracle instead of a trained "
                "classifier");
  add_kv_option(cmd, cfg, "--beam", "beam", "beam width");
  add_kv_option(cmd, cfg, "--eval-stories", "eval_stories", "cap on stories to roll out (0 = all)");
  add_kv_option(cmd, cfg, "--control-seed", "control_seed", "seed for the chain-shuffled control");
  add_kv_option(cmd, cfg, "--cls-epochs", "cls_epochs", "classifier training epochs");
  add_kv_option(cmd, cfg, "--cls-lr", "cls_lr", "classifier learning rate");
  add_kv_option(cmd, cfg, "--cls-d-embed", "cls_d_embed", "classifier embedding width");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"psychology-guided story generation pipeline"};
  app.set_version_flag("--version", "psygen 0.1.0");
  app.require_subcommand(1);

  ConfigText cfg;

  std::string raw_path, data_dir, out_dir, ckpt_path, out_path;

  CLI::App* prepare = app.add_subcommand("prepare", "extract, split, and index a raw dataset");
  prepare->add_option("raw", raw_path, "raw JSONL dataset")->required();
  prepare->add_option("out", out_dir, "output directory")->required();
  add_common(prepare, cfg);
  add_kv_option(prepare, cfg, "--seed", "seed", "split/protagonist seed");
  add_kv_option(prepare, cfg, "--min-freq", "min_freq", "vocabulary frequency floor");

  CLI::App* synth = app.add_subcommand("synth", "generate the synthetic keyword corpus");
  synth->add_option("out", out_dir, "output directory")->required();
  add_common(synth, cfg);
  add_kv_option(synth, cfg, "--seed", "seed", "corpus seed");
  add_kv_option(synth, cfg, "--n", "synth_n", "number of stories");
  add_kv_option(synth, cfg, "--persistence", "persistence", "chain label repeat probability");
  add_kv_option(synth, cfg, "--lexicon", "lexicon", "keyword lexicon path (default built in)");
  add_kv_flag(synth, cfg, "--records", "emit_votes", "false",
              "emit extracted records instead of raw annotation rows");

  CLI::App* train = app.add_subcommand("train", "train a model on a prepared data directory");
  train->add_option("data", data_dir, "prepared data directory")->required();
  train->add_option("out", out_dir, "output directory")->required();
  add_common(train, cfg);
  add_kv_option(train, cfg, "--seed", "seed", "model init seed");
  add_model_options(train, cfg);
  add_kv_option(train, cfg, "--lr", "lr", "learning rate");
  add_kv_option(train, cfg, "--batch-size", "batch_size", "batch size");
  add_kv_option(train, cfg, "--max-steps", "max_steps", "optimizer step cap");
  add_kv_option(train, cfg, "--eval-every", "eval_every", "steps between dev evaluations");
  add_kv_option(train, cfg, "--patience", "patience", "non-improving evaluations before stop");
  add_kv_option(train, cfg, "--train-seed", "train_seed", "shuffling seed");
  add_kv_option(train, cfg, "--stop-below-nll0", "stop_below_nll0",
                "stop once unsmoothed train NLL drops below this");
  add_ablations(train, cfg);

  CLI::App* generate = app.add_subcommand("generate", "roll out a story from a checkpoint");
  generate->add_option("checkpoint", ckpt_path, "trained checkpoint")->required();
  generate->add_option("out", out_path, "output JSONL path")->required();
  add_common(generate, cfg);
  add_kv_option(generate, cfg, "--leading", "leading", "first event text");
  add_kv_option(generate, cfg, "--protagonist", "protagonist", "protagonist name");
  add_kv_option(generate, cfg, "--mentions", "mentions",
                "5 comma-separated protagonist surface forms");
  add_kv_option(generate, cfg, "--need-chain", "need_chain", "5 comma-separated need labels");
  add_kv_option(generate, cfg, "--emotion-chain", "emotion_chain",
                "5 comma-separated emotion labels");
  add_kv_option(generate, cfg, "--cf-need-chain", "cf_need_chain",
                "counterfactual need chain; also emits the edited story");
  add_kv_option(generate, cfg, "--cf-emotion-chain", "cf_emotion_chain",
                "counterfactual emotion chain");
  add_kv_option(generate, cfg, "--story-id", "story_id", "id stamped on the output row");
  add_kv_option(generate, cfg, "--beam", "beam", "beam width");
  add_kv_option(generate, cfg, "--gen-max-len", "gen_max_len", "max generated tokens per event");
  add_kv_option(generate, cfg, "--gen-min-len", "gen_min_len", "min generated tokens per event");
  add_ablations(generate, cfg);

  CLI::App* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a prepared split");
  evaluate->add_option("data", data_dir, "prepared data directory")->required();
  evaluate->add_option("checkpoint", ckpt_path, "trained checkpoint")->required();
  evaluate->add_option("out", out_dir, "output directory")->required();
  add_common(evaluate, cfg);
  add_kv_option(evaluate, cfg, "--seed", "seed", "classifier/control seed");
  add_eval_options(evaluate, cfg);
  add_ablations(evaluate, cfg);

  CLI::App* ablate = app.add_subcommand(
      "ablate-suite", "evaluate the full model and all five ablations on one checkpoint");
  ablate->add_option("data", data_dir, "prepared data directory")->required();
  ablate->add_option("checkpoint", ckpt_path, "trained checkpoint")->required();
  ablate->add_option("out", out_dir, "output directory")->required();
  add_common(ablate, cfg);
  add_kv_option(ablate, cfg, "--seed", "seed", "classifier/control seed");
  add_eval_options(ablate, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::string msg = e.what();
    for (auto& c : msg)
      if (c == '\n') c = ' ';
    std::fprintf(stderr, "psygen: error: USAGE: %s\n", msg.c_str());
    return PSYGEN_USAGE;
  }

  std::string text = cfg.assemble();
  const char* ctext = text.c_str();
  char* out = nullptr;

  if (prepare->parsed())
    return finish(psygen_prepare(raw_path.c_str(), out_dir.c_str(), ctext, &out), out);
  if (synth->parsed()) return finish(psygen_synth(out_dir.c_str(), ctext, &out), out);
  if (train->parsed())
    return finish(psygen_train(data_dir.c_str(), out_dir.c_str(), ctext, &out), out);
  if (generate->parsed())
    return finish(psygen_generate(ckpt_path.c_str(), out_path.c_str(), ctext, &out), out);
  if (evaluate->parsed())
    return finish(psygen_evaluate(data_dir.c_str(), ckpt_path.c_str(), out_dir.c_str(), ctext,
                                  &out),
                  out);
  if (ablate->parsed())
    return finish(psygen_ablate_suite(data_dir.c_str(), ckpt_path.c_str(), out_dir.c_str(), ctext,
                                      &out),
                  out);
  std::fprintf(stderr, "psygen: error: USAGE: no command given\n");
  return PSYGEN_USAGE;
}
