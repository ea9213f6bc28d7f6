#pragma once

#include <string>

#include "psygen/kvconfig.hpp"
#include "psygen/model.hpp"

namespace psygen {

/// Pipeline commands behind the CLI and the shared-library API. Each one
/// takes a flat key-value config (file settings merged with CLI overrides),
/// performs its file work, and returns the manifest or report JSON that it
/// also writes to disk. Failures raise Error; callers translate to exit
/// codes or status values.

// Keys no_pst, no_psp, no_pc, no_need, no_emotion; unknown no_* keys raise
// Usage so a mistyped ablation cannot silently run the full model.
AblationFlags ablations_from_kv(const KvConfig& cfg);

// Ingest a raw JSONL dataset (annotation rows and/or extracted records),
// extract protagonist records, split, expand samples, build the vocabulary,
// and write all splits plus manifest.json into out_dir.
// Keys: seed, min_freq. More than half malformed rows aborts.
std::string cmd_prepare(const std::string& raw_path, const std::string& out_dir,
                        const KvConfig& cfg);

// Generate the synthetic keyword corpus into out_dir (raw.jsonl,
// lexicon.txt, manifest.json).
// Keys: synth_n, seed, persistence, emit_votes, lexicon (optional path).
std::string cmd_synth(const std::string& out_dir, const KvConfig& cfg);

// Train on a prepared data directory; writes model.ckpt, train_log.csv and
// manifest.json into out_dir. Model and trainer keys per their from_kv
// parsers, plus the ablation keys.
std::string cmd_train(const std::string& data_dir, const std::string& out_dir,
                      const KvConfig& cfg);

// Roll out one story (and optionally a counterfactual twin) from a trained
// checkpoint. Keys: leading, protagonist, need_chain, emotion_chain
// (comma-separated label names), mentions (optional), cf_need_chain /
// cf_emotion_chain (optional counterfactual chains), beam, gen_max_len,
// gen_min_len, plus ablations. Writes JSONL to out_path.
std::string cmd_generate(const std::string& checkpoint_path, const std::string& out_path,
                         const KvConfig& cfg);

// Evaluate a checkpoint on a prepared split: perplexity, BLEU-1/2,
// ROUGE-1/2/L over rollouts, and need/emotion consistency with a
// chain-shuffled control. Keys: split (default test), lexicon (optional
// oracle path; otherwise a classifier is trained on the train split),
// beam, eval_stories (cap, 0 = all), control_seed, cls_* classifier knobs,
// plus ablations. Writes report.json and per_story.csv into out_dir.
std::string cmd_evaluate(const std::string& data_dir, const std::string& checkpoint_path,
                         const std::string& out_dir, const KvConfig& cfg);

// Run cmd_evaluate's core once per ablation variant (full model plus the
// five single-flag ablations) on one checkpoint; writes ablations.json.
std::string cmd_ablate_suite(const std::string& data_dir, const std::string& checkpoint_path,
                             const std::string& out_dir, const KvConfig& cfg);

}  // namespace psygen
