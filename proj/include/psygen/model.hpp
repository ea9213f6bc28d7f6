#pragma once

#include <memory>
#include <string>
#include <vector>

#include "psygen/beam.hpp"
#include "psygen/controller.hpp"
#include "psygen/corpus.hpp"
#include "psygen/decoder.hpp"
#include "psygen/encoder.hpp"
#include "psygen/planner.hpp"
#include "psygen/tracker.hpp"

namespace psygen {

/// Which conditioning pathways to disable. Label flags rewrite the sample's
/// labels to none before serialization, so the change reaches the input
/// layout, the trackers, and the planners together.
struct AblationFlags {
  bool no_tracker = false;     // zero both memory outputs
  bool no_planner = false;     // freeze beta at (0.5,0.5), zero plan vectors
  bool no_controller = false;  // drop the conditioning row entirely
  bool no_need = false;        // all need labels -> none
  bool no_emotion = false;     // all emotion labels -> none

  bool any() const { return no_tracker || no_planner || no_controller || no_need || no_emotion; }
};

/// Forward-pass observability for invariant checks: every attention or
/// softmax distribution produced during the pass, plus the controller's
/// alpha/beta rows and the output distribution.
struct ForwardDiagnostics {
  std::vector<Mat> distributions;
  Mat alpha_n, alpha_e, beta;
  Mat output_probs;
};

/// Encoder-decoder story model with state trackers, chain planners, and the
/// fusion controller. Parameter creation order is fixed, so checkpoints can
/// match parameters by name.
class StoryModel {
 public:
  StoryModel(const ModelConfig& cfg, Vocabulary vocab);

  const ModelConfig& config() const { return cfg_; }
  const Vocabulary& vocab() const { return vocab_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  // Teacher-forced smoothed loss for one sample. eps < 0 uses the config
  // smoothing value. Returns a scalar node suitable for backward().
  Var loss(Tape& tape, const TrainingSample& sample, const AblationFlags& flags,
           double eps = -1.0, ForwardDiagnostics* diag = nullptr) const;

  // Value-only loss (no gradient bookkeeping beyond the local tape).
  double loss_value(const TrainingSample& sample, const AblationFlags& flags,
                    double eps = -1.0) const;

  // Scored target length: tokens after truncation plus the terminal eos.
  // loss() averages over exactly this many positions.
  int target_token_count(const TrainingSample& sample) const;

  /// Conditioning context built once per generated event; decode steps
  /// rebuild only the decoder subgraph and roll the tape back.
  struct Prepared {
    Var memory;
    int mark = 0;
  };
  Prepared prepare(Tape& tape, const TrainingSample& sample, const AblationFlags& flags,
                   ForwardDiagnostics* diag = nullptr) const;
  Eigen::VectorXd step_logprobs(Tape& tape, const Prepared& prep,
                                const std::vector<int>& prefix) const;

  // Beam-decodes the target event for a sample (its target field is unused).
  std::vector<int> generate_event(const TrainingSample& sample, const AblationFlags& flags,
                                  const BeamOptions& opts, bool* used_fallback = nullptr) const;

  // Iterative whole-story rollout: keeps event 1 and the given chains and
  // mentions, regenerates events 2..5, feeding each generated event back
  // into the next context.
  StoryRecord rollout(const StoryRecord& given, const AblationFlags& flags,
                      const BeamOptions& opts, std::vector<bool>* fallbacks = nullptr) const;

 private:
  TrainingSample effective_sample(const TrainingSample& sample, const AblationFlags& flags) const;
  Var conditioning(Tape& tape, const TrainingSample& eff, const AblationFlags& flags,
                   std::vector<Mat>* sink, ForwardDiagnostics* diag) const;

  ModelConfig cfg_;
  Vocabulary vocab_;
  ParamStore store_;
  Param* tok_emb_;
  std::unique_ptr<TransformerEncoder> encoder_;
  std::unique_ptr<MemoryTracker> need_tracker_;
  std::unique_ptr<MemoryTracker> emotion_tracker_;
  std::unique_ptr<ChainPlanner> need_planner_;
  std::unique_ptr<ChainPlanner> emotion_planner_;
  std::unique_ptr<PsychologyController> controller_;
  std::unique_ptr<TransformerDecoder> decoder_;
};

/// Checkpoint: config + vocabulary + parameters (+ optional Adam moments),
/// raw doubles, bit-exact round trip on the same architecture.
struct Checkpoint {
  std::unique_ptr<StoryModel> model;
  bool has_moments = false;
  uint64_t adam_steps = 0;
  KvConfig extra;
};

void save_checkpoint(const StoryModel& model, const std::string& path, bool with_moments,
                     uint64_t adam_steps, const KvConfig& extra);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace psygen
