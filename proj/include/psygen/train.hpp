#pragma once

#include <string>
#include <vector>

#include "psygen/kvconfig.hpp"
#include "psygen/model.hpp"

namespace psygen {

struct TrainConfig {
  double lr = 3e-4;
  int batch_size = 8;
  int max_steps = 2000;
  int eval_every = 100;    // optimizer steps between dev evaluations
  int patience = 3;        // non-improving dev evaluations before stopping
  uint64_t seed = 1;
  double label_smoothing = -1.0;  // < 0: use the model config value
  double stop_below_nll0 = -1.0;  // stop once train NLL (no smoothing) drops below

  static TrainConfig from_kv(const KvConfig& kv);
};

struct TrainResult {
  int steps = 0;
  double best_dev = 0.0;
  int best_step = 0;
  bool early_stopped = false;
  bool nll_target_hit = false;
  std::string log_csv;  // header step,train_loss,dev_loss,train_nll0
};

// Adam training with periodic dev evaluation, patience-based early stopping,
// and best-model checkpointing. Divergence (non-finite loss) aborts.
// checkpoint_path may be empty to skip writing.
TrainResult train_model(StoryModel& model, const std::vector<TrainingSample>& train_set,
                        const std::vector<TrainingSample>& dev_set, const TrainConfig& cfg,
                        const AblationFlags& flags, const std::string& checkpoint_path);

}  // namespace psygen
