#include "psygen/train.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace psygen {

using namespace nn;

TrainConfig TrainConfig::from_kv(const KvConfig& kv) {
  TrainConfig cfg;
  cfg.lr = kv.get_double("lr", cfg.lr);
  cfg.batch_size = static_cast<int>(kv.get_int("batch_size", cfg.batch_size));
  cfg.max_steps = static_cast<int>(kv.get_int("max_steps", cfg.max_steps));
  cfg.eval_every = static_cast<int>(kv.get_int("eval_every", cfg.eval_every));
  cfg.patience = static_cast<int>(kv.get_int("patience", cfg.patience));
  cfg.seed = static_cast<uint64_t>(kv.get_int("train_seed", static_cast<int64_t>(cfg.seed)));
  cfg.label_smoothing = kv.get_double("train_label_smoothing", cfg.label_smoothing);
  cfg.stop_below_nll0 = kv.get_double("stop_below_nll0", cfg.stop_below_nll0);
  PSYGEN_CHECK(cfg.lr > 0.0, Status::Config, "learning rate must be positive");
  PSYGEN_CHECK(cfg.batch_size >= 1, Status::Config, "batch_size must be at least 1");
  PSYGEN_CHECK(cfg.max_steps >= 1, Status::Config, "max_steps must be at least 1");
  PSYGEN_CHECK(cfg.eval_every >= 1, Status::Config, "eval_every must be at least 1");
  PSYGEN_CHECK(cfg.patience >= 1, Status::Config, "patience must be at least 1");
  return cfg;
}

namespace {

double mean_loss(const StoryModel& model, const std::vector<TrainingSample>& set,
                 const AblationFlags& flags, double eps) {
  double total = 0.0;
  for (const auto& s : set) total += model.loss_value(s, flags, eps);
  return total / static_cast<double>(set.size());
}

struct Snapshot {
  std::vector<Mat> values;

  static Snapshot take(const ParamStore& store) {
    Snapshot snap;
    for (const auto& p : store.items()) snap.values.push_back(p->value);
    return snap;
  }
  void restore(ParamStore& store) const {
    PSYGEN_CONTRACT(values.size() == store.items().size(), "snapshot shape drift");
    for (size_t i = 0; i < values.size(); ++i) store.items()[i]->value = values[i];
  }
};

}  // namespace

TrainResult train_model(StoryModel& model, const std::vector<TrainingSample>& train_set,
                        const std::vector<TrainingSample>& dev_set, const TrainConfig& cfg,
                        const AblationFlags& flags, const std::string& checkpoint_path) {
  PSYGEN_CHECK(!train_set.empty(), Status::Data, "training set is empty");
  PSYGEN_CHECK(!dev_set.empty(), Status::Data, "dev set is empty");

  AdamConfig ac;
  ac.lr = cfg.lr;
  Adam opt(model.params(), ac);
  Rng rng(cfg.seed);
  double eps = cfg.label_smoothing;

  std::vector<size_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  size_t cursor = 0;

  std::ostringstream log;
  log << "step,train_loss,dev_loss,train_nll0\n";

  TrainResult res;
  res.best_dev = std::numeric_limits<double>::infinity();
  Snapshot best;
  bool have_best = false;
  int bad_evals = 0;
  double run_sum = 0.0;
  int run_count = 0;

  for (int step = 1; step <= cfg.max_steps; ++step) {
    model.params().zero_grads();
    double batch_loss = 0.0;
    int b = cfg.batch_size;
    for (int k = 0; k < b; ++k) {
      if (cursor >= order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      const TrainingSample& sample = train_set[order[cursor++]];
      Tape tape;
      Var loss = model.loss(tape, sample, flags, eps);
      double lv = loss.value()(0, 0);
      PSYGEN_CHECK(std::isfinite(lv), Status::Diverged,
                   "training loss is not finite at step " + std::to_string(step));
      batch_loss += lv;
      tape.backward(scale(loss, 1.0 / static_cast<double>(b)));
    }
    batch_loss /= static_cast<double>(b);
    opt.step();
    run_sum += batch_loss;
    ++run_count;
    res.steps = step;

    if (step % cfg.eval_every == 0 || step == cfg.max_steps) {
      double dev = mean_loss(model, dev_set, flags, eps);
      PSYGEN_CHECK(std::isfinite(dev), Status::Diverged,
                   "dev loss is not finite at step " + std::to_string(step));
      double nll0 = -1.0;
      if (cfg.stop_below_nll0 >= 0.0) nll0 = mean_loss(model, train_set, flags, 0.0);
      log << step << ',' << run_sum / run_count << ',' << dev << ',' << nll0 << '\n';
      run_sum = 0.0;
      run_count = 0;

      if (dev < res.best_dev) {
        res.best_dev = dev;
        res.best_step = step;
        best = Snapshot::take(model.params());
        have_best = true;
        bad_evals = 0;
      } else {
        ++bad_evals;
      }
      if (cfg.stop_below_nll0 >= 0.0 && nll0 < cfg.stop_below_nll0) {
        res.nll_target_hit = true;
        break;
      }
      if (bad_evals >= cfg.patience) {
        res.early_stopped = true;
        break;
      }
    }
  }

  // The overfit path keeps the final weights (the target was just met);
  // otherwise the best dev snapshot wins.
  if (have_best && !res.nll_target_hit) best.restore(model.params());
  if (!checkpoint_path.empty()) {
    KvConfig extra;
    extra.set("steps", std::to_string(res.steps));
    extra.set("best_step", std::to_string(res.best_step));
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", res.best_dev);
    extra.set("best_dev", buf);
    save_checkpoint(model, checkpoint_path, true, static_cast<uint64_t>(opt.steps_done()), extra);
  }
  res.log_csv = log.str();
  return res;
}

}  // namespace psygen
