#include "psygen/tracker.hpp"

namespace psygen {

using namespace nn;

Var pool_rows(Tape& tape, const std::vector<Var>& rows) {
  PSYGEN_CONTRACT(!rows.empty(), "cannot pool an empty state list");
  return mean_rows(stack_rows(rows));
}

MemoryTracker::MemoryTracker(ParamStore& store, const ModelConfig& cfg,
                             const std::string& prefix) {
  Rng rng(cfg.seed ^ fnv1a(prefix));
  const int d = cfg.d_model;
  w1_ = &store.create(prefix + ".w1", d, d, 0.02, rng);
  w2_ = &store.create(prefix + ".w2", d, d, 0.02, rng);
  w3_ = &store.create(prefix + ".w3", d, d, 0.02, rng);
  w4_ = &store.create(prefix + ".w4", d, d, 0.02, rng);
  if (cfg.tracker_bias) {
    b_cand_ = &store.create_zeros(prefix + ".b_cand", 1, d);
    b_gate_ = &store.create_zeros(prefix + ".b_gate", 1, d);
  }
  m0_ = &store.create(prefix + ".m0", 1, d, 0.02, rng);
}

Var MemoryTracker::step(Tape& tape, Var memory, Var state) const {
  PSYGEN_CONTRACT(memory.rows() == 1 && state.rows() == 1 && memory.cols() == state.cols(),
                  "tracker step expects matching 1 x d rows");
  Var cand_pre = add(matmul_nt(memory, tape.param(*w1_)), matmul_nt(state, tape.param(*w2_)));
  if (b_cand_) cand_pre = add(cand_pre, tape.param(*b_cand_));
  Var cand = tanh_(cand_pre);
  Var gate_pre = add(matmul_nt(memory, tape.param(*w3_)), matmul_nt(state, tape.param(*w4_)));
  if (b_gate_) gate_pre = add(gate_pre, tape.param(*b_gate_));
  Var gate = sigmoid_(gate_pre);
  return add(cmul(gate, cand), cmul(one_minus(gate), memory));
}

Var MemoryTracker::fold(Tape& tape, const std::vector<Var>& states, bool skip_last) const {
  PSYGEN_CONTRACT(!states.empty(), "tracker fold needs at least one state");
  size_t count = states.size();
  if (skip_last && count > 1) --count;
  Var memory = initial(tape);
  for (size_t i = 0; i < count; ++i) memory = step(tape, memory, states[i]);
  return memory;
}

}  // namespace psygen
