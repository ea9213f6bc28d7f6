#pragma once

#include <string>
#include <vector>

#include "psygen/encoder.hpp"
#include "psygen/nn.hpp"

namespace psygen {

// Elementwise mean over a list of 1 x d rows.
Var pool_rows(Tape& tape, const std::vector<Var>& rows);

/// Gated memory over a sequence of psychological state vectors. One instance
/// per kind (need, emotion); the two share no parameters.
class MemoryTracker {
 public:
  MemoryTracker(ParamStore& store, const ModelConfig& cfg, const std::string& prefix);

  // candidate = tanh(M W1^T + h W2^T); gate = sigmoid(M W3^T + h W4^T);
  // next = gate*candidate + (1-gate)*M. All rows 1 x d_model.
  Var step(Tape& tape, Var memory, Var state) const;

  // Folds step over the states starting from the learned initial memory.
  // skip_last drops the final state from the fold (config alternative).
  Var fold(Tape& tape, const std::vector<Var>& states, bool skip_last = false) const;

  Var initial(Tape& tape) const { return tape.param(*m0_); }

 private:
  Param *w1_, *w2_, *w3_, *w4_;
  Param *b_cand_ = nullptr, *b_gate_ = nullptr;
  Param* m0_;
};

}  // namespace psygen
