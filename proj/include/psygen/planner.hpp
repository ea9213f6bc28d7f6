#pragma once

#include <string>
#include <vector>

#include "psygen/encoder.hpp"
#include "psygen/nn.hpp"

namespace psygen {

/// Single-direction GRU cell with the standard update/reset gates.
class GruCell {
 public:
  GruCell(ParamStore& store, int in_dim, int hidden, const std::string& prefix, Rng& rng);

  // x: 1 x in_dim, h: 1 x hidden -> next hidden 1 x hidden.
  Var step(Tape& tape, Var x, Var h) const;

  int hidden() const { return hidden_; }

 private:
  Param *wr_, *ur_, *br_;
  Param *wz_, *uz_, *bz_;
  Param *wc_, *uc_, *bc_;
  int hidden_;
};

/// Bidirectional GRU; output j is [forward_j ; backward_j], width 2*hidden.
class BiGru {
 public:
  BiGru(ParamStore& store, int in_dim, int hidden, const std::string& prefix, Rng& rng);

  std::vector<Var> run(Tape& tape, const std::vector<Var>& xs) const;

  int out_dim() const { return 2 * fwd_.hidden(); }

 private:
  GruCell fwd_, bwd_;
};

/// Chain planner: label embedding table + BiGRU over the full 5-label chain.
class ChainPlanner {
 public:
  ChainPlanner(ParamStore& store, const ModelConfig& cfg, int num_labels,
               const std::string& prefix);

  // chain holds 5 label indices into the table.
  std::vector<Var> plan(Tape& tape, const std::vector<int>& chain) const;

  Param* table() { return table_; }

 private:
  Param* table_;
  BiGru gru_;
};

// t is the planner output; j is the 1-based target position (j = m).
Var select_plan(const std::vector<Var>& t, int j);

// Replaces table rows whose label name appears in a word-vector text file
// (word then d_plan floats per line). Returns the number of rows replaced.
int overlay_label_vectors(Param* table, const std::vector<std::string>& names,
                          const std::string& path);

}  // namespace psygen
