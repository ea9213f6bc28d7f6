#pragma once

#include <string>
#include <vector>

#include "psygen/encoder.hpp"
#include "psygen/nn.hpp"

namespace psygen {

/// Post-norm transformer decoder. Causal self-attention over the target
/// prefix; every layer cross-attends over the encoder states with the
/// conditioning row appended as one extra key/value position.
class TransformerDecoder {
 public:
  TransformerDecoder(ParamStore& store, const ModelConfig& cfg, Param* tok_emb,
                     const std::string& prefix);

  // target_in: bos-prefixed token ids (length T <= max_target_len + 1).
  // memory: L x d or (L+1) x d when the conditioning row is appended.
  // Returns decoder states T x d_model.
  Var forward(Tape& tape, const std::vector<int>& target_in, Var memory,
              std::vector<Mat>* norm_sink = nullptr) const;

  // states * W_out^T -> T x vocab_size, bias-free output projection.
  Var project(Tape& tape, Var states) const;

 private:
  struct Layer {
    Param *wq, *wk, *wv, *wo, *bq, *bk, *bv, *bo;          // self-attention
    Param *cq, *ck, *cv, *co, *cbq, *cbk, *cbv, *cbo;       // cross-attention
    Param *ff1, *ff1b, *ff2, *ff2b;
    Param *ln1g, *ln1b, *ln2g, *ln2b, *ln3g, *ln3b;
  };
  const ModelConfig cfg_;
  Param* tok_emb_;
  Param* pos_emb_;
  Param* w_out_;
  std::vector<Layer> layers_;
};

}  // namespace psygen
