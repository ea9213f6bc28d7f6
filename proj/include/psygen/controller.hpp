#pragma once

#include <string>
#include <utility>
#include <vector>

#include "psygen/encoder.hpp"
#include "psygen/nn.hpp"
#include "psygen/planner.hpp"

namespace psygen {

/// Two-stage conditioning: local control fuses the realized state history
/// into the context vector; global control picks between the need and
/// emotion plan vectors with a learned query and emits the decoder
/// conditioning row H_c.
class PsychologyController {
 public:
  PsychologyController(ParamStore& store, const ModelConfig& cfg, const std::string& prefix);

  // BiGRU over the 2-sequence (context row, pooled character row); the
  // configured position's output is projected back to d_model.
  Var fuse_character(Tape& tape, Var h_c, Var h_p_char) const;

  // scores_i = q . k_i / sqrt(d); alpha = softmax(scores); context = alpha K.
  // Keys serve as values. Returns (context 1 x d, alpha 1 x m).
  static std::pair<Var, Var> guided_attention(Tape& tape, Var query,
                                              const std::vector<Var>& keys);

  // MLP([memory ; attended]): hidden 2*d_model tanh, then linear to d_model.
  Var fuse_need_state(Tape& tape, Var memory, Var attended) const;
  Var fuse_emotion_state(Tape& tape, Var memory, Var attended) const;

  struct LocalOut {
    Var h_tilde;   // fused character context
    Var alpha_n;   // 1 x m need attention
    Var alpha_e;   // 1 x m emotion attention
    Var h_prime;   // h_tilde + fused emotion branch
  };
  // no_tracker zeroes the memory rows before fusion.
  LocalOut local_control(Tape& tape, Var h_c, Var h_p_char, Var need_mem, Var emo_mem,
                         const std::vector<Var>& h_n, const std::vector<Var>& h_e,
                         bool no_tracker) const;

  struct GlobalOut {
    Var beta;  // 1 x 2, sums to 1
    Var H_c;   // 1 x d_model conditioning row
  };
  // Plan vectors are projected to d_model before concatenation. no_planner
  // freezes beta at (0.5, 0.5) and zeroes both plan vectors.
  GlobalOut global_control(Tape& tape, Var h_prime_c, Var h_star_n, Var h_star_e,
                           bool no_planner) const;

 private:
  Var fuse_state(Tape& tape, Var memory, Var attended, Param* w1, Param* b1, Param* w2,
                 Param* b2) const;

  int d_model_;
  bool last_position_;
  BiGru char_gru_;
  Param* char_proj_;
  Param *fusn_w1_, *fusn_b1_, *fusn_w2_, *fusn_b2_;
  Param *fuse_w1_, *fuse_b1_, *fuse_w2_, *fuse_b2_;
  Param* plan_proj_;
  Param* query_;
  Param *gmlp_w1_, *gmlp_b1_, *gmlp_w2_, *gmlp_b2_;
};

}  // namespace psygen
