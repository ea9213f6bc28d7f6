#include "psygen/controller.hpp"

#include <cmath>

namespace psygen {

using namespace nn;

PsychologyController::PsychologyController(ParamStore& store, const ModelConfig& cfg,
                                           const std::string& prefix)
    : d_model_(cfg.d_model),
      last_position_(cfg.fuse_last_position),
      char_gru_([&store, &cfg, &prefix]() -> BiGru {
        Rng rng(cfg.seed ^ fnv1a(prefix + ".char"));
        return BiGru(store, cfg.d_model, cfg.d_model, prefix + ".char", rng);
      }()) {
  Rng rng(cfg.seed ^ fnv1a(prefix));
  const int d = cfg.d_model;
  char_proj_ = &store.create(prefix + ".char_proj", d, 2 * d, 0.02, rng);
  fusn_w1_ = &store.create(prefix + ".fusn_w1", 2 * d, 2 * d, 0.02, rng);
  fusn_b1_ = &store.create_zeros(prefix + ".fusn_b1", 1, 2 * d);
  fusn_w2_ = &store.create(prefix + ".fusn_w2", d, 2 * d, 0.02, rng);
  fusn_b2_ = &store.create_zeros(prefix + ".fusn_b2", 1, d);
  fuse_w1_ = &store.create(prefix + ".fuse_w1", 2 * d, 2 * d, 0.02, rng);
  fuse_b1_ = &store.create_zeros(prefix + ".fuse_b1", 1, 2 * d);
  fuse_w2_ = &store.create(prefix + ".fuse_w2", d, 2 * d, 0.02, rng);
  fuse_b2_ = &store.create_zeros(prefix + ".fuse_b2", 1, d);
  plan_proj_ = &store.create(prefix + ".plan_proj", d, 2 * cfg.d_plan, 0.02, rng);
  query_ = &store.create(prefix + ".query", 1, 2 * d, 0.02, rng);
  gmlp_w1_ = &store.create(prefix + ".gmlp_w1", 2 * d, 2 * d, 0.02, rng);
  gmlp_b1_ = &store.create_zeros(prefix + ".gmlp_b1", 1, 2 * d);
  gmlp_w2_ = &store.create(prefix + ".gmlp_w2", d, 2 * d, 0.02, rng);
  gmlp_b2_ = &store.create_zeros(prefix + ".gmlp_b2", 1, d);
}

Var PsychologyController::fuse_character(Tape& tape, Var h_c, Var h_p_char) const {
  PSYGEN_CONTRACT(h_c.rows() == 1 && h_p_char.rows() == 1 && h_c.cols() == d_model_ &&
                      h_p_char.cols() == d_model_,
                  "character fusion expects two 1 x d_model rows");
  auto outs = char_gru_.run(tape, {h_c, h_p_char});
  Var picked = outs[last_position_ ? 1 : 0];
  return matmul_nt(picked, tape.param(*char_proj_));
}

std::pair<Var, Var> PsychologyController::guided_attention(Tape& tape, Var query,
                                                           const std::vector<Var>& keys) {
  PSYGEN_CONTRACT(query.rows() == 1 && !keys.empty(), "guided attention needs a row query");
  Var K = stack_rows(keys);
  PSYGEN_CONTRACT(K.cols() == query.cols(), "query and key widths differ");
  double inv_scale = 1.0 / std::sqrt(static_cast<double>(query.cols()));
  Var scores = scale(matmul_nt(query, K), inv_scale);  // 1 x m
  Var alpha = softmax_rows(scores);
  Var context = matmul(alpha, K);
  return {context, alpha};
}

Var PsychologyController::fuse_state(Tape& tape, Var memory, Var attended, Param* w1, Param* b1,
                                     Param* w2, Param* b2) const {
  PSYGEN_CONTRACT(memory.rows() == 1 && attended.rows() == 1 && memory.cols() == d_model_ &&
                      attended.cols() == d_model_,
                  "state fusion expects two 1 x d_model rows");
  Var cat = concat_cols(memory, attended);
  Var hidden = tanh_(add(matmul_nt(cat, tape.param(*w1)), tape.param(*b1)));
  return add(matmul_nt(hidden, tape.param(*w2)), tape.param(*b2));
}

Var PsychologyController::fuse_need_state(Tape& tape, Var memory, Var attended) const {
  return fuse_state(tape, memory, attended, fusn_w1_, fusn_b1_, fusn_w2_, fusn_b2_);
}

Var PsychologyController::fuse_emotion_state(Tape& tape, Var memory, Var attended) const {
  return fuse_state(tape, memory, attended, fuse_w1_, fuse_b1_, fuse_w2_, fuse_b2_);
}

PsychologyController::LocalOut PsychologyController::local_control(
    Tape& tape, Var h_c, Var h_p_char, Var need_mem, Var emo_mem, const std::vector<Var>& h_n,
    const std::vector<Var>& h_e, bool no_tracker) const {
  LocalOut out;
  out.h_tilde = fuse_character(tape, h_c, h_p_char);
  if (no_tracker) {
    need_mem = tape.constant(Mat::Zero(1, d_model_));
    emo_mem = tape.constant(Mat::Zero(1, d_model_));
  }
  auto [n_ctx, alpha_n] = guided_attention(tape, out.h_tilde, h_n);
  out.alpha_n = alpha_n;
  Var n_fused = fuse_need_state(tape, need_mem, n_ctx);
  auto [e_ctx, alpha_e] = guided_attention(tape, n_fused, h_e);
  out.alpha_e = alpha_e;
  Var e_fused = fuse_emotion_state(tape, emo_mem, e_ctx);
  out.h_prime = add(e_fused, out.h_tilde);
  return out;
}

PsychologyController::GlobalOut PsychologyController::global_control(Tape& tape, Var h_prime_c,
                                                                     Var h_star_n, Var h_star_e,
                                                                     bool no_planner) const {
  PSYGEN_CONTRACT(h_prime_c.rows() == 1 && h_prime_c.cols() == d_model_,
                  "global control expects a 1 x d_model context row");
  Var pn, pe;
  if (no_planner) {
    pn = tape.constant(Mat::Zero(1, d_model_));
    pe = tape.constant(Mat::Zero(1, d_model_));
  } else {
    pn = matmul_nt(h_star_n, tape.param(*plan_proj_));
    pe = matmul_nt(h_star_e, tape.param(*plan_proj_));
  }
  Var k_n = concat_cols(h_prime_c, pn);
  Var k_e = concat_cols(h_prime_c, pe);
  GlobalOut out;
  if (no_planner) {
    Mat frozen(1, 2);
    frozen << 0.5, 0.5;
    out.beta = tape.constant(frozen);
  } else {
    double inv_scale = 1.0 / std::sqrt(static_cast<double>(2 * d_model_));
    Var q = tape.param(*query_);
    Var s_n = scale(matmul_nt(q, k_n), inv_scale);  // 1 x 1
    Var s_e = scale(matmul_nt(q, k_e), inv_scale);
    out.beta = softmax_rows(concat_cols(s_n, s_e));
  }
  Var mixed = matmul(out.beta, concat_rows(k_n, k_e));  // 1 x 2d
  Var hidden = tanh_(add(matmul_nt(mixed, tape.param(*gmlp_w1_)), tape.param(*gmlp_b1_)));
  out.H_c = add(matmul_nt(hidden, tape.param(*gmlp_w2_)), tape.param(*gmlp_b2_));
  return out;
}

}  // namespace psygen
