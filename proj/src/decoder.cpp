#include "psygen/decoder.hpp"

namespace psygen {

using namespace nn;

TransformerDecoder::TransformerDecoder(ParamStore& store, const ModelConfig& cfg, Param* tok_emb,
                                       const std::string& prefix)
    : cfg_(cfg), tok_emb_(tok_emb) {
  Rng rng(cfg.seed ^ fnv1a(prefix));
  const int d = cfg.d_model;
  pos_emb_ = &store.create(prefix + ".pos", cfg.max_target_len + 1, d, 0.02, rng);
  w_out_ = &store.create(prefix + ".w_out", cfg.vocab_size, d, 0.02, rng);
  for (int l = 0; l < cfg.n_layers; ++l) {
    std::string lp = prefix + ".l" + std::to_string(l);
    Layer layer;
    layer.wq = &store.create(lp + ".wq", d, d, 0.02, rng);
    layer.bq = &store.create_zeros(lp + ".bq", 1, d);
    layer.wk = &store.create(lp + ".wk", d, d, 0.02, rng);
    layer.bk = &store.create_zeros(lp + ".bk", 1, d);
    layer.wv = &store.create(lp + ".wv", d, d, 0.02, rng);
    layer.bv = &store.create_zeros(lp + ".bv", 1, d);
    layer.wo = &store.create(lp + ".wo", d, d, 0.02, rng);
    layer.bo = &store.create_zeros(lp + ".bo", 1, d);
    layer.cq = &store.create(lp + ".cq", d, d, 0.02, rng);
    layer.cbq = &store.create_zeros(lp + ".cbq", 1, d);
    layer.ck = &store.create(lp + ".ck", d, d, 0.02, rng);
    layer.cbk = &store.create_zeros(lp + ".cbk", 1, d);
    layer.cv = &store.create(lp + ".cv", d, d, 0.02, rng);
    layer.cbv = &store.create_zeros(lp + ".cbv", 1, d);
    layer.co = &store.create(lp + ".co", d, d, 0.02, rng);
    layer.cbo = &store.create_zeros(lp + ".cbo", 1, d);
    layer.ff1 = &store.create(lp + ".ff1", cfg.ffn_width, d, 0.02, rng);
    layer.ff1b = &store.create_zeros(lp + ".ff1b", 1, cfg.ffn_width);
    layer.ff2 = &store.create(lp + ".ff2", d, cfg.ffn_width, 0.02, rng);
    layer.ff2b = &store.create_zeros(lp + ".ff2b", 1, d);
    layer.ln1g = &store.create_const(lp + ".ln1g", 1, d, 1.0);
    layer.ln1b = &store.create_zeros(lp + ".ln1b", 1, d);
    layer.ln2g = &store.create_const(lp + ".ln2g", 1, d, 1.0);
    layer.ln2b = &store.create_zeros(lp + ".ln2b", 1, d);
    layer.ln3g = &store.create_const(lp + ".ln3g", 1, d, 1.0);
    layer.ln3b = &store.create_zeros(lp + ".ln3b", 1, d);
    layers_.push_back(layer);
  }
}

Var TransformerDecoder::forward(Tape& tape, const std::vector<int>& target_in, Var memory,
                                std::vector<Mat>* norm_sink) const {
  const int T = static_cast<int>(target_in.size());
  PSYGEN_CONTRACT(T >= 1 && T <= cfg_.max_target_len + 1,
                  "decoder prefix length exceeds the target cap");

  Var tok = tape.param(*tok_emb_);
  Var x = add(gather_rows(tok, target_in), slice_rows(tape.param(*pos_emb_), 0, T));

  Mat causal = Mat::Zero(T, T);
  for (int r = 0; r < T; ++r)
    for (int c = r + 1; c < T; ++c) causal(r, c) = -1e30;
  Mat no_mask;

  for (const auto& layer : layers_) {
    Var q = add_row_broadcast(matmul_nt(x, tape.param(*layer.wq)), tape.param(*layer.bq));
    Var k = add_row_broadcast(matmul_nt(x, tape.param(*layer.wk)), tape.param(*layer.bk));
    Var v = add_row_broadcast(matmul_nt(x, tape.param(*layer.wv)), tape.param(*layer.bv));
    Var self_ctx = multi_head_attention(tape, q, k, v, cfg_.n_heads, causal, norm_sink);
    Var self_out =
        add_row_broadcast(matmul_nt(self_ctx, tape.param(*layer.wo)), tape.param(*layer.bo));
    x = layer_norm(add(x, self_out), tape.param(*layer.ln1g), tape.param(*layer.ln1b));

    Var cq = add_row_broadcast(matmul_nt(x, tape.param(*layer.cq)), tape.param(*layer.cbq));
    Var ck = add_row_broadcast(matmul_nt(memory, tape.param(*layer.ck)), tape.param(*layer.cbk));
    Var cv = add_row_broadcast(matmul_nt(memory, tape.param(*layer.cv)), tape.param(*layer.cbv));
    Var cross_ctx = multi_head_attention(tape, cq, ck, cv, cfg_.n_heads, no_mask, norm_sink);
    Var cross_out =
        add_row_broadcast(matmul_nt(cross_ctx, tape.param(*layer.co)), tape.param(*layer.cbo));
    x = layer_norm(add(x, cross_out), tape.param(*layer.ln2g), tape.param(*layer.ln2b));

    Var f = gelu(add_row_broadcast(matmul_nt(x, tape.param(*layer.ff1)), tape.param(*layer.ff1b)));
    Var f2 = add_row_broadcast(matmul_nt(f, tape.param(*layer.ff2)), tape.param(*layer.ff2b));
    x = layer_norm(add(x, f2), tape.param(*layer.ln3g), tape.param(*layer.ln3b));
  }
  return x;
}

Var TransformerDecoder::project(Tape& tape, Var states) const {
  return matmul_nt(states, tape.param(*w_out_));
}

}  // namespace psygen
