#include "psygen/encoder.hpp"

#include <cmath>

namespace psygen {

using namespace nn;

void ModelConfig::validate() const {
  PSYGEN_CHECK(d_model > 0 && n_heads > 0 && d_model % n_heads == 0, Status::Config,
               "d_model must be a positive multiple of n_heads");
  PSYGEN_CHECK(n_layers >= 0, Status::Config, "n_layers must be non-negative");
  PSYGEN_CHECK(ffn_width > 0, Status::Config, "ffn_width must be positive");
  PSYGEN_CHECK(d_plan > 0, Status::Config, "d_plan must be positive");
  PSYGEN_CHECK(vocab_size > Vocabulary::kReservedCount, Status::Config,
               "vocab_size must exceed the reserved block");
  PSYGEN_CHECK(max_len >= 40, Status::Config,
               "max_len must fit the five-block skeleton (>= 40)");
  PSYGEN_CHECK(max_target_len >= 4, Status::Config, "max_target_len must be at least 4");
  PSYGEN_CHECK(dropout >= 0.0 && dropout < 1.0, Status::Config, "dropout must lie in [0,1)");
  PSYGEN_CHECK(label_smoothing >= 0.0 && label_smoothing < 1.0, Status::Config,
               "label_smoothing must lie in [0,1)");
}

KvConfig ModelConfig::to_kv() const {
  KvConfig kv;
  kv.set("d_model", std::to_string(d_model));
  kv.set("n_layers", std::to_string(n_layers));
  kv.set("n_heads", std::to_string(n_heads));
  kv.set("ffn_width", std::to_string(ffn_width));
  kv.set("d_plan", std::to_string(d_plan));
  kv.set("vocab_size", std::to_string(vocab_size));
  kv.set("max_len", std::to_string(max_len));
  kv.set("max_target_len", std::to_string(max_target_len));
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", dropout);
  kv.set("dropout", buf);
  std::snprintf(buf, sizeof(buf), "%.17g", label_smoothing);
  kv.set("label_smoothing", buf);
  kv.set("seed", std::to_string(seed));
  kv.set("tracker_bias", tracker_bias ? "1" : "0");
  kv.set("tracker_skip_last", tracker_skip_last ? "1" : "0");
  kv.set("fuse_last_position", fuse_last_position ? "1" : "0");
  return kv;
}

ModelConfig ModelConfig::from_kv(const KvConfig& kv) {
  ModelConfig cfg;
  cfg.d_model = static_cast<int>(kv.get_int("d_model", cfg.d_model));
  cfg.n_layers = static_cast<int>(kv.get_int("n_layers", cfg.n_layers));
  cfg.n_heads = static_cast<int>(kv.get_int("n_heads", cfg.n_heads));
  cfg.ffn_width = static_cast<int>(kv.get_int("ffn_width", cfg.ffn_width));
  cfg.d_plan = static_cast<int>(kv.get_int("d_plan", cfg.d_plan));
  cfg.vocab_size = static_cast<int>(kv.get_int("vocab_size", cfg.vocab_size));
  cfg.max_len = static_cast<int>(kv.get_int("max_len", cfg.max_len));
  cfg.max_target_len = static_cast<int>(kv.get_int("max_target_len", cfg.max_target_len));
  cfg.dropout = kv.get_double("dropout", cfg.dropout);
  cfg.label_smoothing = kv.get_double("label_smoothing", cfg.label_smoothing);
  cfg.seed = static_cast<uint64_t>(kv.get_int("seed", static_cast<int64_t>(cfg.seed)));
  cfg.tracker_bias = kv.get_bool("tracker_bias", cfg.tracker_bias);
  cfg.tracker_skip_last = kv.get_bool("tracker_skip_last", cfg.tracker_skip_last);
  cfg.fuse_last_position = kv.get_bool("fuse_last_position", cfg.fuse_last_position);
  return cfg;
}

SerializedInput serialize(const TrainingSample& sample, const Vocabulary& vocab,
                          const ModelConfig& cfg) {
  PSYGEN_CONTRACT(sample.m >= 2 && sample.m <= kEventsPerStory, "sample m out of range");
  PSYGEN_CONTRACT(sample.context.size() == static_cast<size_t>(sample.m - 1),
                  "context must hold m-1 events");
  PSYGEN_CONTRACT(sample.mentions.size() == static_cast<size_t>(sample.m),
                  "mentions must hold m entries");
  const int m = sample.m;

  std::vector<std::vector<int>> mention_ids(static_cast<size_t>(m));
  std::vector<std::vector<int>> word_ids(static_cast<size_t>(m - 1));
  size_t skeleton = 0;
  size_t total = 0;
  for (int i = 0; i < m; ++i) {
    mention_ids[static_cast<size_t>(i)] = vocab.encode_text(sample.mentions[static_cast<size_t>(i)]);
    skeleton += 5 + mention_ids[static_cast<size_t>(i)].size();  // ned n emo e pgt mention
  }
  skeleton += static_cast<size_t>(m - 1);  // one cxt per context event
  total = skeleton;
  for (int i = 0; i < m - 1; ++i) {
    word_ids[static_cast<size_t>(i)] = vocab.encode_text(sample.context[static_cast<size_t>(i)]);
    total += word_ids[static_cast<size_t>(i)].size();
  }

  PSYGEN_CONTRACT(skeleton <= static_cast<size_t>(cfg.max_len),
                  "serialized skeleton exceeds max_len; raise max_len or shorten mentions");
  // Oldest words go first: drain event 1's words from the front, then
  // event 2's, until the sequence fits.
  for (int i = 0; i < m - 1 && total > static_cast<size_t>(cfg.max_len); ++i) {
    auto& words = word_ids[static_cast<size_t>(i)];
    size_t excess = total - static_cast<size_t>(cfg.max_len);
    size_t drop = std::min(excess, words.size());
    words.erase(words.begin(), words.begin() + static_cast<long>(drop));
    total -= drop;
  }
  PSYGEN_CONTRACT(total <= static_cast<size_t>(cfg.max_len), "truncation failed to fit max_len");

  SerializedInput out;
  out.m = m;
  out.ids.reserve(total);
  for (int i = 0; i < m; ++i) {
    out.ned_pos.push_back(static_cast<int>(out.ids.size()));
    out.ids.push_back(Vocabulary::kNedMarker);
    out.ids.push_back(vocab.need_id(sample.needs[static_cast<size_t>(i)]));
    out.emo_pos.push_back(static_cast<int>(out.ids.size()));
    out.ids.push_back(Vocabulary::kEmoMarker);
    out.ids.push_back(vocab.emotion_id(sample.emotions[static_cast<size_t>(i)]));
    out.pgt_pos.push_back(static_cast<int>(out.ids.size()));
    out.ids.push_back(Vocabulary::kPgtMarker);
    for (int id : mention_ids[static_cast<size_t>(i)]) out.ids.push_back(id);
    if (i < m - 1) {
      for (int id : word_ids[static_cast<size_t>(i)]) out.ids.push_back(id);
      out.cxt_pos.push_back(static_cast<int>(out.ids.size()));
      out.ids.push_back(Vocabulary::kCxtMarker);
    }
  }
  PSYGEN_CONTRACT(out.ids.size() == total, "serialize length bookkeeping mismatch");
  return out;
}

DeserializedLabels deserialize_labels(const SerializedInput& in, const Vocabulary& vocab) {
  DeserializedLabels out;
  const auto& ids = in.ids;
  for (size_t p = 0; p < ids.size(); ++p) {
    if (ids[p] != Vocabulary::kNedMarker) continue;
    PSYGEN_CHECK(p + 3 < ids.size(), Status::Data, "truncated label block");
    int n = ids[p + 1] - Vocabulary::kNeedBase;
    PSYGEN_CHECK(n >= 0 && n < kNumNeeds, Status::Data, "need marker not followed by a need token");
    PSYGEN_CHECK(ids[p + 2] == Vocabulary::kEmoMarker, Status::Data,
                 "need block not followed by an emotion block");
    int e = ids[p + 3] - Vocabulary::kEmotionBase;
    PSYGEN_CHECK(e >= 0 && e < kNumEmotions, Status::Data,
                 "emotion marker not followed by an emotion token");
    out.needs.push_back(static_cast<Need>(n));
    out.emotions.push_back(static_cast<Emotion>(e));
  }
  out.m = static_cast<int>(out.needs.size());
  (void)vocab;
  return out;
}

TransformerEncoder::TransformerEncoder(ParamStore& store, const ModelConfig& cfg, Param* tok_emb,
                                       const std::string& prefix)
    : cfg_(cfg), tok_emb_(tok_emb) {
  Rng rng(cfg.seed ^ fnv1a(prefix));
  const int d = cfg.d_model;
  pos_emb_ = &store.create(prefix + ".pos", cfg.max_len, d, 0.02, rng);
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
    layer.ff1 = &store.create(lp + ".ff1", cfg.ffn_width, d, 0.02, rng);
    layer.ff1b = &store.create_zeros(lp + ".ff1b", 1, cfg.ffn_width);
    layer.ff2 = &store.create(lp + ".ff2", d, cfg.ffn_width, 0.02, rng);
    layer.ff2b = &store.create_zeros(lp + ".ff2b", 1, d);
    layer.ln1g = &store.create_const(lp + ".ln1g", 1, d, 1.0);
    layer.ln1b = &store.create_zeros(lp + ".ln1b", 1, d);
    layer.ln2g = &store.create_const(lp + ".ln2g", 1, d, 1.0);
    layer.ln2b = &store.create_zeros(lp + ".ln2b", 1, d);
    layers_.push_back(layer);
  }
}

Var multi_head_attention(Tape& tape, Var q_in, Var k_in, Var v_in, int n_heads, const Mat& mask,
                         std::vector<Mat>* norm_sink) {
  const Eigen::Index d = q_in.cols();
  PSYGEN_CONTRACT(d % n_heads == 0, "attention width not divisible by head count");
  const Eigen::Index dh = d / n_heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(static_cast<size_t>(n_heads));
  for (int h = 0; h < n_heads; ++h) {
    Var qh = slice_cols(q_in, h * dh, dh);
    Var kh = slice_cols(k_in, h * dh, dh);
    Var vh = slice_cols(v_in, h * dh, dh);
    Var scores = scale(matmul_nt(qh, kh), inv_scale);
    Var att = mask.size() > 0 ? softmax_rows_masked(scores, mask) : softmax_rows(scores);
    if (norm_sink) norm_sink->push_back(att.value());
    heads.push_back(matmul(att, vh));
  }
  Var ctx = heads[0];
  for (size_t h = 1; h < heads.size(); ++h) ctx = concat_cols(ctx, heads[h]);
  return ctx;
}

Var TransformerEncoder::forward(Tape& tape, const std::vector<int>& ids, int valid_len,
                                std::vector<Mat>* norm_sink) const {
  const int L = static_cast<int>(ids.size());
  PSYGEN_CONTRACT(L >= 1 && L <= cfg_.max_len, "encoder input length out of range");
  if (valid_len < 0) valid_len = L;
  PSYGEN_CONTRACT(valid_len >= 1 && valid_len <= L, "encoder valid_len out of range");

  Var tok = tape.param(*tok_emb_);
  Var x = add(gather_rows(tok, ids),
              slice_rows(tape.param(*pos_emb_), 0, L));

  Mat mask;
  if (valid_len < L) {
    mask = Mat::Zero(L, L);
    for (int r = 0; r < L; ++r)
      for (int c = valid_len; c < L; ++c) mask(r, c) = -1e30;
  }

  for (const auto& layer : layers_) {
    Var q = add_row_broadcast(matmul_nt(x, tape.param(*layer.wq)), tape.param(*layer.bq));
    Var k = add_row_broadcast(matmul_nt(x, tape.param(*layer.wk)), tape.param(*layer.bk));
    Var v = add_row_broadcast(matmul_nt(x, tape.param(*layer.wv)), tape.param(*layer.bv));
    Var ctx = multi_head_attention(tape, q, k, v, cfg_.n_heads, mask, norm_sink);
    Var att = add_row_broadcast(matmul_nt(ctx, tape.param(*layer.wo)), tape.param(*layer.bo));
    x = layer_norm(add(x, att), tape.param(*layer.ln1g), tape.param(*layer.ln1b));
    Var f = gelu(add_row_broadcast(matmul_nt(x, tape.param(*layer.ff1)), tape.param(*layer.ff1b)));
    Var f2 = add_row_broadcast(matmul_nt(f, tape.param(*layer.ff2)), tape.param(*layer.ff2b));
    x = layer_norm(add(x, f2), tape.param(*layer.ln2g), tape.param(*layer.ln2b));
  }
  return x;
}

EncoderStates encode_sample(Tape& tape, const TransformerEncoder& enc, const SerializedInput& in,
                            std::vector<Mat>* norm_sink) {
  EncoderStates st;
  st.H = enc.forward(tape, in.ids, -1, norm_sink);
  for (int i = 0; i < in.m; ++i) {
    st.h_n.push_back(row(st.H, in.ned_pos[static_cast<size_t>(i)]));
    st.h_e.push_back(row(st.H, in.emo_pos[static_cast<size_t>(i)]));
    st.h_p.push_back(row(st.H, in.pgt_pos[static_cast<size_t>(i)]));
  }
  PSYGEN_CONTRACT(!in.cxt_pos.empty(), "sample must carry at least one context event");
  st.h_c = row(st.H, in.cxt_pos.back());
  return st;
}

}  // namespace psygen
