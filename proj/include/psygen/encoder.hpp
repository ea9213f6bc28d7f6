#pragma once

#include <string>
#include <vector>

#include "psygen/corpus.hpp"
#include "psygen/kvconfig.hpp"
#include "psygen/nn.hpp"
#include "psygen/vocab.hpp"

namespace psygen {

using nn::Mat;
using nn::Param;
using nn::ParamStore;
using nn::Tape;
using nn::Var;

struct ModelConfig {
  int d_model = 128;
  int n_layers = 2;
  int n_heads = 4;
  int ffn_width = 256;
  int d_plan = 64;
  int vocab_size = 0;  // set from the vocabulary before building a model
  int max_len = 100;
  int max_target_len = 32;
  double dropout = 0.0;
  double label_smoothing = 0.1;
  uint64_t seed = 1;
  bool tracker_bias = false;      // bias terms in the memory gate/candidate
  bool tracker_skip_last = false; // fold only the first m-1 states
  bool fuse_last_position = false;  // character fusion reads position 1, not 0

  void validate() const;
  KvConfig to_kv() const;
  static ModelConfig from_kv(const KvConfig& kv);
};

/// Flattened model input: per event i the block
///   <ned> n_i <emo> e_i <pgt> p_i (event words) <cxt>
/// with the final block m carrying no event text and no <cxt>.
struct SerializedInput {
  std::vector<int> ids;
  std::vector<int> ned_pos, emo_pos, pgt_pos;  // length m
  std::vector<int> cxt_pos;                    // length m-1
  int m = 0;
};

// Builds the serialized layout, replacing out-of-vocabulary words by unk.
// When the result would exceed max_len, event words are dropped starting
// from the front of the oldest event; markers and labels are never dropped.
SerializedInput serialize(const TrainingSample& sample, const Vocabulary& vocab,
                          const ModelConfig& cfg);

// Recovers (m, needs, emotions) from a serialized input by scanning markers.
// Round-trips serialize exactly; used as a protocol self-check.
struct DeserializedLabels {
  int m = 0;
  std::vector<Need> needs;
  std::vector<Emotion> emotions;
};
DeserializedLabels deserialize_labels(const SerializedInput& in, const Vocabulary& vocab);

/// Post-norm transformer encoder over one serialized sequence.
class TransformerEncoder {
 public:
  TransformerEncoder(ParamStore& store, const ModelConfig& cfg, Param* tok_emb,
                     const std::string& prefix);

  // ids length L <= max_len. valid_len < L marks trailing positions as
  // padding, excluded from every attention row. norm_sink, when set,
  // collects each attention distribution for normalization checks.
  Var forward(Tape& tape, const std::vector<int>& ids, int valid_len = -1,
              std::vector<Mat>* norm_sink = nullptr) const;

 private:
  struct Layer {
    Param *wq, *wk, *wv, *wo, *bq, *bk, *bv, *bo;
    Param *ff1, *ff1b, *ff2, *ff2b;
    Param *ln1g, *ln1b, *ln2g, *ln2b;
  };
  const ModelConfig cfg_;
  Param* tok_emb_;
  Param* pos_emb_;
  std::vector<Layer> layers_;
};

// Multi-head attention shared by encoder and decoder. Computes
// softmax(q k^T / sqrt(d_head)) v per head over given projections.
// mask is additive (0 or -1e30), shape q_rows x k_rows, or empty.
Var multi_head_attention(Tape& tape, Var q_in, Var k_in, Var v_in, int n_heads,
                         const Mat& mask, std::vector<Mat>* norm_sink);

struct EncoderStates {
  Var H;                      // L x d_model
  std::vector<Var> h_n, h_e, h_p;  // m rows each
  Var h_c;                    // row at cxt_pos[m-2]
};

// Runs the encoder and extracts the marker rows per the layout invariants.
EncoderStates encode_sample(Tape& tape, const TransformerEncoder& enc,
                            const SerializedInput& in,
                            std::vector<Mat>* norm_sink = nullptr);

}  // namespace psygen
