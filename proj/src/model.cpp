#include "psygen/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace psygen {

using namespace nn;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

StoryModel::StoryModel(const ModelConfig& cfg, Vocabulary vocab)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  cfg_.vocab_size = vocab_.size();
  cfg_.validate();
  Rng rng(cfg_.seed ^ fnv1a("emb.tok"));
  tok_emb_ = &store_.create("emb.tok", cfg_.vocab_size, cfg_.d_model, 0.02, rng);
  encoder_ = std::make_unique<TransformerEncoder>(store_, cfg_, tok_emb_, "enc");
  need_tracker_ = std::make_unique<MemoryTracker>(store_, cfg_, "trk_need");
  emotion_tracker_ = std::make_unique<MemoryTracker>(store_, cfg_, "trk_emo");
  need_planner_ = std::make_unique<ChainPlanner>(store_, cfg_, kNumNeeds, "pln_need");
  emotion_planner_ = std::make_unique<ChainPlanner>(store_, cfg_, kNumEmotions, "pln_emo");
  controller_ = std::make_unique<PsychologyController>(store_, cfg_, "ctl");
  decoder_ = std::make_unique<TransformerDecoder>(store_, cfg_, tok_emb_, "dec");
}

TrainingSample StoryModel::effective_sample(const TrainingSample& sample,
                                            const AblationFlags& flags) const {
  if (!flags.no_need && !flags.no_emotion) return sample;
  TrainingSample eff = sample;
  if (flags.no_need) {
    std::fill(eff.needs.begin(), eff.needs.end(), Need::None);
    eff.need_chain.fill(Need::None);
  }
  if (flags.no_emotion) {
    std::fill(eff.emotions.begin(), eff.emotions.end(), Emotion::None);
    eff.emotion_chain.fill(Emotion::None);
  }
  return eff;
}

Var StoryModel::conditioning(Tape& tape, const TrainingSample& eff, const AblationFlags& flags,
                             std::vector<Mat>* sink, ForwardDiagnostics* diag) const {
  SerializedInput ser = serialize(eff, vocab_, cfg_);
  EncoderStates es = encode_sample(tape, *encoder_, ser, sink);
  if (flags.no_controller) return es.H;

  Var h_p_char = pool_rows(tape, es.h_p);
  Var need_mem, emo_mem;
  if (flags.no_tracker) {
    need_mem = tape.constant(Mat::Zero(1, cfg_.d_model));
    emo_mem = need_mem;
  } else {
    need_mem = need_tracker_->fold(tape, es.h_n, cfg_.tracker_skip_last);
    emo_mem = emotion_tracker_->fold(tape, es.h_e, cfg_.tracker_skip_last);
  }
  auto local = controller_->local_control(tape, es.h_c, h_p_char, need_mem, emo_mem, es.h_n,
                                          es.h_e, flags.no_tracker);

  Var h_star_n, h_star_e;
  if (flags.no_planner) {
    h_star_n = tape.constant(Mat::Zero(1, 2 * cfg_.d_plan));
    h_star_e = h_star_n;
  } else {
    std::vector<int> nchain, echain;
    for (auto n : eff.need_chain) nchain.push_back(static_cast<int>(n));
    for (auto e : eff.emotion_chain) echain.push_back(static_cast<int>(e));
    h_star_n = select_plan(need_planner_->plan(tape, nchain), eff.m);
    h_star_e = select_plan(emotion_planner_->plan(tape, echain), eff.m);
  }
  auto global = controller_->global_control(tape, local.h_prime, h_star_n, h_star_e,
                                            flags.no_planner);
  if (sink) {
    sink->push_back(local.alpha_n.value());
    sink->push_back(local.alpha_e.value());
    sink->push_back(global.beta.value());
  }
  if (diag) {
    diag->alpha_n = local.alpha_n.value();
    diag->alpha_e = local.alpha_e.value();
    diag->beta = global.beta.value();
  }
  return concat_rows(es.H, global.H_c);
}

Var StoryModel::loss(Tape& tape, const TrainingSample& sample, const AblationFlags& flags,
                     double eps, ForwardDiagnostics* diag) const {
  TrainingSample eff = effective_sample(sample, flags);
  std::vector<Mat>* sink = diag ? &diag->distributions : nullptr;
  Var memory = conditioning(tape, eff, flags, sink, diag);

  std::vector<int> y = vocab_.encode_text(eff.target);
  PSYGEN_CHECK(!y.empty(), Status::Data, "sample target has no tokens");
  if (static_cast<int>(y.size()) > cfg_.max_target_len - 1)
    y.resize(static_cast<size_t>(cfg_.max_target_len - 1));
  std::vector<int> in = {Vocabulary::kBos};
  in.insert(in.end(), y.begin(), y.end());
  std::vector<int> out = y;
  out.push_back(Vocabulary::kEos);

  Var states = decoder_->forward(tape, in, memory, sink);
  Var logits = decoder_->project(tape, states);
  if (diag) {
    Var probs = softmax_rows(logits);
    diag->output_probs = probs.value();
    diag->distributions.push_back(probs.value());
  }
  double smooth = eps < 0.0 ? cfg_.label_smoothing : eps;
  return cross_entropy_smoothed(logits, out, smooth);
}

double StoryModel::loss_value(const TrainingSample& sample, const AblationFlags& flags,
                              double eps) const {
  Tape tape;
  return loss(tape, sample, flags, eps).value()(0, 0);
}

int StoryModel::target_token_count(const TrainingSample& sample) const {
  int n = static_cast<int>(vocab_.encode_text(sample.target).size());
  return std::min(n, cfg_.max_target_len - 1) + 1;
}

StoryModel::Prepared StoryModel::prepare(Tape& tape, const TrainingSample& sample,
                                         const AblationFlags& flags,
                                         ForwardDiagnostics* diag) const {
  TrainingSample eff = effective_sample(sample, flags);
  std::vector<Mat>* sink = diag ? &diag->distributions : nullptr;
  Prepared prep;
  prep.memory = conditioning(tape, eff, flags, sink, diag);
  prep.mark = tape.size();
  return prep;
}

Eigen::VectorXd StoryModel::step_logprobs(Tape& tape, const Prepared& prep,
                                          const std::vector<int>& prefix) const {
  PSYGEN_CONTRACT(!prefix.empty() && prefix[0] == Vocabulary::kBos,
                  "decode prefix must start with bos");
  Var states = decoder_->forward(tape, prefix, prep.memory, nullptr);
  Var logits = decoder_->project(tape, states);
  Eigen::VectorXd row = logits.value().row(logits.rows() - 1).transpose();
  tape.truncate(prep.mark);

  // Structural ids never generate: pad, bos, markers, and label tokens live
  // only in the serialized input layout.
  row[Vocabulary::kPad] = -1e30;
  row[Vocabulary::kBos] = -1e30;
  for (int id = Vocabulary::kNedMarker; id < Vocabulary::kReservedCount; ++id)
    if (id != Vocabulary::kEos && id != Vocabulary::kUnk) row[id] = -1e30;

  double mx = row.maxCoeff();
  double lse = mx + std::log((row.array() - mx).exp().sum());
  return row.array() - lse;
}

std::vector<int> StoryModel::generate_event(const TrainingSample& sample,
                                            const AblationFlags& flags, const BeamOptions& opts,
                                            bool* used_fallback) const {
  Tape tape;
  Prepared prep = prepare(tape, sample, flags);
  BeamOptions local = opts;
  local.bos = Vocabulary::kBos;
  local.eos = Vocabulary::kEos;
  local.max_len = std::min(opts.max_len, cfg_.max_target_len);
  StepFn step = [this, &tape, &prep](const std::vector<int>& prefix) {
    return step_logprobs(tape, prep, prefix);
  };
  BeamResult res = beam_search(step, local);
  if (used_fallback) *used_fallback = res.used_fallback;
  return res.tokens;
}

StoryRecord StoryModel::rollout(const StoryRecord& given, const AblationFlags& flags,
                                const BeamOptions& opts, std::vector<bool>* fallbacks) const {
  PSYGEN_CHECK(!given.events[0].empty(), Status::Data, "rollout needs a nonempty leading event");
  StoryRecord out = given;
  if (fallbacks) fallbacks->assign(4, false);
  for (int m = 2; m <= kEventsPerStory; ++m) {
    TrainingSample s;
    s.story_id = out.story_id;
    s.m = m;
    for (int i = 0; i < m - 1; ++i) s.context.push_back(out.events[static_cast<size_t>(i)]);
    for (int i = 0; i < m; ++i) {
      s.mentions.push_back(out.mentions[static_cast<size_t>(i)]);
      s.needs.push_back(out.needs[static_cast<size_t>(i)]);
      s.emotions.push_back(out.emotions[static_cast<size_t>(i)]);
    }
    s.need_chain = out.needs;
    s.emotion_chain = out.emotions;
    s.target = "-";  // unused by generation
    bool fb = false;
    std::vector<int> toks = generate_event(s, flags, opts, &fb);
    if (fallbacks && fb) (*fallbacks)[static_cast<size_t>(m - 2)] = true;
    PSYGEN_CONTRACT(!toks.empty(), "generation produced an empty event");
    out.events[static_cast<size_t>(m - 1)] = vocab_.decode_text(toks);
  }
  return out;
}

namespace {

void put_u64(std::string& buf, uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  buf.append(b, 8);
}

void put_bytes(std::string& buf, const std::string& s) {
  put_u64(buf, s.size());
  buf.append(s);
}

void put_mat(std::string& buf, const Mat& m) {
  put_u64(buf, static_cast<uint64_t>(m.rows()));
  put_u64(buf, static_cast<uint64_t>(m.cols()));
  buf.append(reinterpret_cast<const char*>(m.data()),
             static_cast<size_t>(m.size()) * sizeof(double));
}

struct Cursor {
  const std::string& data;
  size_t pos = 0;

  void need(size_t n) const {
    PSYGEN_CHECK(pos + n <= data.size(), Status::Data, "checkpoint truncated");
  }
  uint64_t u64() {
    need(8);
    uint64_t v;
    std::memcpy(&v, data.data() + pos, 8);
    pos += 8;
    return v;
  }
  std::string bytes() {
    uint64_t n = u64();
    need(n);
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
  Mat mat() {
    uint64_t r = u64(), c = u64();
    PSYGEN_CHECK(r > 0 && c > 0 && r * c < (1ull << 32), Status::Data,
                 "checkpoint matrix has implausible shape");
    size_t n = static_cast<size_t>(r * c) * sizeof(double);
    need(n);
    Mat m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    std::memcpy(m.data(), data.data() + pos, n);
    pos += n;
    return m;
  }
  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(data[pos++]);
  }
};

constexpr const char kMagic[] = "psygen-ckpt-v1\n";

}  // namespace

void save_checkpoint(const StoryModel& model, const std::string& path, bool with_moments,
                     uint64_t adam_steps, const KvConfig& extra) {
  std::string buf;
  buf.append(kMagic);
  put_bytes(buf, model.config().to_kv().canonical());
  put_bytes(buf, model.vocab().to_text());
  const auto& items = model.params().items();
  put_u64(buf, items.size());
  for (const auto& p : items) {
    put_bytes(buf, p->name);
    put_mat(buf, p->value);
  }
  buf.push_back(with_moments ? 1 : 0);
  if (with_moments) {
    put_u64(buf, adam_steps);
    for (const auto& p : items) {
      put_mat(buf, p->adam_m.size() ? p->adam_m : Mat::Zero(p->value.rows(), p->value.cols()));
      put_mat(buf, p->adam_v.size() ? p->adam_v : Mat::Zero(p->value.rows(), p->value.cols()));
    }
  }
  put_bytes(buf, extra.canonical());
  write_file(path, buf);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::string data = read_file(path);
  PSYGEN_CHECK(data.rfind(kMagic, 0) == 0, Status::Data,
               path + " is not a model checkpoint (bad magic)");
  Cursor cur{data, sizeof(kMagic) - 1};
  ModelConfig cfg = ModelConfig::from_kv(KvConfig::from_string(cur.bytes()));
  Vocabulary vocab = Vocabulary::from_text(cur.bytes());
  PSYGEN_CHECK(cfg.vocab_size == vocab.size(), Status::Data,
               "checkpoint vocab_size disagrees with its vocabulary");

  Checkpoint ck;
  ck.model = std::make_unique<StoryModel>(cfg, std::move(vocab));
  auto& store = ck.model->params();
  uint64_t n = cur.u64();
  PSYGEN_CHECK(n == store.items().size(), Status::Data,
               "checkpoint parameter count mismatch: file has " + std::to_string(n) +
                   ", architecture has " + std::to_string(store.items().size()));
  std::vector<Param*> order;
  order.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    std::string name = cur.bytes();
    Param* p = store.find(name);
    PSYGEN_CHECK(p != nullptr, Status::Data, "checkpoint has unknown parameter " + name);
    Mat m = cur.mat();
    PSYGEN_CHECK(m.rows() == p->value.rows() && m.cols() == p->value.cols(), Status::Data,
                 "checkpoint parameter " + name + " has wrong shape");
    p->value = std::move(m);
    order.push_back(p);
  }
  ck.has_moments = cur.u8() != 0;
  if (ck.has_moments) {
    ck.adam_steps = cur.u64();
    for (Param* p : order) {
      p->adam_m = cur.mat();
      p->adam_v = cur.mat();
      PSYGEN_CHECK(p->adam_m.rows() == p->value.rows() && p->adam_m.cols() == p->value.cols() &&
                       p->adam_v.rows() == p->value.rows() && p->adam_v.cols() == p->value.cols(),
                   Status::Data, "checkpoint moments for " + p->name + " have wrong shape");
    }
  }
  ck.extra = KvConfig::from_string(cur.bytes());
  return ck;
}

}  // namespace psygen
