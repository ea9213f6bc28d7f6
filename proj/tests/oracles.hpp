#pragma once

// Scalar-loop reference implementations and shared fixtures for the test
// suite. Every oracle here recomputes its quantity with plain element loops,
// independent of the tape ops, so the two paths can only agree if both are
// right. Keep this header free of doctest so the acceptance runner can use
// it too.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "psygen/beam.hpp"
#include "psygen/common.hpp"
#include "psygen/corpus.hpp"
#include "psygen/encoder.hpp"
#include "psygen/nn.hpp"
#include "psygen/vocab.hpp"

namespace oracle {

using psygen::nn::Mat;

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// x is 1 x k, w is m x k; returns x * w^T as 1 x m.
inline Mat row_nt(const Mat& x, const Mat& w) {
  Mat out = Mat::Zero(1, w.rows());
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < w.cols(); ++c) acc += x(0, c) * w(r, c);
    out(0, r) = acc;
  }
  return out;
}

inline Mat memory_step(const Mat& m, const Mat& h, const Mat& w1, const Mat& w2, const Mat& w3,
                       const Mat& w4, const Mat* b_cand, const Mat* b_gate) {
  Mat a = row_nt(m, w1), b = row_nt(h, w2);
  Mat c = row_nt(m, w3), d = row_nt(h, w4);
  Mat out = Mat::Zero(1, m.cols());
  for (Eigen::Index i = 0; i < m.cols(); ++i) {
    double cand = std::tanh(a(0, i) + b(0, i) + (b_cand ? (*b_cand)(0, i) : 0.0));
    double gate = sig(c(0, i) + d(0, i) + (b_gate ? (*b_gate)(0, i) : 0.0));
    out(0, i) = gate * cand + (1.0 - gate) * m(0, i);
  }
  return out;
}

struct GruParams {
  Mat wr, ur, br, wz, uz, bz, wc, uc, bc;
};

inline Mat store_mat(const psygen::nn::ParamStore& store, const std::string& name) {
  const psygen::nn::Param* p = store.find(name);
  PSYGEN_CHECK(p != nullptr, psygen::Status::Internal, "missing param " + name);
  return p->value;
}

inline GruParams gru_params(const psygen::nn::ParamStore& store, const std::string& prefix) {
  GruParams g;
  g.wr = store_mat(store, prefix + ".wr");
  g.ur = store_mat(store, prefix + ".ur");
  g.br = store_mat(store, prefix + ".br");
  g.wz = store_mat(store, prefix + ".wz");
  g.uz = store_mat(store, prefix + ".uz");
  g.bz = store_mat(store, prefix + ".bz");
  g.wc = store_mat(store, prefix + ".wc");
  g.uc = store_mat(store, prefix + ".uc");
  g.bc = store_mat(store, prefix + ".bc");
  return g;
}

inline Mat gru_step(const GruParams& g, const Mat& x, const Mat& h) {
  Mat xr = row_nt(x, g.wr), hr = row_nt(h, g.ur);
  Mat xz = row_nt(x, g.wz), hz = row_nt(h, g.uz);
  const Eigen::Index n = h.cols();
  Mat r(1, n), z(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(0, i) = sig(xr(0, i) + hr(0, i) + g.br(0, i));
    z(0, i) = sig(xz(0, i) + hz(0, i) + g.bz(0, i));
  }
  Mat rh(1, n);
  for (Eigen::Index i = 0; i < n; ++i) rh(0, i) = r(0, i) * h(0, i);
  Mat xc = row_nt(x, g.wc), hc = row_nt(rh, g.uc);
  Mat out(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double cand = std::tanh(xc(0, i) + hc(0, i) + g.bc(0, i));
    out(0, i) = (1.0 - z(0, i)) * cand + z(0, i) * h(0, i);
  }
  return out;
}

// Bidirectional pass over a short sequence: out[i] = [fwd_i | bwd_i].
inline std::vector<Mat> bigru_run(const std::vector<Mat>& xs, const GruParams& fwd,
                                  const GruParams& bwd, Eigen::Index hidden) {
  const size_t n = xs.size();
  std::vector<Mat> f(n), b(n);
  Mat h = Mat::Zero(1, hidden);
  for (size_t i = 0; i < n; ++i) {
    h = gru_step(fwd, xs[i], h);
    f[i] = h;
  }
  h = Mat::Zero(1, hidden);
  for (size_t i = n; i-- > 0;) {
    h = gru_step(bwd, xs[i], h);
    b[i] = h;
  }
  std::vector<Mat> out(n);
  for (size_t i = 0; i < n; ++i) {
    Mat row(1, 2 * hidden);
    for (Eigen::Index j = 0; j < hidden; ++j) {
      row(0, j) = f[i](0, j);
      row(0, hidden + j) = b[i](0, j);
    }
    out[i] = row;
  }
  return out;
}

// Numerically safe softmax of a 1 x n row.
inline Mat softmax_row(const Mat& x) {
  double mx = x(0, 0);
  for (Eigen::Index i = 1; i < x.cols(); ++i) mx = std::max(mx, x(0, i));
  Mat out(1, x.cols());
  double z = 0.0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    out(0, i) = std::exp(x(0, i) - mx);
    z += out(0, i);
  }
  for (Eigen::Index i = 0; i < x.cols(); ++i) out(0, i) /= z;
  return out;
}

// Dot-product attention with the keys doubling as values.
inline std::pair<Mat, Mat> guided_attention(const Mat& q, const std::vector<Mat>& keys) {
  const Eigen::Index d = q.cols();
  Mat scores(1, static_cast<Eigen::Index>(keys.size()));
  for (size_t i = 0; i < keys.size(); ++i) {
    double dot = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) dot += q(0, j) * keys[i](0, j);
    scores(0, static_cast<Eigen::Index>(i)) = dot / std::sqrt(static_cast<double>(d));
  }
  Mat alpha = softmax_row(scores);
  Mat ctx = Mat::Zero(1, d);
  for (size_t i = 0; i < keys.size(); ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      ctx(0, j) += alpha(0, static_cast<Eigen::Index>(i)) * keys[i](0, j);
  return {ctx, alpha};
}

inline Mat layer_norm_row(const Mat& x, const Mat& g, const Mat& b, double eps = 1e-5) {
  const Eigen::Index n = x.cols();
  double mean = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) mean += x(0, i);
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) var += (x(0, i) - mean) * (x(0, i) - mean);
  var /= static_cast<double>(n);
  Mat out(1, n);
  for (Eigen::Index i = 0; i < n; ++i)
    out(0, i) = (x(0, i) - mean) / std::sqrt(var + eps) * g(0, i) + b(0, i);
  return out;
}

// Exponential-time LCS over token vectors; only for short inputs.
inline int lcs_brute(const std::vector<std::string>& a, size_t i, const std::vector<std::string>& b,
                     size_t j) {
  if (i == a.size() || j == b.size()) return 0;
  if (a[i] == b[j]) return 1 + lcs_brute(a, i + 1, b, j + 1);
  return std::max(lcs_brute(a, i + 1, b, j), lcs_brute(a, i, b, j + 1));
}

struct FdReport {
  double max_rel = 0.0;
  int coords = 0;
  std::string worst;
};

// Central finite differences against one analytic backward pass. The loss
// callable must rebuild its tape from the store's current values on every
// call; do_backward selects whether gradients are populated.
template <typename LossFn>
inline FdReport fd_check(psygen::nn::ParamStore& store, LossFn&& loss, psygen::Rng& rng,
                         int coords_per_param = 4, double h = 1e-5) {
  store.zero_grads();
  (void)loss(true);
  std::vector<Mat> grads;
  grads.reserve(store.items().size());
  for (const auto& p : store.items()) grads.push_back(p->grad);

  FdReport rep;
  size_t pi = 0;
  for (const auto& p : store.items()) {
    const Mat& g = grads[pi++];
    for (int k = 0; k < coords_per_param; ++k) {
      Eigen::Index r = static_cast<Eigen::Index>(rng.index(static_cast<size_t>(p->value.rows())));
      Eigen::Index c = static_cast<Eigen::Index>(rng.index(static_cast<size_t>(p->value.cols())));
      const double orig = p->value(r, c);
      p->value(r, c) = orig + h;
      const double lp = loss(false);
      p->value(r, c) = orig - h;
      const double lm = loss(false);
      p->value(r, c) = orig;
      const double num = (lp - lm) / (2.0 * h);
      const double ana = g.size() > 0 ? g(r, c) : 0.0;
      const double rel = std::abs(ana - num) / std::max(1e-5, std::abs(ana) + std::abs(num));
      ++rep.coords;
      if (rel > rep.max_rel) {
        rep.max_rel = rel;
        rep.worst = p->name + "(" + std::to_string(r) + "," + std::to_string(c) + ")";
      }
    }
  }
  return rep;
}

// ---- beam search references ----

inline bool repeats_trigram_ref(const std::vector<int>& toks, int cand) {
  const size_t n = toks.size();
  if (n < 2) return false;
  const int a = toks[n - 2], b = toks[n - 1];
  for (size_t i = 0; i + 2 < n; ++i)
    if (toks[i] == a && toks[i + 1] == b && toks[i + 2] == cand) return true;
  return false;
}

struct SeqScore {
  std::vector<int> toks;
  double score = 0.0;
};

// Strict "a ranks ahead of b" under the beam's final ordering.
inline bool seq_better(const SeqScore& a, const SeqScore& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.toks < b.toks;
}

namespace detail {
inline void enumerate_rec(const psygen::StepFn& step, const psygen::BeamOptions& o,
                          std::vector<int>& prefix, std::vector<int>& toks, double logp,
                          std::vector<SeqScore>& finals) {
  auto norm = [&o](double lp, size_t len) {
    return lp / std::pow(static_cast<double>(len) + 1.0, o.length_exponent);
  };
  const int t = static_cast<int>(toks.size());
  if (t == o.max_len) {
    finals.push_back({toks, norm(logp, toks.size())});
    return;
  }
  Eigen::VectorXd lp = step(prefix);
  for (int v = 0; v < lp.size(); ++v) {
    if (!std::isfinite(lp[v])) continue;
    if (v == o.eos) {
      if (t >= o.min_len) finals.push_back({toks, norm(logp + lp[v], toks.size())});
      continue;
    }
    if (o.block_trigrams && repeats_trigram_ref(toks, v)) continue;
    toks.push_back(v);
    prefix.push_back(v);
    enumerate_rec(step, o, prefix, toks, logp + lp[v], finals);
    prefix.pop_back();
    toks.pop_back();
  }
}
}  // namespace detail

// Full enumeration of every finishable sequence; feasible only for tiny
// vocabularies and max_len. Ties resolve exactly like the beam's final sort.
inline SeqScore enumerate_best(const psygen::StepFn& step, const psygen::BeamOptions& o) {
  std::vector<int> prefix = {o.bos};
  std::vector<int> toks;
  std::vector<SeqScore> finals;
  detail::enumerate_rec(step, o, prefix, toks, 0.0, finals);
  PSYGEN_CHECK(!finals.empty(), psygen::Status::Internal, "enumeration found nothing");
  SeqScore best = finals[0];
  for (const auto& s : finals)
    if (seq_better(s, best)) best = s;
  return best;
}

struct GreedyOut {
  std::vector<int> toks;
  double score = 0.0;
  bool fallback = false;
};

// Step-by-step argmax under the same candidate filter a width-1 beam sees,
// including the unblocked restart when blocking starves the search.
inline GreedyOut greedy_ref(const psygen::StepFn& step, const psygen::BeamOptions& o) {
  auto run = [&step, &o](bool block, bool& starved) {
    GreedyOut out;
    std::vector<int> prefix = {o.bos};
    double logp = 0.0;
    for (int t = 0; t < o.max_len; ++t) {
      Eigen::VectorXd lp = step(prefix);
      int best = -1;
      double best_lp = 0.0;
      for (int v = 0; v < lp.size(); ++v) {
        if (!std::isfinite(lp[v])) continue;
        if (v == o.eos && t < o.min_len) continue;
        if (v != o.eos && block && repeats_trigram_ref(out.toks, v)) continue;
        if (best < 0 || lp[v] > best_lp) {
          best = v;
          best_lp = lp[v];
        }
      }
      if (best < 0) {
        starved = true;
        return out;
      }
      logp += best_lp;
      if (best == o.eos) break;
      out.toks.push_back(best);
      prefix.push_back(best);
    }
    out.score =
        logp / std::pow(static_cast<double>(out.toks.size()) + 1.0, o.length_exponent);
    return out;
  };
  bool starved = false;
  GreedyOut out = run(o.block_trigrams, starved);
  if (!starved) return out;
  bool ignored = false;
  out = run(false, ignored);
  out.score = 0.0;
  out.fallback = true;
  return out;
}

// Deterministic pure step function: log-probabilities derived from a hash of
// the prefix, so repeated calls with the same prefix agree exactly.
inline psygen::StepFn hashed_step_fn(int vocab, uint64_t seed, double sharp = 1.0) {
  return [vocab, seed, sharp](const std::vector<int>& prefix) {
    uint64_t h = seed ^ 0x9e3779b97f4a7c15ull;
    for (int t : prefix) h = (h ^ static_cast<uint64_t>(t + 1)) * 1099511628211ull;
    psygen::Rng rng(h);
    Eigen::VectorXd logits(vocab);
    for (int v = 0; v < vocab; ++v) logits[v] = sharp * rng.normal();
    const double mx = logits.maxCoeff();
    const double lse = mx + std::log((logits.array() - mx).exp().sum());
    return Eigen::VectorXd((logits.array() - lse).matrix());
  };
}

// ---- filesystem and error helpers ----

struct TempDir {
  std::string path;

  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "psygen-XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    PSYGEN_CHECK(mkdtemp(buf.data()) != nullptr, psygen::Status::Io, "mkdtemp failed");
    path = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const {
    return (std::filesystem::path(path) / name).string();
  }
};

// Runs f and reports which status it threw; Ok means it did not throw.
template <typename F>
inline psygen::Status thrown_status(F&& f) {
  try {
    f();
  } catch (const psygen::Error& e) {
    return e.status();
  }
  return psygen::Status::Ok;
}

// ---- tiny shared fixtures ----

inline psygen::ModelConfig tiny_config(uint64_t seed = 7) {
  psygen::ModelConfig cfg;
  cfg.d_model = 16;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.ffn_width = 32;
  cfg.d_plan = 8;
  cfg.vocab_size = 64;  // models built through StoryModel override this
  cfg.max_len = 96;
  cfg.max_target_len = 10;
  cfg.dropout = 0.0;
  cfg.label_smoothing = 0.1;
  cfg.seed = seed;
  return cfg;
}

inline const std::array<std::string, 5>& tiny_events() {
  static const std::array<std::string, 5> ev = {
      "alice went to the park",
      "she found a shiny coin",
      "she smiled at her friends",
      "alice lost her keys",
      "she cried all the way home",
  };
  return ev;
}

inline psygen::Vocabulary tiny_vocab() {
  psygen::Vocabulary v;
  for (const char* w :
       {"alice", "went", "to", "the", "park", "she", "found", "a", "shiny", "coin", "smiled",
        "at", "her", "friends", "lost", "keys", "cried", "all", "way", "home", "bob", "ate",
        "warm", "bread", "he", "slept", "very", "well", "today", "ran"})
    v.add(w);
  return v;
}

inline psygen::TrainingSample tiny_sample(int m) {
  using psygen::Emotion;
  using psygen::Need;
  const auto& ev = tiny_events();
  const std::array<std::string, 5> mention = {"alice", "she", "she", "alice", "she"};
  const psygen::NeedChain needs = {Need::Physiological, Need::Stability, Need::Esteem,
                                   Need::Stability, Need::Love};
  const psygen::EmotionChain emos = {Emotion::Anticipation, Emotion::Joy, Emotion::Joy,
                                     Emotion::Sadness, Emotion::Sadness};
  psygen::TrainingSample s;
  s.story_id = "tiny-1";
  s.m = m;
  for (int i = 0; i < m - 1; ++i) s.context.push_back(ev[i]);
  for (int i = 0; i < m; ++i) {
    s.mentions.push_back(mention[i]);
    s.needs.push_back(needs[i]);
    s.emotions.push_back(emos[i]);
  }
  s.need_chain = needs;
  s.emotion_chain = emos;
  s.target = ev[m - 1];
  return s;
}

}  // namespace oracle
