#include "psygen/beam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psygen/common.hpp"

namespace psygen {

namespace {

// True when the trigram ending at the candidate position already occurs
// earlier in the token sequence.
bool repeats_trigram(const std::vector<int>& toks, int candidate) {
  const size_t n = toks.size();
  if (n < 2) return false;
  int a = toks[n - 2], b = toks[n - 1];
  for (size_t i = 0; i + 2 < n; ++i)
    if (toks[i] == a && toks[i + 1] == b && toks[i + 2] == candidate) return true;
  return false;
}

struct Hyp {
  std::vector<int> toks;  // generated, bos excluded
  double logp = 0.0;
};

// Normalization counts one virtual terminal so empty prefixes stay finite
// and finished/unfinished hypotheses share a rule.
double norm_score(double logp, size_t len, double expo) {
  return logp / std::pow(static_cast<double>(len + 1), expo);
}

std::vector<int> greedy_unblocked(const StepFn& step, const BeamOptions& opts) {
  std::vector<int> prefix = {opts.bos};
  std::vector<int> out;
  for (int t = 0; t < opts.max_len; ++t) {
    Eigen::VectorXd lp = step(prefix);
    int best = -1;
    double best_lp = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < lp.size(); ++v) {
      if (v == opts.eos && t < opts.min_len) continue;
      if (lp[v] > best_lp) {
        best_lp = lp[v];
        best = v;
      }
    }
    PSYGEN_CONTRACT(best >= 0, "greedy fallback found no candidate token");
    if (best == opts.eos) break;
    out.push_back(best);
    prefix.push_back(best);
  }
  return out;
}

}  // namespace

BeamResult beam_search(const StepFn& step, const BeamOptions& opts) {
  PSYGEN_CONTRACT(opts.beam >= 1 && opts.max_len >= 1 && opts.min_len >= 0, "bad beam options");
  std::vector<Hyp> alive = {Hyp{}};
  std::vector<std::pair<double, Hyp>> finished;  // (normalized score, hyp)

  for (int t = 0; t < opts.max_len && !alive.empty(); ++t) {
    struct Cand {
      size_t hyp;
      int tok;
      double logp;
    };
    std::vector<Cand> cands;
    for (size_t hi = 0; hi < alive.size(); ++hi) {
      std::vector<int> prefix;
      prefix.reserve(alive[hi].toks.size() + 1);
      prefix.push_back(opts.bos);
      prefix.insert(prefix.end(), alive[hi].toks.begin(), alive[hi].toks.end());
      Eigen::VectorXd lp = step(prefix);
      for (int v = 0; v < lp.size(); ++v) {
        if (!std::isfinite(lp[v])) continue;
        if (v == opts.eos) {
          if (t < opts.min_len) continue;
        } else if (opts.block_trigrams && repeats_trigram(alive[hi].toks, v)) {
          continue;
        }
        cands.push_back(Cand{hi, v, alive[hi].logp + lp[v]});
      }
    }
    if (cands.empty()) {
      if (!finished.empty()) break;
      BeamResult res;
      res.tokens = greedy_unblocked(step, opts);
      res.score = 0.0;
      res.used_fallback = true;
      return res;
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.logp != b.logp) return a.logp > b.logp;
      if (a.hyp != b.hyp) return a.hyp < b.hyp;
      return a.tok < b.tok;
    });
    if (cands.size() > static_cast<size_t>(opts.beam)) cands.resize(static_cast<size_t>(opts.beam));

    std::vector<Hyp> next;
    for (const auto& c : cands) {
      Hyp h = alive[c.hyp];
      h.logp = c.logp;
      if (c.tok == opts.eos) {
        finished.emplace_back(norm_score(h.logp, h.toks.size(), opts.length_exponent),
                              std::move(h));
      } else {
        h.toks.push_back(c.tok);
        next.push_back(std::move(h));
      }
    }
    alive = std::move(next);
  }

  for (auto& h : alive)
    finished.emplace_back(norm_score(h.logp, h.toks.size(), opts.length_exponent), std::move(h));
  PSYGEN_CONTRACT(!finished.empty(), "beam search ended with no hypotheses");
  std::sort(finished.begin(), finished.end(),
            [](const std::pair<double, Hyp>& a, const std::pair<double, Hyp>& b) {
              if (a.first != b.first) return a.first > b.first;
              return a.second.toks < b.second.toks;
            });
  BeamResult res;
  res.tokens = finished.front().second.toks;
  res.score = finished.front().first;
  return res;
}

}  // namespace psygen
